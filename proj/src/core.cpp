#include "fedcomp/core.hpp"

#include <atomic>
#include <thread>

namespace fedcomp {

namespace {

ModelVector pairwise(std::span<const ModelVector> xs, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return xs[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise(xs, lo, mid) + pairwise(xs, mid, hi);
}

}  // namespace

ModelVector stable_sum(std::span<const ModelVector> xs) {
  if (xs.empty()) throw UsageError("stable_sum: empty input");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    require_same_dim(xs[0], xs[i], "stable_sum");
  }
  return pairwise(xs, 0, xs.size());
}

ModelVector stable_mean(std::span<const ModelVector> xs) {
  ModelVector s = stable_sum(xs);
  s /= static_cast<double>(xs.size());
  return s;
}

void parallel_for(int count, const std::function<void(int)>& fn) {
  const unsigned hw = std::thread::hardware_concurrency();
  if (hw <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(count)));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::atomic<int> next{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace fedcomp
