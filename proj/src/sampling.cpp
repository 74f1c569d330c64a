#include "fedcomp/sampling.hpp"

#include <algorithm>
#include <numeric>

namespace fedcomp {

SamplingScheme SamplingScheme::full_participation(int n) {
  if (n < 1) throw UsageError("SamplingScheme: n must be >= 1");
  return SamplingScheme(Kind::FullParticipation, n, n, std::vector<double>(n, 1.0));
}

SamplingScheme SamplingScheme::uniform_subset(int subset_size, int n) {
  if (n < 1) throw UsageError("SamplingScheme: n must be >= 1");
  if (subset_size < 1 || subset_size > n) {
    throw UsageError("SamplingScheme: subset size must satisfy 1 <= S <= n");
  }
  const double p = static_cast<double>(subset_size) / static_cast<double>(n);
  return SamplingScheme(Kind::UniformSubset, n, subset_size, std::vector<double>(n, p));
}

SamplingScheme SamplingScheme::independent_bernoulli(std::vector<double> probabilities) {
  const int n = static_cast<int>(probabilities.size());
  if (n < 1) throw UsageError("SamplingScheme: n must be >= 1");
  for (double p : probabilities) {
    if (!(p >= 0.0) || !(p <= 1.0)) {
      throw UsageError("SamplingScheme: Bernoulli probabilities must lie in [0, 1]");
    }
  }
  return SamplingScheme(Kind::IndependentBernoulli, n, n, std::move(probabilities));
}

double SamplingScheme::p_hat() const {
  return *std::min_element(probabilities_.begin(), probabilities_.end());
}

std::optional<int> SamplingScheme::improper_client() const {
  for (int i = 0; i < n_; ++i) {
    if (!(probabilities_[static_cast<std::size_t>(i)] > 0.0)) return i;
  }
  return std::nullopt;
}

std::vector<int> SamplingScheme::draw(int round, std::uint64_t master_seed) const {
  if (auto bad = improper_client()) {
    throw UsageError("SamplingScheme::draw: improper scheme, client " +
                     std::to_string(*bad) + " has zero probability");
  }
  std::vector<int> out;
  switch (kind_) {
    case Kind::FullParticipation: {
      out.resize(static_cast<std::size_t>(n_));
      std::iota(out.begin(), out.end(), 0);
      return out;
    }
    case Kind::UniformSubset: {
      auto eng = rng::engine(rng::derive(master_seed, "sampling",
                                         static_cast<std::uint64_t>(round)));
      // Partial Fisher-Yates: the first S slots are a uniform size-S subset.
      std::vector<int> pool(static_cast<std::size_t>(n_));
      std::iota(pool.begin(), pool.end(), 0);
      for (int j = 0; j < subset_size_; ++j) {
        std::uniform_int_distribution<int> pick(j, n_ - 1);
        std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick(eng))]);
      }
      out.assign(pool.begin(), pool.begin() + subset_size_);
      std::sort(out.begin(), out.end());
      return out;
    }
    case Kind::IndependentBernoulli: {
      auto eng = rng::engine(rng::derive(master_seed, "sampling",
                                         static_cast<std::uint64_t>(round)));
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (int i = 0; i < n_; ++i) {
        if (unif(eng) < probabilities_[static_cast<std::size_t>(i)]) out.push_back(i);
      }
      return out;
    }
  }
  return out;
}

}  // namespace fedcomp
