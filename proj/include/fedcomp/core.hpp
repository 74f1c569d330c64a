#ifndef FEDCOMP_CORE_HPP_
#define FEDCOMP_CORE_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fedcomp {

// Dense parameter vector shared by every algorithm. Dimension is fixed for
// the lifetime of a run; entries must stay finite after every public update.
using ModelVector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Error taxonomy
// ---------------------------------------------------------------------------

// Caller broke a precondition (dimension mismatch, bad parameter range).
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// A requested capability is unavailable (e.g. no closed-form prox).
class CapabilityError : public std::runtime_error {
 public:
  explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

// A local solve finished its budget without certifying the requested accuracy.
class ToleranceError : public std::runtime_error {
 public:
  ToleranceError(const std::string& what, double achieved_residual)
      : std::runtime_error(what), achieved(achieved_residual) {}
  double achieved;
};

// Non-finite value produced at runtime; carries the offending location.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, int round = -1, int client = -1)
      : std::runtime_error(what), round(round), client(client) {}
  int round;
  int client;
};

// Invalid experiment configuration; `line` anchors file-based configs.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line(line) {}
  int line;
};

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

inline bool is_finite(const ModelVector& v) { return v.allFinite(); }

inline void require_finite(const ModelVector& v, const char* where, int round = -1,
                           int client = -1) {
  if (!v.allFinite()) {
    throw NumericError(std::string("non-finite value in ") + where, round, client);
  }
}

inline void require_same_dim(const ModelVector& a, const ModelVector& b, const char* where) {
  if (a.size() != b.size()) {
    throw UsageError(std::string(where) + ": dimension mismatch (" +
                     std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

// Pairwise (tree) sum over vectors in ascending index order. The reduction
// order is a pure function of the count, so equal inputs give bit-identical
// results while rounding error grows only logarithmically.
ModelVector stable_sum(std::span<const ModelVector> xs);
ModelVector stable_mean(std::span<const ModelVector> xs);

// ---------------------------------------------------------------------------
// Deterministic seed derivation
// ---------------------------------------------------------------------------
//
// Every random decision draws from its own substream keyed by
// (master_seed, purpose, a, b). Streams for different purposes never
// interact, so e.g. reshuffling data cannot perturb client sampling.

namespace rng {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += kGolden);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_label(std::string_view label) {
  // FNV-1a, then one splitmix finalization round.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : label) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

inline std::uint64_t derive(std::uint64_t master, std::string_view purpose,
                            std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64(s);
  s = h ^ hash_label(purpose);
  h = splitmix64(s);
  s = h ^ (a * kGolden + 1);
  h = splitmix64(s);
  s = h ^ (b * 0xda942042e4dd58b5ULL + 1);
  return splitmix64(s);
}

inline std::mt19937_64 engine(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace rng

// Runs fn(i) for i in [0, count). Iterations must be independent; results are
// deterministic because each index owns its output slot. Uses threads only
// when the host has more than one core.
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace fedcomp

#endif  // FEDCOMP_CORE_HPP_
