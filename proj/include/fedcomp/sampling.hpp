#ifndef FEDCOMP_SAMPLING_HPP_
#define FEDCOMP_SAMPLING_HPP_

#include <optional>
#include <vector>

#include "fedcomp/core.hpp"

namespace fedcomp {

// Per-round client sampling scheme. A scheme is proper when every client has
// a strictly positive inclusion probability; all partial-participation
// algorithms here require that.
class SamplingScheme {
 public:
  enum class Kind { FullParticipation, UniformSubset, IndependentBernoulli };

  static SamplingScheme full_participation(int n);
  static SamplingScheme uniform_subset(int subset_size, int n);
  static SamplingScheme independent_bernoulli(std::vector<double> probabilities);

  Kind kind() const { return kind_; }
  int n() const { return n_; }
  int subset_size() const { return subset_size_; }

  // Marginal inclusion probability of client i.
  double probability(int i) const { return probabilities_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& probabilities() const { return probabilities_; }

  // min_i p_i, the quantity entering the convergence constants.
  double p_hat() const;

  // First client with zero inclusion probability, if any.
  std::optional<int> improper_client() const;
  bool is_proper() const { return !improper_client().has_value(); }

  // Clients active in round k: a deterministic function of
  // (scheme, k, master_seed), drawn from the dedicated "sampling" substream
  // and returned sorted ascending. Throws UsageError on improper schemes.
  std::vector<int> draw(int round, std::uint64_t master_seed) const;

 private:
  SamplingScheme(Kind kind, int n, int subset_size, std::vector<double> probabilities)
      : kind_(kind), n_(n), subset_size_(subset_size), probabilities_(std::move(probabilities)) {}

  Kind kind_;
  int n_;
  int subset_size_;  // meaningful for UniformSubset only
  std::vector<double> probabilities_;
};

}  // namespace fedcomp

#endif  // FEDCOMP_SAMPLING_HPP_
