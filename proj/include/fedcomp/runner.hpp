#ifndef FEDCOMP_RUNNER_HPP_
#define FEDCOMP_RUNNER_HPP_

#include <functional>
#include <string_view>
#include <vector>

#include "fedcomp/algorithms.hpp"

namespace fedcomp {

enum class Algorithm {
  FedDR,
  FedDRII,
  FedADMM,
  FedPD,
  ParallelDRS,   // y-form splitting with relaxation alpha
  ReorderedDRS,  // same iteration, consensus computed within the round
  CovDRS,        // w-form (w = x - y)
};

std::string_view algorithm_name(Algorithm algorithm);
Algorithm algorithm_from_name(std::string_view name);  // UsageError on unknown ids

// How a FedDR run initializes its clients: Prox runs one local prox from x0
// per the algorithm listing; Aligned starts every variable at x0, which is
// the image of the FedADMM initialization under the equivalence mapping and
// makes the two algorithms' consensus sequences comparable round by round.
enum class FedDRInit { Prox, Aligned };

struct RunOptions {
  bool record_wall_time = false;  // cum_wall_ms stays 0 when disabled
  FedDRInit feddr_init = FedDRInit::Prox;
  // Optional classification accuracy evaluated at each consensus point;
  // NaN is recorded when absent (e.g. quadratic problems).
  std::function<double(const ModelVector&)> accuracy;
};

struct RoundRecord {
  int round = 0;  // 0 is the post-initialization row
  int sampled_count = 0;
  std::vector<int> sampled;
  double objective = 0.0;        // F(xbar)
  double accuracy = 0.0;         // NaN when no accuracy metric is attached
  double grad_mapping_sq = 0.0;  // stationarity residual at xbar
  double aggregation_gap = 0.0;  // ||xtilde - mean(xhat)||_inf, live check
  double cum_wall_ms = 0.0;
  ModelVector xbar;
  ModelVector xtilde;
};

struct RunTrace {
  Algorithm algorithm = Algorithm::FedDR;
  RunConfig config;
  std::vector<RoundRecord> rounds;  // exactly config.rounds + 1 entries

  const RoundRecord& at(int k) const;

  // Structural audit: K+1 rows with matching indices, finite server vectors
  // of the stated dimension, sorted in-range sampling sets, and the
  // incremental-aggregation gap within 1e-12 * dimension at every row.
  void validate(int dimension) const;
};

// Runs `algorithm` for config.rounds communication rounds from x0 and records
// one row after initialization plus one per round. The stationarity residual
// uses the proximal step the run actually applies: config.eta for the DR-form
// algorithms and 1/config.eta for FedADMM/FedPD (whose penalty is eta).
// The splitting variants (ParallelDRS, ReorderedDRS, CovDRS) require a
// full-participation sampling scheme.
RunTrace run_algorithm(Algorithm algorithm, const CompositeProblem& problem,
                       const ModelVector& x0, const RunConfig& config,
                       const RunOptions& options = {});

}  // namespace fedcomp

#endif  // FEDCOMP_RUNNER_HPP_
