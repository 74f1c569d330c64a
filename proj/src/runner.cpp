#include "fedcomp/runner.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "fedcomp/analysis.hpp"

namespace fedcomp {

std::string_view algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::FedDR: return "feddr";
    case Algorithm::FedDRII: return "feddr2";
    case Algorithm::FedADMM: return "fedadmm";
    case Algorithm::FedPD: return "fedpd";
    case Algorithm::ParallelDRS: return "drs";
    case Algorithm::ReorderedDRS: return "drs-reordered";
    case Algorithm::CovDRS: return "drs-wform";
  }
  throw UsageError("algorithm_name: unknown algorithm id");
}

Algorithm algorithm_from_name(std::string_view name) {
  for (const Algorithm a : {Algorithm::FedDR, Algorithm::FedDRII, Algorithm::FedADMM,
                            Algorithm::FedPD, Algorithm::ParallelDRS, Algorithm::ReorderedDRS,
                            Algorithm::CovDRS}) {
    if (name == algorithm_name(a)) return a;
  }
  throw UsageError("unknown algorithm '" + std::string(name) +
                   "' (expected feddr, feddr2, fedadmm, fedpd, drs, drs-reordered or "
                   "drs-wform)");
}

const RoundRecord& RunTrace::at(int k) const {
  if (k < 0 || k >= static_cast<int>(rounds.size())) {
    throw UsageError("RunTrace::at: round " + std::to_string(k) + " outside the trace");
  }
  return rounds[static_cast<std::size_t>(k)];
}

void RunTrace::validate(int dimension) const {
  if (static_cast<int>(rounds.size()) != config.rounds + 1) {
    throw UsageError("RunTrace: expected " + std::to_string(config.rounds + 1) +
                     " rows, found " + std::to_string(rounds.size()));
  }
  const double gap_budget = 1e-12 * static_cast<double>(dimension);
  for (std::size_t k = 0; k < rounds.size(); ++k) {
    const RoundRecord& row = rounds[k];
    if (row.round != static_cast<int>(k)) throw UsageError("RunTrace: round indices skewed");
    if (row.xbar.size() != dimension || row.xtilde.size() != dimension) {
      throw UsageError("RunTrace: server vector dimension mismatch");
    }
    require_finite(row.xbar, "trace consensus", row.round);
    require_finite(row.xtilde, "trace aggregate", row.round);
    if (row.sampled_count != static_cast<int>(row.sampled.size())) {
      throw UsageError("RunTrace: sampled_count disagrees with the sampled list");
    }
    int prev = -1;
    for (const int i : row.sampled) {
      if (i <= prev || i < 0 || i >= config.n_clients()) {
        throw UsageError("RunTrace: sampled set not strictly increasing in range");
      }
      prev = i;
    }
    if (!(row.aggregation_gap <= gap_budget)) {
      throw NumericError("RunTrace: aggregation gap " + std::to_string(row.aggregation_gap) +
                             " exceeds " + std::to_string(gap_budget),
                         row.round);
    }
  }
}

namespace {

double infinity_gap(const ModelVector& xtilde, std::span<const ModelVector> xhat) {
  return (xtilde - stable_mean(xhat)).lpNorm<Eigen::Infinity>();
}

std::vector<int> all_clients(int n) {
  std::vector<int> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

}  // namespace

RunTrace run_algorithm(Algorithm algorithm, const CompositeProblem& problem,
                       const ModelVector& x0, const RunConfig& config,
                       const RunOptions& options) {
  problem.validate();
  config.validate();
  if (config.n_clients() != problem.n_clients()) {
    throw UsageError("run_algorithm: sampling scheme and problem disagree on client count");
  }
  if (x0.size() != problem.dimension) {
    throw UsageError("run_algorithm: initial point has the wrong dimension");
  }
  const bool splitting_variant = algorithm == Algorithm::ParallelDRS ||
                                 algorithm == Algorithm::ReorderedDRS ||
                                 algorithm == Algorithm::CovDRS;
  if (splitting_variant &&
      config.sampling.kind() != SamplingScheme::Kind::FullParticipation) {
    throw UsageError("the splitting variants require full participation");
  }

  // The stationarity metric uses the proximal step the run applies: the
  // FedADMM/FedPD penalty eta corresponds to a DR step of 1/eta.
  const double dr_step = (algorithm == Algorithm::FedADMM || algorithm == Algorithm::FedPD)
                             ? 1.0 / config.eta
                             : config.eta;

  RunTrace trace;
  trace.algorithm = algorithm;
  trace.config = config;
  trace.rounds.reserve(static_cast<std::size_t>(config.rounds) + 1);

  // One live state per family; only the one matching `algorithm` is used.
  FedDRState feddr;
  FedADMMState admm;
  DRSIterate drs;

  const auto t_start = std::chrono::steady_clock::now();
  double cum_ms = 0.0;
  auto elapsed_ms = [&t_start]() {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     t_start)
        .count();
  };

  switch (algorithm) {
    case Algorithm::FedDR:
      if (options.feddr_init == FedDRInit::Prox) {
        feddr = init_feddr(problem, x0, config);
      } else {
        const std::vector<ModelVector> uniform(static_cast<std::size_t>(problem.n_clients()),
                                               x0);
        feddr = make_feddr_state(uniform, uniform, uniform, x0, x0);
      }
      break;
    case Algorithm::FedDRII:
      drs = init_feddr2(problem, x0);
      break;
    case Algorithm::FedADMM:
    case Algorithm::FedPD:
      admm = init_fedadmm(problem, x0);
      break;
    case Algorithm::ParallelDRS:
    case Algorithm::ReorderedDRS:
      drs = make_drs_y_state(problem, x0, config.eta);
      break;
    case Algorithm::CovDRS:
      drs = make_drs_w_state(problem, x0, config.eta);
      break;
  }
  if (options.record_wall_time) cum_ms = elapsed_ms();

  auto record = [&](int round, std::vector<int> sampled) {
    const ModelVector* xbar = nullptr;
    const ModelVector* xtilde = nullptr;
    double gap = 0.0;
    switch (algorithm) {
      case Algorithm::FedDR:
        xbar = &feddr.xbar;
        xtilde = &feddr.xtilde;
        gap = infinity_gap(feddr.xtilde, feddr.xhat);
        break;
      case Algorithm::FedADMM:
      case Algorithm::FedPD:
        xbar = &admm.xbar;
        xtilde = &admm.xtilde;
        gap = infinity_gap(admm.xtilde, admm.xhat);
        break;
      default:
        xbar = &drs.xbar;
        xtilde = &drs.xtilde;
        gap = infinity_gap(drs.xtilde, drs.xhat);
        break;
    }
    RoundRecord row;
    row.round = round;
    row.sampled_count = static_cast<int>(sampled.size());
    row.sampled = std::move(sampled);
    row.objective = evaluate_objective(problem, *xbar);
    row.accuracy = options.accuracy ? options.accuracy(*xbar)
                                    : std::numeric_limits<double>::quiet_NaN();
    row.grad_mapping_sq = grad_mapping_norm_sq(problem, *xbar, dr_step);
    row.aggregation_gap = gap;
    row.cum_wall_ms = cum_ms;
    row.xbar = *xbar;
    row.xtilde = *xtilde;
    require_finite(row.xbar, "recorded consensus", round);
    trace.rounds.push_back(std::move(row));
  };

  record(0, {});

  for (int k = 0; k < config.rounds; ++k) {
    std::vector<int> active = splitting_variant
                                  ? all_clients(problem.n_clients())
                                  : config.sampling.draw(k, config.master_seed);
    switch (algorithm) {
      case Algorithm::FedDR:
        feddr_round(feddr, problem, config, k, active);
        break;
      case Algorithm::FedDRII:
        feddr2_round(drs, problem, config, k, active);
        break;
      case Algorithm::FedADMM:
        fedadmm_round(admm, problem, config, k, active);
        break;
      case Algorithm::FedPD:
        fedpd_round(admm, problem, config, k);
        break;
      case Algorithm::ParallelDRS:
        parallel_drs_step(drs, problem, config, k);
        break;
      case Algorithm::ReorderedDRS:
        reordered_drs_step(drs, problem, config, k);
        break;
      case Algorithm::CovDRS:
        cov_drs_step(drs, problem, config, k);
        break;
    }
    if (options.record_wall_time) cum_ms = elapsed_ms();
    record(k + 1, std::move(active));
  }

  trace.validate(problem.dimension);
  return trace;
}

}  // namespace fedcomp
