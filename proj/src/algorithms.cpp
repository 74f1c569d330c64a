#include "fedcomp/algorithms.hpp"

#include <string>
#include <utility>

#include "fedcomp/prox.hpp"

namespace fedcomp {

namespace {

// Shared by every algorithm so that two runs with equal (master_seed, round,
// client) solve their subproblems on bit-identical random streams.
std::uint64_t solver_seed(const RunConfig& config, int round, int client) {
  return rng::derive(config.master_seed, "local_solver", static_cast<std::uint64_t>(round),
                     static_cast<std::uint64_t>(client));
}

// Inexact prox for client i in round k: accuracy eps_{i,k+1}, warm-started at
// the previous local iterate. NumericError gets the (round, client) location.
ModelVector local_prox(const CompositeProblem& problem, int client, const ModelVector& center,
                       const RunConfig& config, int round, const ModelVector& warm) {
  try {
    return prox_inexact(problem.client(client), center, config.eta, config.eps.at(round + 1),
                        config.solver, solver_seed(config, round, client), warm);
  } catch (NumericError& e) {
    e.round = round;
    e.client = client;
    throw;
  }
}

void check_dims(const CompositeProblem& problem, const ModelVector& x0) {
  problem.validate();
  if (x0.size() != problem.dimension) {
    throw UsageError("initial point dimension " + std::to_string(x0.size()) +
                     " does not match problem dimension " + std::to_string(problem.dimension));
  }
}

void check_config(const CompositeProblem& problem, const RunConfig& config) {
  config.validate();
  if (config.n_clients() != problem.n_clients()) {
    throw UsageError("sampling scheme is over " + std::to_string(config.n_clients()) +
                     " clients but the problem has " + std::to_string(problem.n_clients()));
  }
}

void check_active(std::span<const int> active, int n) {
  int prev = -1;
  for (const int idx : active) {
    if (idx < 0 || idx >= n) {
      throw UsageError("active client index " + std::to_string(idx) + " out of range [0, " +
                       std::to_string(n) + ")");
    }
    if (idx <= prev) throw UsageError("active client list must be strictly increasing");
    prev = idx;
  }
}

std::vector<ModelVector> replicate(int n, const ModelVector& v) {
  return std::vector<ModelVector>(static_cast<std::size_t>(n), v);
}

}  // namespace

// ---------------------------------------------------------------------------
// Full-participation splitting variants
// ---------------------------------------------------------------------------

DRSIterate make_drs_y_state(const CompositeProblem& problem, const ModelVector& x0,
                            double eta) {
  check_dims(problem, x0);
  if (!(eta > 0)) throw UsageError("eta must be positive");
  DRSIterate state;
  state.y = replicate(problem.n_clients(), x0);
  state.x = state.y;
  state.xhat = state.y;
  state.xtilde = x0;
  state.xbar = problem.regularizer.prox(x0, eta);
  return state;
}

DRSIterate make_drs_w_state(const CompositeProblem& problem, const ModelVector& x0,
                            double eta) {
  check_dims(problem, x0);
  if (!(eta > 0)) throw UsageError("eta must be positive");
  DRSIterate state;
  state.w = replicate(problem.n_clients(), ModelVector::Zero(x0.size()));
  state.x = replicate(problem.n_clients(), x0);
  state.xhat = state.x;
  state.xtilde = x0;
  state.xbar = problem.regularizer.prox(x0, eta);
  return state;
}

void parallel_drs_step(DRSIterate& state, const CompositeProblem& problem,
                       const RunConfig& config, int round) {
  check_config(problem, config);
  const int n = problem.n_clients();
  if (state.n() != n || static_cast<int>(state.y.size()) != n) {
    throw UsageError("parallel_drs_step needs a y-form state over every client");
  }
  for (int i = 0; i < n; ++i) {
    state.y[i] += config.alpha * (state.xbar - state.x[i]);
    state.x[i] = local_prox(problem, i, state.y[i], config, round, state.x[i]);
    state.xhat[i] = 2.0 * state.x[i] - state.y[i];
    require_finite(state.xhat[i], "parallel splitting client update", round, i);
  }
  state.xtilde = stable_mean(state.xhat);
  state.xbar = problem.regularizer.prox(state.xtilde, config.eta);
  require_finite(state.xbar, "parallel splitting consensus", round);
}

void reordered_drs_step(DRSIterate& state, const CompositeProblem& problem,
                        const RunConfig& config, int round) {
  check_config(problem, config);
  if (config.alpha != 1.0) {
    throw UsageError("the reordered splitting is only defined at alpha = 1");
  }
  const int n = problem.n_clients();
  if (state.n() != n || static_cast<int>(state.y.size()) != n) {
    throw UsageError("reordered_drs_step needs a y-form state over every client");
  }
  for (int i = 0; i < n; ++i) state.xhat[i] = 2.0 * state.x[i] - state.y[i];
  state.xtilde = stable_mean(state.xhat);
  state.xbar = problem.regularizer.prox(state.xtilde, config.eta);
  require_finite(state.xbar, "reordered splitting consensus", round);
  for (int i = 0; i < n; ++i) {
    const ModelVector center = state.y[i] + state.xbar - state.x[i];
    const ModelVector next = local_prox(problem, i, center, config, round, state.x[i]);
    state.y[i] += state.xbar - state.x[i];
    state.x[i] = next;
    require_finite(state.x[i], "reordered splitting client update", round, i);
  }
}

void cov_drs_step(DRSIterate& state, const CompositeProblem& problem, const RunConfig& config,
                  int round) {
  check_config(problem, config);
  if (config.alpha != 1.0) {
    throw UsageError("the w-form splitting is only defined at alpha = 1");
  }
  const int n = problem.n_clients();
  if (state.n() != n || static_cast<int>(state.w.size()) != n) {
    throw UsageError("cov_drs_step needs a w-form state over every client");
  }
  for (int i = 0; i < n; ++i) state.xhat[i] = state.x[i] + state.w[i];
  state.xtilde = stable_mean(state.xhat);
  state.xbar = problem.regularizer.prox(state.xtilde, config.eta);
  require_finite(state.xbar, "w-form splitting consensus", round);
  for (int i = 0; i < n; ++i) {
    const ModelVector center = state.xbar - state.w[i];
    state.x[i] = local_prox(problem, i, center, config, round, state.x[i]);
    state.w[i] += state.x[i] - state.xbar;
    require_finite(state.w[i], "w-form splitting client update", round, i);
  }
}

// ---------------------------------------------------------------------------
// FedDR
// ---------------------------------------------------------------------------

FedDRState init_feddr(const CompositeProblem& problem, const ModelVector& x0,
                      const RunConfig& config) {
  check_dims(problem, x0);
  check_config(problem, config);
  const int n = problem.n_clients();
  FedDRState state;
  state.y = replicate(n, x0);
  state.x.resize(static_cast<std::size_t>(n));
  state.xhat.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    try {
      state.x[i] = prox_inexact(problem.client(i), x0, config.eta, config.eps.at(0),
                                config.solver,
                                rng::derive(config.master_seed, "local_init",
                                            static_cast<std::uint64_t>(i)),
                                x0);
    } catch (NumericError& e) {
      e.client = i;
      throw;
    }
    state.xhat[i] = 2.0 * state.x[i] - state.y[i];
    require_finite(state.xhat[i], "initial client prox", -1, i);
  }
  state.xtilde = stable_mean(state.xhat);
  state.xbar = x0;
  return state;
}

FedDRState make_feddr_state(std::vector<ModelVector> y, std::vector<ModelVector> x,
                            std::vector<ModelVector> xhat, ModelVector xtilde,
                            ModelVector xbar) {
  const std::size_t n = x.size();
  if (n == 0 || y.size() != n || xhat.size() != n) {
    throw UsageError("make_feddr_state: client lists must be non-empty and equally sized");
  }
  const Eigen::Index d = xbar.size();
  if (xtilde.size() != d) throw UsageError("make_feddr_state: server vectors disagree in size");
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i].size() != d || x[i].size() != d || xhat[i].size() != d) {
      throw UsageError("make_feddr_state: client vector dimension mismatch");
    }
    const double scale = 1.0 + xhat[i].lpNorm<Eigen::Infinity>();
    if ((xhat[i] - (2.0 * x[i] - y[i])).lpNorm<Eigen::Infinity>() > 1e-9 * scale) {
      throw UsageError("make_feddr_state: xhat must equal 2x - y");
    }
  }
  FedDRState state;
  state.y = std::move(y);
  state.x = std::move(x);
  state.xhat = std::move(xhat);
  const double scale = 1.0 + xtilde.lpNorm<Eigen::Infinity>();
  if ((stable_mean(state.xhat) - xtilde).lpNorm<Eigen::Infinity>() > 1e-9 * scale) {
    throw UsageError("make_feddr_state: xtilde must equal the mean of xhat");
  }
  state.xtilde = std::move(xtilde);
  state.xbar = std::move(xbar);
  return state;
}

void feddr_round(FedDRState& state, const CompositeProblem& problem, const RunConfig& config,
                 int round, std::span<const int> active) {
  check_config(problem, config);
  const int n = problem.n_clients();
  if (state.n() != n) throw UsageError("feddr_round: state covers a different client count");
  check_active(active, n);

  std::vector<ModelVector> deltas;
  deltas.reserve(active.size());
  for (const int i : active) {
    state.y[i] += config.alpha * (state.xbar - state.x[i]);
    state.x[i] = local_prox(problem, i, state.y[i], config, round, state.x[i]);
    ModelVector xhat_next = 2.0 * state.x[i] - state.y[i];
    require_finite(xhat_next, "client update", round, i);
    deltas.push_back(xhat_next - state.xhat[i]);
    state.xhat[i] = std::move(xhat_next);
  }
  if (!deltas.empty()) {
    state.xtilde += stable_sum(deltas) / static_cast<double>(n);
  }
  state.xbar = problem.regularizer.prox(state.xtilde, config.eta);
  require_finite(state.xbar, "server consensus", round);
}

void feddr_round(FedDRState& state, const CompositeProblem& problem, const RunConfig& config,
                 int round) {
  const std::vector<int> active = config.sampling.draw(round, config.master_seed);
  feddr_round(state, problem, config, round, active);
}

// ---------------------------------------------------------------------------
// FedDR-II
// ---------------------------------------------------------------------------

DRSIterate init_feddr2(const CompositeProblem& problem, const ModelVector& x0) {
  check_dims(problem, x0);
  DRSIterate state;
  state.w = replicate(problem.n_clients(), ModelVector::Zero(x0.size()));
  state.x = replicate(problem.n_clients(), x0);
  state.xhat = state.x;
  state.xtilde = x0;
  state.xbar = x0;
  return state;
}

void feddr2_round(DRSIterate& state, const CompositeProblem& problem, const RunConfig& config,
                  int round, std::span<const int> active) {
  check_config(problem, config);
  const int n = problem.n_clients();
  if (state.n() != n || static_cast<int>(state.w.size()) != n) {
    throw UsageError("feddr2_round needs a w-form state over every client");
  }
  check_active(active, n);

  for (const int i : active) {
    state.xhat[i] = state.x[i] + state.w[i];
    require_finite(state.xhat[i], "client publish", round, i);
  }
  state.xtilde = stable_mean(state.xhat);
  state.xbar = problem.regularizer.prox(state.xtilde, config.eta);
  require_finite(state.xbar, "server consensus", round);
  for (const int i : active) {
    const ModelVector center = state.xbar - state.w[i];
    state.x[i] = local_prox(problem, i, center, config, round, state.x[i]);
    state.w[i] += state.x[i] - state.xbar;
    require_finite(state.w[i], "client update", round, i);
  }
}

void feddr2_round(DRSIterate& state, const CompositeProblem& problem, const RunConfig& config,
                  int round) {
  const std::vector<int> active = config.sampling.draw(round, config.master_seed);
  feddr2_round(state, problem, config, round, active);
}

// ---------------------------------------------------------------------------
// FedADMM and FedPD
// ---------------------------------------------------------------------------

FedADMMState init_fedadmm(const CompositeProblem& problem, const ModelVector& x0) {
  check_dims(problem, x0);
  FedADMMState state;
  state.x = replicate(problem.n_clients(), x0);
  state.z = replicate(problem.n_clients(), ModelVector::Zero(x0.size()));
  state.xhat = state.x;
  state.xtilde = x0;
  state.xbar = x0;
  return state;
}

void fedadmm_round(FedADMMState& state, const CompositeProblem& problem,
                   const RunConfig& config, int round, std::span<const int> active) {
  check_config(problem, config);
  const int n = problem.n_clients();
  if (state.n() != n) throw UsageError("fedadmm_round: state covers a different client count");
  check_active(active, n);

  std::vector<ModelVector> deltas;
  deltas.reserve(active.size());
  for (const int i : active) {
    ModelVector x_next;
    try {
      x_next = argmin_augmented_lagrangian(problem.client(i), state.xbar, state.z[i],
                                           config.eta, config.eps.at(round + 1), config.solver,
                                           solver_seed(config, round, i), state.x[i]);
    } catch (NumericError& e) {
      e.round = round;
      e.client = i;
      throw;
    }
    state.z[i] += config.eta * (x_next - state.xbar);
    state.x[i] = std::move(x_next);
    ModelVector xhat_next = state.x[i] + state.z[i] / config.eta;
    require_finite(xhat_next, "client update", round, i);
    deltas.push_back(xhat_next - state.xhat[i]);
    state.xhat[i] = std::move(xhat_next);
  }
  if (!deltas.empty()) {
    state.xtilde += stable_sum(deltas) / static_cast<double>(n);
  }
  state.xbar = problem.regularizer.prox(state.xtilde, 1.0 / config.eta);
  require_finite(state.xbar, "server consensus", round);
}

void fedadmm_round(FedADMMState& state, const CompositeProblem& problem,
                   const RunConfig& config, int round) {
  const std::vector<int> active = config.sampling.draw(round, config.master_seed);
  fedadmm_round(state, problem, config, round, active);
}

void fedpd_round(FedADMMState& state, const CompositeProblem& problem, const RunConfig& config,
                 int round) {
  if (!problem.regularizer.is_zero()) {
    throw ConfigError("FedPD requires a zero regularizer (g == 0)");
  }
  if (config.sampling.kind() != SamplingScheme::Kind::FullParticipation) {
    throw ConfigError("FedPD requires full participation: every client updates in every round");
  }
  fedadmm_round(state, problem, config, round);
}

}  // namespace fedcomp
