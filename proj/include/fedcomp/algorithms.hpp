#ifndef FEDCOMP_ALGORITHMS_HPP_
#define FEDCOMP_ALGORITHMS_HPP_

#include <span>
#include <vector>

#include "fedcomp/core.hpp"
#include "fedcomp/problem.hpp"
#include "fedcomp/run_config.hpp"

namespace fedcomp {

// Full-participation splitting state. The y-form ops use (y, x, xhat); the
// w-form ops use (x, w, xhat); both share the server pair (xtilde, xbar).
// The unused client vector is left empty.
struct DRSIterate {
  std::vector<ModelVector> y;
  std::vector<ModelVector> w;
  std::vector<ModelVector> x;
  std::vector<ModelVector> xhat;
  ModelVector xtilde;
  ModelVector xbar;

  int n() const { return static_cast<int>(x.size()); }
};

// Uniform starts with every client at x0. The y-form sets y = x = xhat = x0;
// the w-form sets w = 0, x = xhat = x0. Both set xtilde = x0 and
// xbar = prox_{eta g}(x0), which aligns the xbar streams of all three
// splitting variants run from the same x0.
DRSIterate make_drs_y_state(const CompositeProblem& problem, const ModelVector& x0,
                            double eta);
DRSIterate make_drs_w_state(const CompositeProblem& problem, const ModelVector& x0,
                            double eta);

// One synchronous pass of the relaxed parallel splitting, y-form, executed
// in the order: y-update with alpha, local prox, reflection, mean, prox of g.
// state.xbar afterwards holds the next round's input.
void parallel_drs_step(DRSIterate& state, const CompositeProblem& problem,
                       const RunConfig& config, int round);

// Reordered execution at alpha = 1: reflection, mean, prox of g, then the
// local prox and y-update. state.xbar afterwards holds the consensus value
// computed within this round.
void reordered_drs_step(DRSIterate& state, const CompositeProblem& problem,
                        const RunConfig& config, int round);

// Change-of-variables form (w = x - y) of the reordered iteration.
void cov_drs_step(DRSIterate& state, const CompositeProblem& problem,
                  const RunConfig& config, int round);

// ---------------------------------------------------------------------------
// FedDR
// ---------------------------------------------------------------------------

struct FedDRState {
  std::vector<ModelVector> y;
  std::vector<ModelVector> x;
  std::vector<ModelVector> xhat;
  ModelVector xtilde;
  ModelVector xbar;

  int n() const { return static_cast<int>(x.size()); }
};

// Standalone initialization: y_i = x0, x_i ~= prox_{eta f_i}(x0) at accuracy
// eps_0 (seeded from the "local_init" substream), xhat_i = 2 x_i - y_i,
// xbar = x0. The listing also sets xtilde = x0, but the aggregation
// invariant xtilde = mean(xhat) would then fail from round 0 onward because
// the server only ever adds increments; we set xtilde = mean(xhat) instead.
FedDRState init_feddr(const CompositeProblem& problem, const ModelVector& x0,
                      const RunConfig& config);

// Override hook for arbitrary initial states (the equivalence harness maps
// another algorithm's state in here). Validates dimensions, the reflection
// identity xhat = 2x - y, and xtilde = mean(xhat).
FedDRState make_feddr_state(std::vector<ModelVector> y, std::vector<ModelVector> x,
                            std::vector<ModelVector> xhat, ModelVector xtilde,
                            ModelVector xbar);

// One communication round: active clients refresh (y, x, xhat) and send
// their xhat increments; the server adds (1/n) sum of increments to xtilde
// and recomputes xbar = prox_{eta g}(xtilde). Clients outside `active` are
// untouched. The overload without `active` draws from config.sampling.
void feddr_round(FedDRState& state, const CompositeProblem& problem,
                 const RunConfig& config, int round, std::span<const int> active);
void feddr_round(FedDRState& state, const CompositeProblem& problem,
                 const RunConfig& config, int round);

// ---------------------------------------------------------------------------
// FedDR-II (partial-participation w-form)
// ---------------------------------------------------------------------------

// w_i = 0, x_i = xhat_i = x0, xtilde = x0, xbar = x0.
DRSIterate init_feddr2(const CompositeProblem& problem, const ModelVector& x0);

// The seven-step round: active clients publish xhat_i = x_i + w_i; the
// server averages the latest xhat of ALL clients directly (no increments)
// and applies prox_{eta g}; active clients then solve the local prox at
// (xbar - w_i) and shift w_i by (x_i - xbar). Inactive clients keep every
// field bit-identical.
void feddr2_round(DRSIterate& state, const CompositeProblem& problem,
                  const RunConfig& config, int round, std::span<const int> active);
void feddr2_round(DRSIterate& state, const CompositeProblem& problem,
                  const RunConfig& config, int round);

// ---------------------------------------------------------------------------
// FedADMM and the FedPD reduction
// ---------------------------------------------------------------------------

struct FedADMMState {
  std::vector<ModelVector> x;
  std::vector<ModelVector> z;  // dual variables
  std::vector<ModelVector> xhat;
  ModelVector xtilde;
  ModelVector xbar;

  int n() const { return static_cast<int>(x.size()); }
};

// z_i = 0, x_i = xhat_i = x0, xtilde = xbar = x0.
FedADMMState init_fedadmm(const CompositeProblem& problem, const ModelVector& x0);

// One round: active clients minimize their augmented Lagrangian around
// (xbar, z_i) with penalty eta, take the dual step z_i += eta (x_i - xbar),
// publish xhat_i = x_i + z_i / eta; the server adds the (1/n)-scaled xhat
// increments and applies prox of g at step 1/eta.
void fedadmm_round(FedADMMState& state, const CompositeProblem& problem,
                   const RunConfig& config, int round, std::span<const int> active);
void fedadmm_round(FedADMMState& state, const CompositeProblem& problem,
                   const RunConfig& config, int round);

// FedPD is the g == 0, full-participation special case; this guard-checks
// the config and delegates to fedadmm_round.
void fedpd_round(FedADMMState& state, const CompositeProblem& problem,
                 const RunConfig& config, int round);

}  // namespace fedcomp

#endif  // FEDCOMP_ALGORITHMS_HPP_
