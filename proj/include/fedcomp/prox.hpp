#ifndef FEDCOMP_PROX_HPP_
#define FEDCOMP_PROX_HPP_

#include <optional>

#include "fedcomp/problem.hpp"
#include "fedcomp/run_config.hpp"

namespace fedcomp {

// One proximal evaluation request: argmin_y f(y) + ||center - y||^2 / (2*step).
// For a nonconvex loss the subproblem is only well-posed for step < 1/L.
struct ProxRequest {
  ModelVector center;
  double step = 1.0;
  double tolerance = 0.0;  // 0 disables certification for iterative solvers
  LocalSolver solver;
  std::uint64_t seed = 0;
  std::optional<ModelVector> warm_start;  // defaults to center
};

// Exact proximal point via the loss's closed form. Throws CapabilityError
// when none exists and UsageError when the step is out of range.
ModelVector prox_exact(const ClientLoss& loss, const ModelVector& center, double step);

// Inexact proximal point. Runs the requested solver budget, then certifies
// ||x - prox(center)|| <= tolerance whenever tolerance > 0: directly against
// the closed form when available, otherwise through the strong-convexity
// residual bound ||grad phi(x)|| / mu with mu = 1/step (convex loss) or
// mu = 1/step - L. Throws ToleranceError with the achieved residual when the
// certificate fails.
ModelVector prox_inexact(const ClientLoss& loss, const ProxRequest& request);

ModelVector prox_inexact(const ClientLoss& loss, const ModelVector& center, double step,
                         double tolerance, const LocalSolver& solver, std::uint64_t seed,
                         std::optional<ModelVector> warm_start = std::nullopt);

// Minimizer of the client's augmented Lagrangian
//   f(x) + <dual, x - anchor> + (penalty/2) ||x - anchor||^2,
// evaluated by delegation as prox_inexact(loss, anchor - dual/penalty,
// 1/penalty, ...), so the completing-the-square identity holds structurally.
ModelVector argmin_augmented_lagrangian(const ClientLoss& loss, const ModelVector& anchor,
                                        const ModelVector& dual, double penalty,
                                        double tolerance, const LocalSolver& solver,
                                        std::uint64_t seed,
                                        std::optional<ModelVector> warm_start = std::nullopt);

}  // namespace fedcomp

#endif  // FEDCOMP_PROX_HPP_
