#include "fedcomp/prox.hpp"

#include <cmath>

namespace fedcomp {

namespace {

void check_step_range(const ClientLoss& loss, double step) {
  if (!(step > 0)) throw UsageError("prox: step must be positive");
  if (!loss.is_convex() && step >= 1.0 / loss.lipschitz()) {
    throw UsageError("prox: nonconvex loss requires step < 1/L (L = " +
                     std::to_string(loss.lipschitz()) + ", step = " + std::to_string(step) +
                     ")");
  }
}

// Strong convexity modulus of phi(y) = f(y) + ||center - y||^2 / (2*step).
double strong_convexity_modulus(const ClientLoss& loss, double step) {
  return loss.is_convex() ? 1.0 / step : 1.0 / step - loss.lipschitz();
}

ModelVector descend(const ClientLoss& loss, const ProxRequest& request) {
  const double inv_step = 1.0 / request.step;
  double lr = request.solver.learning_rate;
  if (lr <= 0.0) {
    if (request.solver.kind == LocalSolver::Kind::StochasticGD) {
      throw UsageError("prox_inexact: stochastic solver needs an explicit learning rate");
    }
    lr = 1.0 / (loss.lipschitz() + inv_step);
  }
  ModelVector x = request.warm_start.value_or(request.center);
  require_same_dim(x, request.center, "prox_inexact warm start");

  const bool stochastic = request.solver.kind == LocalSolver::Kind::StochasticGD;
  auto eng = rng::engine(request.seed);
  for (int t = 0; t < request.solver.iterations; ++t) {
    ModelVector g = stochastic && loss.has_stochastic_gradient()
                        ? loss.stochastic_gradient(x, eng(), request.solver.batch_size)
                        : loss.gradient(x);
    g += inv_step * (x - request.center);
    x -= lr * g;
    if (!x.allFinite()) {
      throw NumericError("prox_inexact: local solve diverged at iteration " +
                         std::to_string(t));
    }
  }
  return x;
}

}  // namespace

ModelVector prox_exact(const ClientLoss& loss, const ModelVector& center, double step) {
  check_step_range(loss, step);
  if (center.size() != loss.dimension()) {
    throw UsageError("prox_exact: center has wrong dimension");
  }
  if (!loss.has_exact_prox()) {
    throw CapabilityError(
        "prox_exact: loss has no closed-form prox; use prox_inexact instead");
  }
  ModelVector out = loss.exact_prox(center, step);
  require_finite(out, "prox_exact");
  return out;
}

ModelVector prox_inexact(const ClientLoss& loss, const ProxRequest& request) {
  check_step_range(loss, request.step);
  if (request.center.size() != loss.dimension()) {
    throw UsageError("prox_inexact: center has wrong dimension");
  }
  if (!(request.tolerance >= 0)) {
    throw UsageError("prox_inexact: tolerance must be >= 0");
  }

  if (request.solver.kind == LocalSolver::Kind::ExactProx) {
    return prox_exact(loss, request.center, request.step);
  }

  ModelVector x = descend(loss, request);

  if (request.tolerance > 0) {
    double residual;
    if (loss.has_exact_prox()) {
      residual = (x - loss.exact_prox(request.center, request.step)).norm();
    } else {
      const double mu = strong_convexity_modulus(loss, request.step);
      ModelVector grad_phi =
          loss.gradient(x) + (x - request.center) / request.step;
      residual = grad_phi.norm() / mu;
    }
    if (!(residual <= request.tolerance)) {
      throw ToleranceError("prox_inexact: solver budget exhausted at residual " +
                               std::to_string(residual) + " > tolerance " +
                               std::to_string(request.tolerance),
                           residual);
    }
  }
  return x;
}

ModelVector prox_inexact(const ClientLoss& loss, const ModelVector& center, double step,
                         double tolerance, const LocalSolver& solver, std::uint64_t seed,
                         std::optional<ModelVector> warm_start) {
  ProxRequest request{center, step, tolerance, solver, seed, std::move(warm_start)};
  return prox_inexact(loss, request);
}

ModelVector argmin_augmented_lagrangian(const ClientLoss& loss, const ModelVector& anchor,
                                        const ModelVector& dual, double penalty,
                                        double tolerance, const LocalSolver& solver,
                                        std::uint64_t seed,
                                        std::optional<ModelVector> warm_start) {
  if (!(penalty > 0)) throw UsageError("argmin_augmented_lagrangian: penalty must be positive");
  require_same_dim(anchor, dual, "argmin_augmented_lagrangian");
  return prox_inexact(loss, anchor - dual / penalty, 1.0 / penalty, tolerance, solver, seed,
                      std::move(warm_start));
}

}  // namespace fedcomp
