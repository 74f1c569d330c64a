#ifndef FEDCOMP_RUN_CONFIG_HPP_
#define FEDCOMP_RUN_CONFIG_HPP_

#include <cmath>

#include "fedcomp/core.hpp"
#include "fedcomp/sampling.hpp"

namespace fedcomp {

// How a client solves its local subproblem (the inexact prox).
struct LocalSolver {
  enum class Kind { ExactProx, GradientDescent, StochasticGD };

  Kind kind = Kind::ExactProx;
  int iterations = 300;
  // Step length for the iterative solvers. <= 0 selects the safe default
  // 1/(L_i + 1/eta) for plain gradient descent.
  double learning_rate = 0.01;
  int batch_size = 2;

  static LocalSolver exact() { return LocalSolver{Kind::ExactProx, 0, 0.0, 0}; }
  static LocalSolver gradient_descent(int iterations, double learning_rate = 0.0) {
    return LocalSolver{Kind::GradientDescent, iterations, learning_rate, 0};
  }
  static LocalSolver stochastic_gd(int iterations, double learning_rate, int batch_size) {
    return LocalSolver{Kind::StochasticGD, iterations, learning_rate, batch_size};
  }
};

// Accuracy targets eps_{i,k} = eps0 / (k+1), identical across clients.
// Square-summable: sum_k eps_k^2 <= eps0^2 * pi^2 / 6.
struct EpsSchedule {
  double eps0 = 0.0;

  double at(int k) const { return eps0 / static_cast<double>(k + 1); }

  // Declared bound D with (1/n) sum_i sum_k eps_{i,k}^2 <= D for n clients.
  double square_sum_bound(int n_clients) const {
    constexpr double kPiSqOver6 = 1.6449340668482264;
    return static_cast<double>(n_clients) * eps0 * eps0 * kPiSqOver6;
  }
};

// Parameters shared by all federated runs.
struct RunConfig {
  double eta = 1.0;    // FedADMM penalty / DR prox step
  double alpha = 1.0;  // relaxation (FedDR only; 2 selects Peaceman-Rachford)
  int rounds = 1;      // K
  SamplingScheme sampling = SamplingScheme::full_participation(1);
  EpsSchedule eps;
  std::uint64_t master_seed = 0;
  LocalSolver solver = LocalSolver::exact();

  int n_clients() const { return sampling.n(); }

  void validate() const {
    if (!(eta > 0)) throw UsageError("RunConfig: eta must be positive");
    if (!(alpha > 0)) throw UsageError("RunConfig: alpha must be positive");
    if (rounds < 1) throw UsageError("RunConfig: rounds must be >= 1");
    if (!(eps.eps0 >= 0) || !std::isfinite(eps.eps0)) {
      throw UsageError("RunConfig: eps0 must be finite and >= 0");
    }
    if (solver.kind != LocalSolver::Kind::ExactProx && solver.iterations < 1) {
      throw UsageError("RunConfig: iterative solver needs a positive iteration budget");
    }
    if (solver.kind == LocalSolver::Kind::StochasticGD && solver.batch_size < 1) {
      throw UsageError("RunConfig: stochastic solver needs a positive batch size");
    }
  }
};

}  // namespace fedcomp

#endif  // FEDCOMP_RUN_CONFIG_HPP_
