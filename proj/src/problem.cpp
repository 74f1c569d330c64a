#include "fedcomp/problem.hpp"

#include <cmath>

namespace fedcomp {

ModelVector ClientLoss::exact_prox(const ModelVector&, double) const {
  throw CapabilityError(
      "this loss has no closed-form prox; use prox_inexact with an iterative solver");
}

ModelVector ClientLoss::stochastic_gradient(const ModelVector& x, std::uint64_t,
                                            int) const {
  return gradient(x);
}

Regularizer Regularizer::zero() { return Regularizer(Kind::Zero, 0, 0, 0, 0); }

Regularizer Regularizer::l1(double lambda) {
  if (!(lambda > 0)) throw UsageError("Regularizer::l1: lambda must be positive");
  return Regularizer(Kind::L1, lambda, 0, 0, 0);
}

Regularizer Regularizer::indicator_box(double lo, double hi) {
  if (!(lo <= hi)) throw UsageError("Regularizer::indicator_box: requires lo <= hi");
  return Regularizer(Kind::IndicatorBox, 0, lo, hi, 0);
}

Regularizer Regularizer::indicator_ball(double radius) {
  if (!(radius > 0)) throw UsageError("Regularizer::indicator_ball: radius must be positive");
  return Regularizer(Kind::IndicatorBall, 0, 0, 0, radius);
}

double Regularizer::evaluate(const ModelVector& x) const {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Feasibility slack so that exact projections are never judged infeasible.
  const double slack = 1e-12;
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::L1:
      return lambda_ * x.lpNorm<1>();
    case Kind::IndicatorBox: {
      const double span = std::max(std::abs(lo_), std::abs(hi_)) + 1.0;
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (x[j] < lo_ - slack * span || x[j] > hi_ + slack * span) return kInf;
      }
      return 0.0;
    }
    case Kind::IndicatorBall:
      return x.norm() <= radius_ * (1.0 + slack) + slack ? 0.0 : kInf;
  }
  return 0.0;
}

ModelVector Regularizer::prox(const ModelVector& v, double step) const {
  if (!(step > 0)) throw UsageError("Regularizer::prox: step must be positive");
  switch (kind_) {
    case Kind::Zero:
      return v;
    case Kind::L1: {
      const double t = step * lambda_;
      ModelVector out(v.size());
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (v[j] > t) {
          out[j] = v[j] - t;
        } else if (v[j] < -t) {
          out[j] = v[j] + t;
        } else {
          out[j] = 0.0;
        }
      }
      return out;
    }
    case Kind::IndicatorBox:
      return v.cwiseMax(lo_).cwiseMin(hi_);
    case Kind::IndicatorBall: {
      const double norm = v.norm();
      if (norm <= radius_) return v;
      return v * (radius_ / norm);
    }
  }
  return v;
}

void CompositeProblem::validate() const {
  if (clients.empty()) throw UsageError("CompositeProblem: needs at least one client");
  if (dimension < 1) throw UsageError("CompositeProblem: dimension must be >= 1");
  if (!(lipschitz_L > 0)) throw UsageError("CompositeProblem: lipschitz_L must be positive");
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (!clients[i]) throw UsageError("CompositeProblem: null client handle");
    if (clients[i]->dimension() != dimension) {
      throw UsageError("CompositeProblem: client " + std::to_string(i) +
                       " reports dimension " + std::to_string(clients[i]->dimension()) +
                       ", expected " + std::to_string(dimension));
    }
  }
}

double evaluate_smooth(const CompositeProblem& problem, const ModelVector& x) {
  if (x.size() != problem.dimension) {
    throw UsageError("evaluate_smooth: x has wrong dimension");
  }
  // Pairwise reduction in ascending client order keeps reruns bit-identical.
  const int n = problem.n_clients();
  std::vector<double> vals(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) vals[static_cast<std::size_t>(i)] = problem.client(i).evaluate(x);
  const std::function<double(int, int)> reduce = [&](int lo, int hi) -> double {
    if (hi - lo == 1) return vals[static_cast<std::size_t>(lo)];
    const int mid = lo + (hi - lo) / 2;
    return reduce(lo, mid) + reduce(mid, hi);
  };
  return reduce(0, n) / static_cast<double>(n);
}

double evaluate_objective(const CompositeProblem& problem, const ModelVector& x) {
  return evaluate_smooth(problem, x) + problem.regularizer.evaluate(x);
}

ModelVector full_gradient(const CompositeProblem& problem, const ModelVector& x) {
  if (x.size() != problem.dimension) {
    throw UsageError("full_gradient: x has wrong dimension");
  }
  const int n = problem.n_clients();
  std::vector<ModelVector> grads(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    grads[static_cast<std::size_t>(i)] = problem.client(i).gradient(x);
    if (!grads[static_cast<std::size_t>(i)].allFinite()) {
      throw NumericError("full_gradient: client gradient is not finite", -1, i);
    }
  }
  return stable_mean(grads);
}

}  // namespace fedcomp
