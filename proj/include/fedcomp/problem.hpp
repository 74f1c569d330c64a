#ifndef FEDCOMP_PROBLEM_HPP_
#define FEDCOMP_PROBLEM_HPP_

#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "fedcomp/core.hpp"

namespace fedcomp {

// Smooth per-client loss f_i. Implementations are immutable after
// construction and safe to share across concurrent client workers.
class ClientLoss {
 public:
  virtual ~ClientLoss() = default;

  virtual int dimension() const = 0;
  virtual double evaluate(const ModelVector& x) const = 0;
  virtual ModelVector gradient(const ModelVector& x) const = 0;

  // Upper bound on the gradient Lipschitz constant of this loss.
  virtual double lipschitz() const = 0;
  virtual bool is_convex() const { return false; }

  // Closed-form proximal point argmin_y f(y) + ||v-y||^2/(2*eta), when one exists.
  virtual bool has_exact_prox() const { return false; }
  virtual ModelVector exact_prox(const ModelVector& v, double eta) const;

  // Unbiased mini-batch gradient estimate; must be a pure function of
  // (x, batch_seed, batch_size). Losses without sample structure fall back
  // to the full gradient.
  virtual bool has_stochastic_gradient() const { return false; }
  virtual ModelVector stochastic_gradient(const ModelVector& x, std::uint64_t batch_seed,
                                          int batch_size) const;
};

// Convex, possibly nonsmooth regularizer g with an exact prox.
class Regularizer {
 public:
  enum class Kind { Zero, L1, IndicatorBox, IndicatorBall };

  static Regularizer zero();
  static Regularizer l1(double lambda);
  static Regularizer indicator_box(double lo, double hi);
  static Regularizer indicator_ball(double radius);

  Kind kind() const { return kind_; }
  bool is_zero() const { return kind_ == Kind::Zero; }

  // g(x); +inf for infeasible points of an indicator.
  double evaluate(const ModelVector& x) const;

  // prox_{step*g}(v); nonexpansive for every step > 0.
  ModelVector prox(const ModelVector& v, double step) const;

  double lambda() const { return lambda_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double radius() const { return radius_; }

 private:
  Regularizer(Kind kind, double lambda, double lo, double hi, double radius)
      : kind_(kind), lambda_(lambda), lo_(lo), hi_(hi), radius_(radius) {}

  Kind kind_;
  double lambda_ = 0.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
  double radius_ = 0.0;
};

// The composite objective F(x) = (1/n) sum_i f_i(x) + g(x).
struct CompositeProblem {
  std::vector<std::shared_ptr<const ClientLoss>> clients;
  Regularizer regularizer = Regularizer::zero();
  double lipschitz_L = 0.0;
  int dimension = 0;
  std::optional<double> optimal_value_hint;

  int n_clients() const { return static_cast<int>(clients.size()); }
  const ClientLoss& client(int i) const { return *clients[static_cast<std::size_t>(i)]; }

  // Throws UsageError if the bundle violates its structural invariants.
  void validate() const;
};

// F(x) = (1/n) sum f_i(x) + g(x); +inf when an indicator is infeasible.
double evaluate_objective(const CompositeProblem& problem, const ModelVector& x);

// Smooth part only: (1/n) sum f_i(x), summed in ascending client order.
double evaluate_smooth(const CompositeProblem& problem, const ModelVector& x);

// (1/n) sum grad f_i(x); deterministic pairwise reduction in client order.
ModelVector full_gradient(const CompositeProblem& problem, const ModelVector& x);

}  // namespace fedcomp

#endif  // FEDCOMP_PROBLEM_HPP_
