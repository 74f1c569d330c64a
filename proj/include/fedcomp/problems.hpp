#ifndef FEDCOMP_PROBLEMS_HPP_
#define FEDCOMP_PROBLEMS_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <vector>

#include "fedcomp/core.hpp"
#include "fedcomp/data.hpp"
#include "fedcomp/problem.hpp"

namespace fedcomp {

// f(x) = 0.5 x'Ax - b'x + c with A symmetric positive semidefinite. The
// additive constant lets tests express shifted quadratics such as
// 0.5(x - a)^2 exactly, constants included.
class QuadraticClient final : public ClientLoss {
 public:
  QuadraticClient(Eigen::MatrixXd a, ModelVector b, double c = 0.0);

  int dimension() const override;
  double evaluate(const ModelVector& x) const override;
  ModelVector gradient(const ModelVector& x) const override;
  double lipschitz() const override;
  bool is_convex() const override { return true; }
  bool has_exact_prox() const override { return true; }
  // Closed form: solves (eta A + I) y = eta b + v.
  ModelVector exact_prox(const ModelVector& v, double eta) const override;

  const Eigen::MatrixXd& curvature() const { return a_; }
  const ModelVector& linear_term() const { return b_; }

 private:
  Eigen::MatrixXd a_;
  ModelVector b_;
  double c_;
  double lipschitz_;
};

// 1-D helper: f(x) = 0.5 * curvature * (x - center)^2 as a QuadraticClient.
std::shared_ptr<const QuadraticClient> centered_quadratic_1d(double curvature,
                                                             double center);

struct QuadraticInstance {
  CompositeProblem problem;
  ModelVector minimizer;  // argmin of the smooth part, (mean A)^-1 mean b
};

// Wraps explicit quadratic clients into a CompositeProblem, solving for the
// smooth minimizer. optimal_value_hint is filled only when the regularizer
// is zero (the composite minimum is unknown otherwise). A singular mean
// curvature has no minimizer and raises NumericError.
QuadraticInstance make_quadratic_problem(
    std::vector<std::shared_ptr<const QuadraticClient>> clients,
    Regularizer regularizer = Regularizer::zero());

// Random well-conditioned instance: per client A_i = Q diag(lambda) Q' with
// eigenvalues uniform in [eig_min, eig_max] and standard Gaussian b_i. If
// the mean curvature still comes out near-singular (possible only with tiny
// eig_min), a small ridge is added to every client and the instance is
// rebuilt once.
QuadraticInstance make_quadratic_instance(int n_clients, int dim, std::uint64_t seed,
                                          double eig_min = 0.5, double eig_max = 2.0);

// Multinomial logistic regression on one shard: mean cross-entropy of a
// linear softmax model plus ridge/2 * ||x||^2. Model layout: the first
// n_classes * input_dim entries hold W row-major (one block of input_dim
// weights per class), the final n_classes entries hold the biases.
class LogisticClient final : public ClientLoss {
 public:
  LogisticClient(ClientShard shard, double ridge);

  int dimension() const override;
  double evaluate(const ModelVector& x) const override;
  ModelVector gradient(const ModelVector& x) const override;
  // 0.5 * lambda_max of the mean augmented Gram matrix, plus the ridge;
  // 0.5 bounds the softmax Hessian over any number of classes.
  double lipschitz() const override;
  bool is_convex() const override { return true; }
  bool has_stochastic_gradient() const override { return true; }
  // Mini-batch gradient over indices drawn uniformly with replacement from
  // the shard; a pure function of (x, batch_seed, batch_size).
  ModelVector stochastic_gradient(const ModelVector& x, std::uint64_t batch_seed,
                                  int batch_size) const override;

  const ClientShard& shard() const { return shard_; }

 private:
  ModelVector batch_gradient(const ModelVector& x, const std::vector<int>& rows) const;

  ClientShard shard_;
  double ridge_;
  double lipschitz_;
};

// One-hidden-layer network, sigmoid activation, softmax cross-entropy, on
// one shard. Parameter layout: vec(W1) row-major, b1, vec(W2) row-major,
// b2, with W1 hidden x input and W2 classes x hidden.
class MlpClient final : public ClientLoss {
 public:
  MlpClient(ClientShard shard, int hidden_units, double ridge = 0.0);

  int dimension() const override;
  double evaluate(const ModelVector& x) const override;
  ModelVector gradient(const ModelVector& x) const override;
  // Sampled estimate: largest gradient-difference ratio over random pairs,
  // doubled as a safety margin. The exact global constant is impractical.
  double lipschitz() const override;
  bool is_convex() const override { return false; }
  bool has_stochastic_gradient() const override { return true; }
  ModelVector stochastic_gradient(const ModelVector& x, std::uint64_t batch_seed,
                                  int batch_size) const override;

 private:
  ModelVector batch_gradient(const ModelVector& x, const std::vector<int>& rows) const;
  double batch_loss(const ModelVector& x, const std::vector<int>& rows) const;

  ClientShard shard_;
  int hidden_;
  double ridge_;
  double lipschitz_;
};

// One LogisticClient per shard; problem L is the max client constant.
// Empty shards are rejected as configuration errors.
CompositeProblem make_logistic_instance(const DatasetBundle& bundle, double ridge,
                                        Regularizer regularizer = Regularizer::zero());

// One MlpClient per shard, all sharing the hidden width.
CompositeProblem make_mlp_instance(const DatasetBundle& bundle, int hidden_units = 32,
                                   double ridge = 0.0,
                                   Regularizer regularizer = Regularizer::zero());

// Pooled training accuracy of the linear softmax model over all shards:
// correctly predicted samples / total samples, argmax ties toward the lowest
// class index. The model layout matches LogisticClient.
double logistic_accuracy(const std::vector<ClientShard>& shards, const ModelVector& x);

// Same pooled match rate for the one-hidden-layer network (MlpClient layout).
double mlp_accuracy(const std::vector<ClientShard>& shards, int hidden_units,
                    const ModelVector& x);

}  // namespace fedcomp

#endif  // FEDCOMP_PROBLEMS_HPP_
