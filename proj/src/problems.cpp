#include "fedcomp/problems.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

namespace fedcomp {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

double stable_sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(sum exp(logits)) with max-shift stabilization.
double log_sum_exp(const Eigen::VectorXd& logits) {
  const double peak = logits.maxCoeff();
  return peak + std::log((logits.array() - peak).exp().sum());
}

std::vector<int> all_rows(int count) {
  std::vector<int> rows(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

std::vector<int> sample_rows(int count, std::uint64_t batch_seed, int batch_size) {
  if (batch_size < 1) {
    throw UsageError("stochastic gradient: batch_size must be at least 1");
  }
  auto eng = rng::engine(batch_seed);
  std::uniform_int_distribution<int> pick(0, count - 1);
  std::vector<int> rows(static_cast<std::size_t>(batch_size));
  for (int& row : rows) row = pick(eng);
  return rows;
}

void check_shard(const ClientShard& shard, const char* who) {
  if (shard.n_samples() == 0) {
    throw ConfigError(std::string(who) + ": empty shard");
  }
  if (shard.n_classes < 2) {
    throw UsageError(std::string(who) + ": need at least two classes");
  }
  if (static_cast<int>(shard.labels.size()) != shard.n_samples()) {
    throw UsageError(std::string(who) + ": label count does not match sample count");
  }
  for (const std::uint32_t label : shard.labels) {
    if (label >= static_cast<std::uint32_t>(shard.n_classes)) {
      throw UsageError(std::string(who) + ": label out of class range");
    }
  }
  if (!shard.features.allFinite()) {
    throw UsageError(std::string(who) + ": non-finite features");
  }
}

void check_ridge(double ridge, const char* who) {
  if (!std::isfinite(ridge) || ridge < 0.0) {
    throw UsageError(std::string(who) + ": ridge must be finite and nonnegative");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// QuadraticClient
// ---------------------------------------------------------------------------

QuadraticClient::QuadraticClient(Eigen::MatrixXd a, ModelVector b, double c)
    : a_(std::move(a)), b_(std::move(b)), c_(c) {
  if (a_.rows() != a_.cols() || a_.rows() < 1) {
    throw UsageError("quadratic client: curvature matrix must be square and nonempty");
  }
  if (b_.size() != a_.rows()) {
    throw UsageError("quadratic client: linear term dimension mismatch");
  }
  if (!a_.allFinite() || !b_.allFinite() || !std::isfinite(c_)) {
    throw UsageError("quadratic client: non-finite coefficients");
  }
  const double scale = std::max(1.0, a_.cwiseAbs().maxCoeff());
  if ((a_ - a_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw UsageError("quadratic client: curvature matrix must be symmetric");
  }
  a_ = ((a_ + a_.transpose()) / 2.0).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a_, Eigen::EigenvaluesOnly);
  const double max_ev = eig.eigenvalues().maxCoeff();
  const double min_ev = eig.eigenvalues().minCoeff();
  if (min_ev < -1e-10 * std::max(1.0, std::abs(max_ev))) {
    throw UsageError("quadratic client: curvature matrix must be positive semidefinite");
  }
  lipschitz_ = std::max(max_ev, 0.0);
}

int QuadraticClient::dimension() const { return static_cast<int>(a_.rows()); }

double QuadraticClient::evaluate(const ModelVector& x) const {
  require_same_dim(x, b_, "quadratic evaluate");
  return 0.5 * x.dot(a_ * x) - b_.dot(x) + c_;
}

ModelVector QuadraticClient::gradient(const ModelVector& x) const {
  require_same_dim(x, b_, "quadratic gradient");
  return a_ * x - b_;
}

double QuadraticClient::lipschitz() const { return lipschitz_; }

ModelVector QuadraticClient::exact_prox(const ModelVector& v, double eta) const {
  require_same_dim(v, b_, "quadratic prox");
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw UsageError("quadratic prox: step must be positive and finite");
  }
  Eigen::MatrixXd system = eta * a_;
  system.diagonal().array() += 1.0;
  const ModelVector rhs = eta * b_ + v;
  const ModelVector y = system.ldlt().solve(rhs);
  require_finite(y, "quadratic prox");
  return y;
}

std::shared_ptr<const QuadraticClient> centered_quadratic_1d(double curvature,
                                                             double center) {
  if (!(curvature >= 0.0) || !std::isfinite(curvature) || !std::isfinite(center)) {
    throw UsageError("centered quadratic: curvature must be finite and nonnegative");
  }
  Eigen::MatrixXd a(1, 1);
  a(0, 0) = curvature;
  ModelVector b(1);
  b[0] = curvature * center;
  return std::make_shared<const QuadraticClient>(a, b, 0.5 * curvature * center * center);
}

QuadraticInstance make_quadratic_problem(
    std::vector<std::shared_ptr<const QuadraticClient>> clients, Regularizer regularizer) {
  if (clients.empty()) {
    throw UsageError("quadratic problem: need at least one client");
  }
  const int d = clients[0]->dimension();
  Eigen::MatrixXd mean_a = Eigen::MatrixXd::Zero(d, d);
  ModelVector mean_b = ModelVector::Zero(d);
  double max_l = 0.0;
  for (const auto& client : clients) {
    if (!client) throw UsageError("quadratic problem: null client");
    if (client->dimension() != d) {
      throw UsageError("quadratic problem: client dimension mismatch");
    }
    mean_a += client->curvature();
    mean_b += client->linear_term();
    max_l = std::max(max_l, client->lipschitz());
  }
  const double n = static_cast<double>(clients.size());
  mean_a /= n;
  mean_b /= n;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mean_a, Eigen::EigenvaluesOnly);
  const double max_ev = eig.eigenvalues().maxCoeff();
  if (eig.eigenvalues().minCoeff() < 1e-12 * std::max(1.0, max_ev)) {
    throw NumericError(
        "quadratic problem: mean curvature is singular, the smooth part has no "
        "unique minimizer");
  }

  QuadraticInstance instance;
  instance.minimizer = mean_a.ldlt().solve(mean_b);
  require_finite(instance.minimizer, "quadratic minimizer");

  instance.problem.clients.assign(clients.begin(), clients.end());
  instance.problem.regularizer = regularizer;
  instance.problem.lipschitz_L = max_l;
  instance.problem.dimension = d;
  if (regularizer.is_zero()) {
    instance.problem.optimal_value_hint =
        evaluate_objective(instance.problem, instance.minimizer);
  }
  instance.problem.validate();
  return instance;
}

QuadraticInstance make_quadratic_instance(int n_clients, int dim, std::uint64_t seed,
                                          double eig_min, double eig_max) {
  if (n_clients < 1 || dim < 1) {
    throw UsageError("quadratic instance: need n_clients >= 1 and dim >= 1");
  }
  if (!(eig_min > 0.0) || !(eig_max >= eig_min) || !std::isfinite(eig_max)) {
    throw UsageError("quadratic instance: require 0 < eig_min <= eig_max");
  }

  const auto build = [&](double ridge) {
    std::vector<std::shared_ptr<const QuadraticClient>> clients;
    clients.reserve(static_cast<std::size_t>(n_clients));
    for (int i = 0; i < n_clients; ++i) {
      auto eng = rng::engine(rng::derive(seed, "quadratic.client", static_cast<std::uint64_t>(i)));
      std::normal_distribution<double> gauss;
      std::uniform_real_distribution<double> spectrum(eig_min, eig_max);

      Eigen::MatrixXd raw(dim, dim);
      for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) raw(r, c) = gauss(eng);
      }
      const Eigen::MatrixXd q =
          Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ();
      Eigen::VectorXd lambda(dim);
      for (int r = 0; r < dim; ++r) lambda[r] = spectrum(eng) + ridge;
      Eigen::MatrixXd a = q * lambda.asDiagonal() * q.transpose();
      a = ((a + a.transpose()) / 2.0).eval();

      ModelVector b(dim);
      for (int r = 0; r < dim; ++r) b[r] = gauss(eng);
      clients.push_back(std::make_shared<const QuadraticClient>(std::move(a), std::move(b)));
    }
    return make_quadratic_problem(std::move(clients));
  };

  try {
    return build(0.0);
  } catch (const NumericError&) {
    // Near-singular mean curvature (possible only for tiny eig_min): nudge
    // every client's spectrum up and rebuild once.
    return build(std::max(1e-6, 1e-3 * eig_min));
  }
}

// ---------------------------------------------------------------------------
// LogisticClient
// ---------------------------------------------------------------------------

LogisticClient::LogisticClient(ClientShard shard, double ridge)
    : shard_(std::move(shard)), ridge_(ridge) {
  check_shard(shard_, "logistic client");
  check_ridge(ridge_, "logistic client");

  // Mean augmented Gram matrix over [features; 1] rows.
  const int d_in = shard_.input_dim();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d_in + 1, d_in + 1);
  Eigen::VectorXd phi(d_in + 1);
  for (int s = 0; s < shard_.n_samples(); ++s) {
    phi.head(d_in) = shard_.features.row(s).transpose();
    phi[d_in] = 1.0;
    gram.noalias() += phi * phi.transpose();
  }
  gram /= static_cast<double>(shard_.n_samples());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  lipschitz_ = 0.5 * eig.eigenvalues().maxCoeff() + ridge_;
}

int LogisticClient::dimension() const {
  return shard_.n_classes * (shard_.input_dim() + 1);
}

double LogisticClient::evaluate(const ModelVector& x) const {
  if (x.size() != dimension()) {
    throw UsageError("logistic evaluate: dimension mismatch");
  }
  const int n_cls = shard_.n_classes;
  const int d_in = shard_.input_dim();
  const RowMajorMap w(x.data(), n_cls, d_in);
  const auto bias = x.tail(n_cls);

  double total = 0.0;
  for (int s = 0; s < shard_.n_samples(); ++s) {
    const Eigen::VectorXd logits = w * shard_.features.row(s).transpose() + bias;
    total += log_sum_exp(logits) - logits[static_cast<int>(shard_.labels[s])];
  }
  return total / static_cast<double>(shard_.n_samples()) + 0.5 * ridge_ * x.squaredNorm();
}

ModelVector LogisticClient::batch_gradient(const ModelVector& x,
                                           const std::vector<int>& rows) const {
  const int n_cls = shard_.n_classes;
  const int d_in = shard_.input_dim();
  const RowMajorMap w(x.data(), n_cls, d_in);
  const auto bias = x.tail(n_cls);

  ModelVector grad = ModelVector::Zero(x.size());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      grad_w(grad.data(), n_cls, d_in);
  auto grad_bias = grad.tail(n_cls);

  for (const int s : rows) {
    const Eigen::VectorXd feat = shard_.features.row(s).transpose();
    Eigen::VectorXd p = w * feat + bias;
    p = (p.array() - log_sum_exp(p)).exp();
    p[static_cast<int>(shard_.labels[s])] -= 1.0;
    grad_w.noalias() += p * feat.transpose();
    grad_bias += p;
  }
  grad /= static_cast<double>(rows.size());
  return grad;
}

ModelVector LogisticClient::gradient(const ModelVector& x) const {
  if (x.size() != dimension()) {
    throw UsageError("logistic gradient: dimension mismatch");
  }
  return batch_gradient(x, all_rows(shard_.n_samples())) + ridge_ * x;
}

double LogisticClient::lipschitz() const { return lipschitz_; }

ModelVector LogisticClient::stochastic_gradient(const ModelVector& x,
                                                std::uint64_t batch_seed,
                                                int batch_size) const {
  if (x.size() != dimension()) {
    throw UsageError("logistic stochastic gradient: dimension mismatch");
  }
  return batch_gradient(x, sample_rows(shard_.n_samples(), batch_seed, batch_size)) +
         ridge_ * x;
}

// ---------------------------------------------------------------------------
// MlpClient
// ---------------------------------------------------------------------------

MlpClient::MlpClient(ClientShard shard, int hidden_units, double ridge)
    : shard_(std::move(shard)), hidden_(hidden_units), ridge_(ridge) {
  check_shard(shard_, "mlp client");
  check_ridge(ridge_, "mlp client");
  if (hidden_ < 1) {
    throw UsageError("mlp client: need at least one hidden unit");
  }

  // Sampled Lipschitz estimate: largest gradient-difference ratio over wide
  // and short random pairs, doubled. Deterministic in the shard shape.
  auto eng = rng::engine(rng::derive(0, "mlp.lipschitz",
                                     static_cast<std::uint64_t>(hidden_),
                                     static_cast<std::uint64_t>(shard_.n_samples())));
  std::normal_distribution<double> gauss;
  const int d = dimension();
  double max_ratio = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    ModelVector x(d);
    ModelVector y(d);
    for (int j = 0; j < d; ++j) x[j] = gauss(eng);
    if (trial % 2 == 0) {
      for (int j = 0; j < d; ++j) y[j] = gauss(eng);
    } else {
      for (int j = 0; j < d; ++j) y[j] = x[j] + 1e-3 * gauss(eng);
    }
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    const double ratio = (gradient(x) - gradient(y)).norm() / dist;
    max_ratio = std::max(max_ratio, ratio);
  }
  lipschitz_ = 2.0 * std::max(max_ratio, 1e-8);
}

int MlpClient::dimension() const {
  const int d_in = shard_.input_dim();
  return hidden_ * (d_in + 1) + shard_.n_classes * (hidden_ + 1);
}

double MlpClient::batch_loss(const ModelVector& x, const std::vector<int>& rows) const {
  const int d_in = shard_.input_dim();
  const int n_cls = shard_.n_classes;
  const RowMajorMap w1(x.data(), hidden_, d_in);
  const auto b1 = x.segment(hidden_ * d_in, hidden_);
  const RowMajorMap w2(x.data() + hidden_ * (d_in + 1), n_cls, hidden_);
  const auto b2 = x.tail(n_cls);

  double total = 0.0;
  for (const int s : rows) {
    Eigen::VectorXd hid = w1 * shard_.features.row(s).transpose() + b1;
    for (int j = 0; j < hidden_; ++j) hid[j] = stable_sigmoid(hid[j]);
    const Eigen::VectorXd logits = w2 * hid + b2;
    total += log_sum_exp(logits) - logits[static_cast<int>(shard_.labels[s])];
  }
  return total / static_cast<double>(rows.size());
}

double MlpClient::evaluate(const ModelVector& x) const {
  if (x.size() != dimension()) {
    throw UsageError("mlp evaluate: dimension mismatch");
  }
  return batch_loss(x, all_rows(shard_.n_samples())) + 0.5 * ridge_ * x.squaredNorm();
}

ModelVector MlpClient::batch_gradient(const ModelVector& x,
                                      const std::vector<int>& rows) const {
  const int d_in = shard_.input_dim();
  const int n_cls = shard_.n_classes;
  const RowMajorMap w1(x.data(), hidden_, d_in);
  const auto b1 = x.segment(hidden_ * d_in, hidden_);
  const RowMajorMap w2(x.data() + hidden_ * (d_in + 1), n_cls, hidden_);
  const auto b2 = x.tail(n_cls);

  ModelVector grad = ModelVector::Zero(x.size());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      g_w1(grad.data(), hidden_, d_in);
  auto g_b1 = grad.segment(hidden_ * d_in, hidden_);
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      g_w2(grad.data() + hidden_ * (d_in + 1), n_cls, hidden_);
  auto g_b2 = grad.tail(n_cls);

  for (const int s : rows) {
    const Eigen::VectorXd feat = shard_.features.row(s).transpose();
    Eigen::VectorXd hid = w1 * feat + b1;
    for (int j = 0; j < hidden_; ++j) hid[j] = stable_sigmoid(hid[j]);
    Eigen::VectorXd p = w2 * hid + b2;
    p = (p.array() - log_sum_exp(p)).exp();
    p[static_cast<int>(shard_.labels[s])] -= 1.0;

    g_w2.noalias() += p * hid.transpose();
    g_b2 += p;
    const Eigen::VectorXd back =
        (w2.transpose() * p).cwiseProduct(hid.cwiseProduct(Eigen::VectorXd::Ones(hidden_) - hid));
    g_w1.noalias() += back * feat.transpose();
    g_b1 += back;
  }
  grad /= static_cast<double>(rows.size());
  return grad;
}

ModelVector MlpClient::gradient(const ModelVector& x) const {
  if (x.size() != dimension()) {
    throw UsageError("mlp gradient: dimension mismatch");
  }
  return batch_gradient(x, all_rows(shard_.n_samples())) + ridge_ * x;
}

double MlpClient::lipschitz() const { return lipschitz_; }

ModelVector MlpClient::stochastic_gradient(const ModelVector& x, std::uint64_t batch_seed,
                                           int batch_size) const {
  if (x.size() != dimension()) {
    throw UsageError("mlp stochastic gradient: dimension mismatch");
  }
  return batch_gradient(x, sample_rows(shard_.n_samples(), batch_seed, batch_size)) +
         ridge_ * x;
}

// ---------------------------------------------------------------------------
// Instance factories over dataset bundles
// ---------------------------------------------------------------------------

namespace {

CompositeProblem assemble(std::vector<std::shared_ptr<const ClientLoss>> clients,
                          Regularizer regularizer) {
  CompositeProblem problem;
  problem.dimension = clients[0]->dimension();
  double max_l = 0.0;
  for (const auto& client : clients) max_l = std::max(max_l, client->lipschitz());
  problem.clients = std::move(clients);
  problem.regularizer = regularizer;
  problem.lipschitz_L = max_l;
  problem.validate();
  return problem;
}

}  // namespace

CompositeProblem make_logistic_instance(const DatasetBundle& bundle, double ridge,
                                        Regularizer regularizer) {
  if (bundle.shards.empty()) {
    throw ConfigError("logistic instance: bundle has no shards");
  }
  std::vector<std::shared_ptr<const ClientLoss>> clients;
  clients.reserve(bundle.shards.size());
  for (const ClientShard& shard : bundle.shards) {
    clients.push_back(std::make_shared<const LogisticClient>(shard, ridge));
  }
  return assemble(std::move(clients), regularizer);
}

CompositeProblem make_mlp_instance(const DatasetBundle& bundle, int hidden_units,
                                   double ridge, Regularizer regularizer) {
  if (bundle.shards.empty()) {
    throw ConfigError("mlp instance: bundle has no shards");
  }
  std::vector<std::shared_ptr<const ClientLoss>> clients;
  clients.reserve(bundle.shards.size());
  for (const ClientShard& shard : bundle.shards) {
    clients.push_back(std::make_shared<const MlpClient>(shard, hidden_units, ridge));
  }
  return assemble(std::move(clients), regularizer);
}

// ---------------------------------------------------------------------------
// Pooled training accuracy
// ---------------------------------------------------------------------------

namespace {

int argmax_lowest(const Eigen::VectorXd& v) {
  int best = 0;
  for (int j = 1; j < v.size(); ++j) {
    if (v[j] > v[best]) best = j;
  }
  return best;
}

void check_accuracy_shards(const std::vector<ClientShard>& shards, const char* where) {
  if (shards.empty()) {
    throw UsageError(std::string(where) + ": no shards");
  }
  for (const ClientShard& shard : shards) {
    check_shard(shard, where);
    if (shard.input_dim() != shards[0].input_dim() ||
        shard.n_classes != shards[0].n_classes) {
      throw UsageError(std::string(where) + ": shards disagree on shape");
    }
  }
}

}  // namespace

double logistic_accuracy(const std::vector<ClientShard>& shards, const ModelVector& x) {
  check_accuracy_shards(shards, "logistic accuracy");
  const int n_cls = shards[0].n_classes;
  const int d_in = shards[0].input_dim();
  if (x.size() != n_cls * (d_in + 1)) {
    throw UsageError("logistic accuracy: dimension mismatch");
  }
  const RowMajorMap w(x.data(), n_cls, d_in);
  const auto bias = x.tail(n_cls);

  long long correct = 0;
  long long total = 0;
  for (const ClientShard& shard : shards) {
    for (int s = 0; s < shard.n_samples(); ++s) {
      const Eigen::VectorXd logits = w * shard.features.row(s).transpose() + bias;
      correct += argmax_lowest(logits) == static_cast<int>(shard.labels[s]) ? 1 : 0;
    }
    total += shard.n_samples();
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

double mlp_accuracy(const std::vector<ClientShard>& shards, int hidden_units,
                    const ModelVector& x) {
  check_accuracy_shards(shards, "mlp accuracy");
  if (hidden_units < 1) {
    throw UsageError("mlp accuracy: need at least one hidden unit");
  }
  const int n_cls = shards[0].n_classes;
  const int d_in = shards[0].input_dim();
  if (x.size() != hidden_units * (d_in + 1) + n_cls * (hidden_units + 1)) {
    throw UsageError("mlp accuracy: dimension mismatch");
  }
  const RowMajorMap w1(x.data(), hidden_units, d_in);
  const auto b1 = x.segment(hidden_units * d_in, hidden_units);
  const RowMajorMap w2(x.data() + hidden_units * (d_in + 1), n_cls, hidden_units);
  const auto b2 = x.tail(n_cls);

  long long correct = 0;
  long long total = 0;
  for (const ClientShard& shard : shards) {
    for (int s = 0; s < shard.n_samples(); ++s) {
      Eigen::VectorXd hid = w1 * shard.features.row(s).transpose() + b1;
      for (int j = 0; j < hidden_units; ++j) hid[j] = stable_sigmoid(hid[j]);
      const Eigen::VectorXd logits = w2 * hid + b2;
      correct += argmax_lowest(logits) == static_cast<int>(shard.labels[s]) ? 1 : 0;
    }
    total += shard.n_samples();
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace fedcomp
