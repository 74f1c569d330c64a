#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fedcomp/data.hpp"
#include "fedcomp/equivalence.hpp"
#include "fedcomp/problems.hpp"
#include "fedcomp/prox.hpp"

using namespace fedcomp;

namespace {

ModelVector scalar(double v) {
  ModelVector x(1);
  x << v;
  return x;
}

ModelVector random_vector(std::mt19937_64& eng, int d, double spread = 1.0) {
  std::normal_distribution<double> normal(0.0, spread);
  ModelVector x(d);
  for (int j = 0; j < d; ++j) x(j) = normal(eng);
  return x;
}

RunConfig base_config(int n, int rounds, double eta) {
  RunConfig config;
  config.eta = eta;
  config.rounds = rounds;
  config.sampling = SamplingScheme::full_participation(n);
  config.solver = LocalSolver::exact();
  return config;
}

}  // namespace

TEST_CASE("mapping evaluates the hand examples") {
  const DrPoint p = map_admm_to_dr(scalar(1.0), scalar(1.0), scalar(1.0), 1.0);
  CHECK(p.s(0) == 0.0);
  CHECK(p.u(0) == 1.0);
  CHECK(p.uhat(0) == 2.0);
  CHECK(p.vbar(0) == 1.0);

  const AdmmPoint q = map_dr_to_admm(scalar(0.0), scalar(1.0), scalar(1.0), 1.0);
  CHECK(q.x(0) == 1.0);
  CHECK(q.z(0) == 1.0);
  CHECK(q.xbar(0) == 1.0);
}

TEST_CASE("zero dual collapses the mapped triple onto x") {
  std::mt19937_64 eng(3);
  const ModelVector x = random_vector(eng, 5);
  const ModelVector xbar = random_vector(eng, 5);
  const DrPoint p = map_admm_to_dr(x, ModelVector::Zero(5), xbar, 0.7);
  CHECK(p.s == x);
  CHECK(p.u == x);
  CHECK(p.uhat == x);
  CHECK(p.vbar == xbar);

  // s = u maps back to a zero dual.
  const AdmmPoint q = map_dr_to_admm(x, x, xbar, 0.7);
  CHECK(q.z.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("scaling eta and z together leaves the mapped triple unchanged") {
  std::mt19937_64 eng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const ModelVector x = random_vector(eng, 4);
    const ModelVector z = random_vector(eng, 4);
    const ModelVector xbar = random_vector(eng, 4);
    const double eta = 0.25 + trial * 0.1;
    const DrPoint a = map_admm_to_dr(x, z, xbar, eta);
    const DrPoint b = map_admm_to_dr(x, 2.0 * z, xbar, 2.0 * eta);
    CHECK(a.s == b.s);
    CHECK(a.u == b.u);
    CHECK(a.uhat == b.uhat);
  }
}

TEST_CASE("the two directions are mutually inverse on random triples") {
  std::mt19937_64 eng(29);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + static_cast<int>(eng() % 6);
    const ModelVector x = random_vector(eng, d, 2.0);
    const ModelVector z = random_vector(eng, d, 3.0);
    const ModelVector xbar = random_vector(eng, d);
    const double eta = std::exp(random_vector(eng, 1)(0));  // spread over scales

    const DrPoint dr = map_admm_to_dr(x, z, xbar, eta);
    const AdmmPoint back = map_dr_to_admm(dr.s, dr.u, dr.vbar, eta);
    CHECK((back.x - x).lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + x.lpNorm<Eigen::Infinity>()));
    CHECK((back.z - z).lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + z.lpNorm<Eigen::Infinity>()));
    CHECK(back.xbar == xbar);

    // Reflection consistency of every mapped state.
    CHECK((dr.uhat - (2.0 * dr.u - dr.s)).lpNorm<Eigen::Infinity>() <=
          1e-14 * (1.0 + dr.uhat.lpNorm<Eigen::Infinity>()));

    const AdmmPoint admm = map_dr_to_admm(z, x, xbar, eta);  // arbitrary (s, u) pair
    const DrPoint there = map_admm_to_dr(admm.x, admm.z, admm.xbar, eta);
    CHECK((there.s - z).lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + z.lpNorm<Eigen::Infinity>()));
    CHECK(there.u == x);
  }
}

TEST_CASE("mapping guards its inputs") {
  CHECK_THROWS_AS(map_admm_to_dr(scalar(1.0), scalar(1.0), scalar(1.0), 0.0), UsageError);
  CHECK_THROWS_AS(map_admm_to_dr(scalar(1.0), ModelVector::Zero(2), scalar(1.0), 1.0),
                  UsageError);
  CHECK_THROWS_AS(map_dr_to_admm(scalar(0.0), scalar(1.0), ModelVector::Zero(3), 1.0),
                  UsageError);
}

TEST_CASE("one exact round satisfies the mapped update displays") {
  const int n = 3;
  const int d = 4;
  const double eta = 1.7;
  std::mt19937_64 eng(101);

  std::vector<std::shared_ptr<const QuadraticClient>> clients;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Random(d, d);
    Eigen::MatrixXd a = q.transpose() * q + Eigen::MatrixXd::Identity(d, d);
    clients.push_back(std::make_shared<QuadraticClient>(a, random_vector(eng, d)));
  }
  QuadraticInstance inst = make_quadratic_problem(clients, Regularizer::l1(0.05));

  // Arbitrary consistent mid-run state: xhat = x + z/eta, xtilde = mean(xhat).
  FedADMMState state;
  for (int i = 0; i < n; ++i) {
    state.x.push_back(random_vector(eng, d));
    state.z.push_back(random_vector(eng, d));
    state.xhat.push_back(state.x.back() + state.z.back() / eta);
  }
  state.xtilde = stable_mean(state.xhat);
  state.xbar = random_vector(eng, d);

  // Mapped image of the pre-round state.
  std::vector<DrPoint> before;
  for (int i = 0; i < n; ++i) {
    before.push_back(map_admm_to_dr(state.x[static_cast<std::size_t>(i)],
                                    state.z[static_cast<std::size_t>(i)], state.xbar, eta));
  }

  RunConfig config = base_config(n, 1, eta);
  FedADMMState after = state;
  fedadmm_round(after, inst.problem, config, 0);

  const double r = 1.0 / eta;  // the equivalent DR proximal step
  std::vector<ModelVector> uhat_next;
  for (int i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const DrPoint mapped = map_admm_to_dr(after.x[idx], after.z[idx], after.xbar, eta);

    // s' = s + (vbar - u)
    const ModelVector s_expected = before[idx].s + (before[idx].vbar - before[idx].u);
    CHECK((mapped.s - s_expected).lpNorm<Eigen::Infinity>() <= 1e-12);
    // u' = prox_{r f}(s')
    const ModelVector u_expected = prox_exact(inst.problem.client(i), s_expected, r);
    CHECK((mapped.u - u_expected).lpNorm<Eigen::Infinity>() <= 1e-12);
    // uhat' = 2u' - s'
    CHECK((mapped.uhat - (2.0 * mapped.u - mapped.s)).lpNorm<Eigen::Infinity>() <= 1e-12);
    uhat_next.push_back(mapped.uhat);
  }
  // vbar' = prox_{r g}(mean(uhat'))
  const ModelVector vbar_expected =
      inst.problem.regularizer.prox(stable_mean(uhat_next), r);
  CHECK((after.xbar - vbar_expected).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("lockstep run on a 2-client quadratic passes at machine precision") {
  const QuadraticInstance inst = make_quadratic_problem(
      {centered_quadratic_1d(1.0, 0.0), centered_quadratic_1d(1.0, 2.0)});
  const LockstepReport report =
      lockstep_verify(inst.problem, scalar(0.0), base_config(2, 20, 1.0));
  CHECK(report.pass);
  CHECK(report.max_deviation <= 1e-12);
  REQUIRE(report.rounds.size() == 21);
  for (const LockstepRound& row : report.rounds) {
    CHECK(row.pass);
    CHECK(row.tolerance == 1e-10);
  }
}

TEST_CASE("lockstep holds off the unit penalty and under a regularizer") {
  const QuadraticInstance inst = make_quadratic_instance(5, 4, 71);
  CompositeProblem problem = inst.problem;
  problem.regularizer = Regularizer::l1(0.1);
  problem.optimal_value_hint.reset();

  RunConfig config = base_config(5, 30, 2.5);
  config.sampling = SamplingScheme::uniform_subset(2, 5);
  config.master_seed = 17;

  const LockstepReport report =
      lockstep_verify(problem, ModelVector::Constant(4, 0.8), config);
  CHECK(report.pass);
  CHECK(report.max_deviation <= 1e-10);
}

TEST_CASE("lockstep with iterative local solves passes the relaxed budget") {
  const SyntheticSpec spec{0.5, 0.5, 6, 8, 3, 10, 30, 424242};
  const DatasetBundle bundle = generate_synthetic(spec);
  const CompositeProblem problem = make_logistic_instance(bundle, 0.05);

  RunConfig config = base_config(6, 15, 1.0);
  config.sampling = SamplingScheme::uniform_subset(2, 6);
  config.master_seed = 9;
  config.solver = LocalSolver::gradient_descent(1500);  // auto step, tight solves

  const LockstepReport report =
      lockstep_verify(problem, ModelVector::Zero(problem.dimension), config);
  CHECK(report.pass);
  for (const LockstepRound& row : report.rounds) {
    CHECK(row.tolerance == doctest::Approx(1e-8).epsilon(1e-12));
  }
  CHECK(report.max_deviation <= 1e-8);
}

TEST_CASE("mismatched sampling seeds are a failing negative control") {
  const QuadraticInstance inst = make_quadratic_instance(6, 3, 55);
  RunConfig admm = base_config(6, 12, 1.0);
  admm.sampling = SamplingScheme::uniform_subset(2, 6);
  admm.master_seed = 100;

  RunConfig feddr = admm;
  feddr.master_seed = 101;  // decouples the participation realizations

  const LockstepReport report =
      lockstep_verify(inst.problem, ModelVector::Constant(3, 1.0), admm, feddr);
  CHECK_FALSE(report.pass);
  CHECK(report.max_deviation > 1e-6);
}

TEST_CASE("structural config mismatches are usage errors") {
  const QuadraticInstance inst = make_quadratic_instance(4, 2, 8);
  const ModelVector x0 = ModelVector::Zero(2);
  const RunConfig admm = base_config(4, 5, 2.0);

  RunConfig wrong_eta = admm;  // FedDR must run at 1/eta
  CHECK_THROWS_AS(lockstep_verify(inst.problem, x0, admm, wrong_eta), UsageError);

  RunConfig mirrored = admm;
  mirrored.eta = 1.0 / admm.eta;

  RunConfig bad_alpha = mirrored;
  bad_alpha.alpha = 2.0;
  CHECK_THROWS_AS(lockstep_verify(inst.problem, x0, admm, bad_alpha), UsageError);

  RunConfig bad_scheme = mirrored;
  bad_scheme.sampling = SamplingScheme::uniform_subset(2, 4);
  CHECK_THROWS_AS(lockstep_verify(inst.problem, x0, admm, bad_scheme), UsageError);

  RunConfig bad_solver = mirrored;
  bad_solver.solver = LocalSolver::gradient_descent(100, 0.1);
  CHECK_THROWS_AS(lockstep_verify(inst.problem, x0, admm, bad_solver), UsageError);

  RunConfig bad_eps = mirrored;
  bad_eps.eps.eps0 = 0.01;
  CHECK_THROWS_AS(lockstep_verify(inst.problem, x0, admm, bad_eps), UsageError);

  RunConfig bad_rounds = mirrored;
  bad_rounds.rounds = 6;
  CHECK_THROWS_AS(lockstep_verify(inst.problem, x0, admm, bad_rounds), UsageError);

  // The mirrored config itself is accepted.
  CHECK_NOTHROW(lockstep_verify(inst.problem, x0, admm, mirrored));
}

TEST_CASE("lockstep report renders as csv") {
  const QuadraticInstance inst = make_quadratic_problem(
      {centered_quadratic_1d(1.0, 0.0), centered_quadratic_1d(2.0, 1.0)});
  const LockstepReport report =
      lockstep_verify(inst.problem, scalar(0.3), base_config(2, 4, 1.0));
  std::ostringstream out;
  write_lockstep_csv(report, out);
  const std::string text = out.str();
  CHECK(text.rfind("# fedcomp-lockstep-v1\n", 0) == 0);
  CHECK(text.find("round,dev_s,dev_u,dev_uhat,dev_vbar,pass") != std::string::npos);
  std::size_t lines = 0;
  for (const char ch : text) lines += ch == '\n' ? 1 : 0;
  CHECK(lines == 2 + report.rounds.size());
  // Every data row of this passing run ends in ",1".
  CHECK(text.find(",0\n") == std::string::npos);
}
