#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fedcomp/analysis.hpp"
#include "fedcomp/problems.hpp"
#include "fedcomp/runner.hpp"

using namespace fedcomp;

namespace {

ModelVector scalar(double v) {
  ModelVector x(1);
  x << v;
  return x;
}

// Hand-buildable constants for the iteration-count helper.
RateConstants plain_constants(double c1, double c2, double c3) {
  RateConstants c;
  c.c1 = c1;
  c.c2 = c2;
  c.c3 = c3;
  return c;
}

}  // namespace

TEST_CASE("stationarity residual vanishes at the smooth minimizer") {
  const QuadraticInstance inst = make_quadratic_instance(6, 5, 3);
  CHECK(grad_mapping_norm_sq(inst.problem, inst.minimizer, 1.0) <= 1e-18);
  // Dimension mismatch and bad step are rejected.
  CHECK_THROWS_AS(grad_mapping_norm_sq(inst.problem, scalar(0.0), 1.0), UsageError);
  CHECK_THROWS_AS(grad_mapping_norm_sq(inst.problem, inst.minimizer, 0.0), UsageError);
}

TEST_CASE("with g = 0 the mapping reduces to the plain gradient norm") {
  const QuadraticInstance inst = make_quadratic_instance(4, 6, 11);
  std::mt19937_64 eng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    ModelVector x(6);
    for (int j = 0; j < 6; ++j) x(j) = normal(eng);
    const double eta = 0.3 + 0.2 * trial;
    const double direct = grad_mapping_norm_sq(inst.problem, x, eta);
    // Forward-backward form evaluated by hand with the identity prox.
    const ModelVector grad = full_gradient(inst.problem, x);
    const ModelVector forward = x - eta * grad;
    const double mapped = ((x - forward) / eta).squaredNorm();
    CHECK(direct == doctest::Approx(mapped).epsilon(1e-14));
  }
}

TEST_CASE("soft-threshold mapping detects subdifferential stationarity") {
  // f(x) = 0.5 x^2 so f'(0) = 0; with g = 0.3 |x| the origin is stationary.
  QuadraticInstance inst =
      make_quadratic_problem({centered_quadratic_1d(1.0, 0.0)}, Regularizer::l1(0.3));
  CHECK(grad_mapping_norm_sq(inst.problem, scalar(0.0), 1.0) == 0.0);
  // At x = 1 with eta = 1 the forward point is 0, the prox keeps it at 0,
  // and the mapping is exactly 1.
  CHECK(grad_mapping_norm_sq(inst.problem, scalar(1.0), 1.0) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("admissible-step bound evaluates the closed form") {
  CHECK(stepsize_lower_bound(1.0, 0.1) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(stepsize_lower_bound(2.5, 0.1) == doctest::Approx(7.5).epsilon(1e-12));
  // The gamma4 -> 0 limit is 4L / (3 - 1) = 2L.
  CHECK(stepsize_lower_bound(1.0, 1e-9) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(stepsize_lower_bound(3.0, 1e-9) == doctest::Approx(6.0).epsilon(1e-6));
}

TEST_CASE("gamma4 outside (0, 1/4) is a domain error") {
  try {
    stepsize_lower_bound(1.0, 0.3);
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("square root nonpositive") != std::string::npos);
  }
  CHECK_THROWS_AS(stepsize_lower_bound(1.0, 0.25), UsageError);
  CHECK_THROWS_AS(stepsize_lower_bound(1.0, 0.0), UsageError);
  CHECK_THROWS_AS(stepsize_lower_bound(1.0, -0.1), UsageError);
  CHECK_THROWS_AS(stepsize_lower_bound(0.0, 0.1), UsageError);
}

TEST_CASE("rate constants match an independent evaluation at a pinned point") {
  // L = 1, eta = 4, gamma1 = gamma2 = gamma3 = 1, gamma4 = 0.1, p_hat = 1/3.
  const RateConstants c = compute_rate_constants(1.0, 4.0, 1.0, 1.0, 1.0, 0.1, 1.0 / 3.0);
  CHECK(c.eta_hat == doctest::Approx(0.25).epsilon(1e-15));
  // bracket = 2 - 1.25 - 0.125 - 0.4 * 1.0625 = 0.2
  // beta = (1/3) * 0.2 / (2 * 0.25 * 2 * 1.0625) = 0.2 / 3.1875
  CHECK(c.beta == doctest::Approx(0.2 / 3.1875).epsilon(1e-13));
  // rho2 = 2 * 1.5625 / 0.025 + 4.25 + 0.2 / 0.53125
  const double rho2 = 125.0 + 4.25 + 0.2 / 0.53125;
  CHECK(c.rho2 == doctest::Approx(rho2).epsilon(1e-13));
  CHECK(c.rho1 == doctest::Approx(rho2 + 4.25).epsilon(1e-13));
  CHECK(c.c1 == doctest::Approx(1593.75).epsilon(1e-13));
  CHECK(c.c2 == doctest::Approx((rho2 + 4.25) * 1593.75).epsilon(1e-13));
  CHECK(c.c3 == doctest::Approx(rho2 * 1593.75 + 50.0).epsilon(1e-13));
}

TEST_CASE("rate constants are positive and consistent across the admissible grid") {
  const double L = 1.0;
  for (int gi = 1; gi <= 10; ++gi) {
    const double gamma4 = 0.24 * gi / 10.0;
    const double bound = stepsize_lower_bound(L, gamma4);
    for (int ei = 0; ei < 10; ++ei) {
      const double eta = bound * (1.01 + (10.0 - 1.01) * ei / 9.0);
      const RateConstants c =
          compute_rate_constants(L, eta, 1.0, 1.0, 1.0, gamma4, 1.0 / 3.0);
      CHECK(c.beta > 0);
      CHECK(std::isfinite(c.beta));
      CHECK(c.rho1 > 0);
      CHECK(c.rho2 > 0);
      CHECK(c.c1 > 0);
      CHECK(c.c2 > 0);
      CHECK(c.c3 > 0);
      // Structural identities from the displayed formulas.
      const double eh = 1.0 / eta;
      CHECK(c.rho1 - c.rho2 ==
            doctest::Approx((1.0 + eh * eh * L * L) / eh).epsilon(1e-12));
      CHECK(c.c2 / c.c1 == doctest::Approx(c.rho1).epsilon(1e-12));
    }
  }
}

TEST_CASE("rate constants reject inadmissible parameters") {
  // eta below the admissible bound: beta would be nonpositive.
  try {
    compute_rate_constants(1.0, 2.9, 1.0, 1.0, 1.0, 0.1, 1.0);
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("nonpositive") != std::string::npos);
  }
  CHECK_THROWS_AS(compute_rate_constants(1.0, 4.0, 0.0, 1.0, 1.0, 0.1, 1.0), UsageError);
  CHECK_THROWS_AS(compute_rate_constants(1.0, 4.0, 1.0, -1.0, 1.0, 0.1, 1.0), UsageError);
  CHECK_THROWS_AS(compute_rate_constants(1.0, 4.0, 1.0, 1.0, 0.0, 0.1, 1.0), UsageError);
  CHECK_THROWS_AS(compute_rate_constants(1.0, 4.0, 1.0, 1.0, 1.0, 0.3, 1.0), UsageError);
  CHECK_THROWS_AS(compute_rate_constants(1.0, 4.0, 1.0, 1.0, 1.0, 0.1, 0.0), UsageError);
  CHECK_THROWS_AS(compute_rate_constants(1.0, 4.0, 1.0, 1.0, 1.0, 0.1, 1.5), UsageError);
}

TEST_CASE("iteration count evaluates the floor expression") {
  CHECK(iterations_to_target(plain_constants(10.0, 0.0, 0.0), 1.0, 0.0, 1.0) == 10);
  CHECK(iterations_to_target(plain_constants(10.0, 3.0, 4.0), 0.0, 0.0, 0.5) == 0);
  CHECK(iterations_to_target(plain_constants(7.0, 2.0, 3.0), 2.0, 1.5, 1.0) ==
        static_cast<long long>(std::floor(7.0 * 2.0 + 5.0 * 1.5)));
}

TEST_CASE("halving the target accuracy quadruples the count up to flooring") {
  const RateConstants c = compute_rate_constants(1.0, 4.0, 1.0, 1.0, 1.0, 0.1, 1.0 / 3.0);
  const double gap = 1.37;
  const double budget = 0.253;
  double eps = 1.0;
  for (int step = 0; step < 4; ++step) {
    const long long base = iterations_to_target(c, gap, budget, eps);
    const long long refined = iterations_to_target(c, gap, budget, eps / 2.0);
    CHECK(refined >= 4 * base);
    CHECK(refined <= 4 * base + 3);
    eps /= 2.0;
  }
}

TEST_CASE("iteration count rejects bad inputs") {
  const RateConstants c = plain_constants(1.0, 1.0, 1.0);
  CHECK_THROWS_AS(iterations_to_target(c, 1.0, 0.0, 0.0), UsageError);
  CHECK_THROWS_AS(iterations_to_target(c, -1.0, 0.0, 1.0), UsageError);
  CHECK_THROWS_AS(iterations_to_target(c, 1.0, -0.5, 1.0), UsageError);
  CHECK_THROWS_AS(iterations_to_target(c, 1e308, 0.0, 1e-9), UsageError);
}

TEST_CASE("log-log slope recovers exact power laws") {
  std::vector<double> inverse;
  std::vector<double> inv_sqrt;
  for (int k = 0; k < 60; ++k) {
    inverse.push_back(1.0 / (k + 1));
    inv_sqrt.push_back(2.5 / std::sqrt(k + 1.0));
  }
  CHECK(loglog_slope(inverse) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(loglog_slope(inv_sqrt) == doctest::Approx(-0.5).epsilon(1e-12));

  // Nonpositive entries are skipped, short inputs rejected.
  std::vector<double> with_zero = {0.0, 1.0, 0.5, 0.0, 0.25};
  CHECK_NOTHROW(loglog_slope(with_zero));
  const std::vector<double> too_short = {1.0};
  CHECK_THROWS_AS(loglog_slope(too_short), UsageError);
}

TEST_CASE("averaged runs satisfy the bound on a partial-participation quadratic") {
  const QuadraticInstance inst = make_quadratic_instance(6, 4, 19, 0.9, 1.0);
  const double L = inst.problem.lipschitz_L;
  const double gamma4 = 0.1;
  const double eta = stepsize_lower_bound(L, gamma4) * 4.0 / 3.0;
  const RateConstants constants =
      compute_rate_constants(L, eta, 1.0, 1.0, 1.0, gamma4, 2.0 / 6.0);

  RunConfig config;
  config.eta = eta;
  config.rounds = 40;
  config.sampling = SamplingScheme::uniform_subset(2, 6);
  config.solver = LocalSolver::exact();

  std::vector<RunTrace> traces;
  for (int seed = 0; seed < 4; ++seed) {
    config.master_seed = 1000 + static_cast<std::uint64_t>(seed);
    traces.push_back(run_algorithm(Algorithm::FedDR, inst.problem,
                                   ModelVector::Constant(4, 1.5), config));
  }

  const RateCheckReport report =
      check_rate_bound(traces, inst.problem, constants, config.eps);
  CHECK(report.averaged);
  CHECK(report.violations == 0);
  CHECK(report.pass);
  REQUIRE(report.rows.size() == 41);
  CHECK(std::isfinite(report.slope));
  for (const RateCheckRow& row : report.rows) {
    CHECK(row.pass);
    CHECK(row.lhs_avg >= 0);
    CHECK(row.ratio <= 1.0);
  }
  // With a zero accuracy budget the right-hand side decays like 1/(k+1).
  for (std::size_t k = 1; k < report.rows.size(); ++k) {
    CHECK(report.rows[k].rhs <= report.rows[k - 1].rhs);
  }

  SUBCASE("csv rendering") {
    std::ostringstream out;
    write_rate_csv(report, out);
    const std::string text = out.str();
    CHECK(text.rfind("# fedcomp-rate-v1\n", 0) == 0);
    CHECK(text.find("K,lhs_avg,rhs,ratio,pass") != std::string::npos);
    // Header comment + column row + one line per K.
    std::size_t lines = 0;
    for (const char ch : text) lines += ch == '\n' ? 1 : 0;
    CHECK(lines == 2 + report.rows.size());
  }

  SUBCASE("single-seed runs flag but do not fail") {
    const RateCheckReport single =
        check_rate_bound({traces.data(), 1}, inst.problem, constants, config.eps);
    CHECK_FALSE(single.averaged);
    CHECK(single.pass);
  }
}

TEST_CASE("rate check rejects unusable inputs") {
  const QuadraticInstance inst = make_quadratic_instance(4, 3, 5);
  RunConfig config;
  config.rounds = 5;
  config.sampling = SamplingScheme::full_participation(4);
  const RateConstants constants =
      compute_rate_constants(inst.problem.lipschitz_L, 4.0 * inst.problem.lipschitz_L, 1.0,
                             1.0, 1.0, 0.1, 1.0);
  config.eta = 4.0 * inst.problem.lipschitz_L;
  const RunTrace trace =
      run_algorithm(Algorithm::FedDR, inst.problem, ModelVector::Zero(3), config);
  std::vector<RunTrace> traces = {trace};

  SUBCASE("missing optimal value") {
    CompositeProblem anonymous = inst.problem;
    anonymous.optimal_value_hint.reset();
    CHECK_THROWS_AS(check_rate_bound(traces, anonymous, constants, config.eps), ConfigError);
  }
  SUBCASE("nonzero regularizer") {
    CompositeProblem composite = inst.problem;
    composite.regularizer = Regularizer::l1(0.1);
    CHECK_THROWS_AS(check_rate_bound(traces, composite, constants, config.eps), UsageError);
  }
  SUBCASE("mismatched horizons") {
    RunConfig other = config;
    other.rounds = 3;
    traces.push_back(run_algorithm(Algorithm::FedDR, inst.problem, ModelVector::Zero(3), other));
    CHECK_THROWS_AS(check_rate_bound(traces, inst.problem, constants, config.eps), UsageError);
  }
  SUBCASE("no traces") {
    CHECK_THROWS_AS(check_rate_bound({}, inst.problem, constants, config.eps), UsageError);
  }
}
