#ifndef FEDCOMP_ANALYSIS_HPP_
#define FEDCOMP_ANALYSIS_HPP_

#include <ostream>
#include <span>
#include <vector>

#include "fedcomp/problem.hpp"
#include "fedcomp/run_config.hpp"
#include "fedcomp/runner.hpp"

namespace fedcomp {

// Stationarity residual at xbar: ||grad f(xbar)||^2 when g == 0, otherwise
// the squared norm of the forward-backward gradient mapping
// (1/eta) (xbar - prox_{eta g}(xbar - eta grad f(xbar))).
double grad_mapping_norm_sq(const CompositeProblem& problem, const ModelVector& xbar,
                            double eta);

// Smallest admissible proximal penalty, exclusive:
// 4 L (1 + 2 gamma4) / (sqrt(9 - 16 gamma4 (1 + 4 gamma4)) - 1). Requires
// gamma4 in (0, 1/4); outside that range the square root term is nonpositive.
double stepsize_lower_bound(double L, double gamma4);

// Constants of the iteration-complexity bound. gamma3 is accepted for
// interface fidelity but enters no formula. All derived values are finite
// and positive whenever eta exceeds stepsize_lower_bound(L, gamma4).
struct RateConstants {
  double L = 0.0;
  double eta = 0.0;
  double eta_hat = 0.0;  // 1 / eta
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double gamma3 = 0.0;  // vestigial
  double gamma4 = 0.0;
  double p_hat = 0.0;  // minimal client selection probability
  double beta = 0.0;
  double rho1 = 0.0;
  double rho2 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;  // rho1 * c1
  double c3 = 0.0;  // rho2 * c1 + (1 + eta_hat L)^2 (1 + gamma2) / (eta_hat^2 gamma2)
};

RateConstants compute_rate_constants(double L, double eta, double gamma1, double gamma2,
                                     double gamma3, double gamma4, double p_hat);

// Rounds needed to certify an eps-stationary point:
// floor((c1 * gap + (c2 + c3) * eps_square_sum) / eps^2), with gap the
// initial optimality gap F(x0) - F*. Scales as eps^-2.
long long iterations_to_target(const RateConstants& constants, double gap,
                               double eps_square_sum, double eps);

struct RateCheckRow {
  int k = 0;
  double lhs_avg = 0.0;  // running average of ||grad f(xbar)||^2 up to round k
  double rhs = 0.0;
  double ratio = 0.0;
  bool pass = false;
};

struct RateCheckReport {
  std::vector<RateCheckRow> rows;
  int violations = 0;
  bool averaged = false;  // at least two traces entered the average
  // A single realization may exceed the in-expectation bound at small k, so
  // violations only fail the report when it covers a seed average.
  bool pass = false;
  double slope = 0.0;  // log-log slope of lhs_avg over k (O(1/k) decay ~ -1)
};

// Checks the averaged running gradient norm against the bound
//   c1 * gap / (k+1) + (1/(k+1)) sum_{j<=k} (c2 eps_j^2 + c3 eps_{j+1}^2)
// for every k. All traces must be g == 0 runs over the same horizon and the
// problem must carry its optimal value (ConfigError otherwise).
RateCheckReport check_rate_bound(std::span<const RunTrace> traces,
                                 const CompositeProblem& problem,
                                 const RateConstants& constants, const EpsSchedule& eps);

// CSV with header comment and columns (K, lhs_avg, rhs, ratio, pass).
void write_rate_csv(const RateCheckReport& report, std::ostream& out);

// Least-squares slope of log(values[k]) against log(k+1), ignoring
// nonpositive entries. UsageError when fewer than two usable points remain.
double loglog_slope(std::span<const double> values);

}  // namespace fedcomp

#endif  // FEDCOMP_ANALYSIS_HPP_
