#include "fedcomp/analysis.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fedcomp/csv.hpp"

namespace fedcomp {

double grad_mapping_norm_sq(const CompositeProblem& problem, const ModelVector& xbar,
                            double eta) {
  if (!(eta > 0)) throw UsageError("grad_mapping_norm_sq: eta must be positive");
  if (xbar.size() != problem.dimension) {
    throw UsageError("grad_mapping_norm_sq: dimension mismatch");
  }
  const ModelVector grad = full_gradient(problem, xbar);
  if (problem.regularizer.is_zero()) return grad.squaredNorm();
  const ModelVector forward = xbar - eta * grad;
  const ModelVector mapped = (xbar - problem.regularizer.prox(forward, eta)) / eta;
  return mapped.squaredNorm();
}

double stepsize_lower_bound(double L, double gamma4) {
  if (!(L > 0)) throw UsageError("stepsize_lower_bound: L must be positive");
  if (!(gamma4 > 0)) throw UsageError("stepsize_lower_bound: gamma4 must be positive");
  const double disc = 9.0 - 16.0 * gamma4 * (1.0 + 4.0 * gamma4);
  // disc decreases from 9 to 1 on (0, 1/4); at gamma4 >= 1/4 the bound's
  // denominator sqrt(disc) - 1 stops being positive.
  if (!(disc > 1.0)) {
    throw UsageError("stepsize_lower_bound: square root nonpositive; gamma4 must lie in "
                     "(0, 1/4), got " + std::to_string(gamma4));
  }
  return 4.0 * L * (1.0 + 2.0 * gamma4) / (std::sqrt(disc) - 1.0);
}

RateConstants compute_rate_constants(double L, double eta, double gamma1, double gamma2,
                                     double gamma3, double gamma4, double p_hat) {
  if (!(eta > 0)) throw UsageError("compute_rate_constants: eta must be positive");
  if (!(gamma1 > 0) || !(gamma2 > 0) || !(gamma3 > 0)) {
    throw UsageError("compute_rate_constants: every gamma must be positive");
  }
  if (!(p_hat > 0) || p_hat > 1.0) {
    throw UsageError("compute_rate_constants: p_hat must lie in (0, 1]");
  }
  const double bound = stepsize_lower_bound(L, gamma4);  // validates L, gamma4

  RateConstants c;
  c.L = L;
  c.eta = eta;
  c.eta_hat = 1.0 / eta;
  c.gamma1 = gamma1;
  c.gamma2 = gamma2;
  c.gamma3 = gamma3;
  c.gamma4 = gamma4;
  c.p_hat = p_hat;

  const double eh = c.eta_hat;
  const double el = eh * L;
  const double one_el_sq = 1.0 + el * el;
  // bracket = 2 - (L/eta + 1) - 2 (L/eta)^2 - 4 gamma4 (1 + (L/eta)^2);
  // positive exactly when eta exceeds the admissible lower bound.
  const double bracket = 2.0 - (el + 1.0) - 2.0 * el * el - 4.0 * gamma4 * one_el_sq;
  if (!(bracket > 0)) {
    throw UsageError("compute_rate_constants: beta would be nonpositive (eta = " +
                     std::to_string(eta) + " is not above the admissible bound " +
                     std::to_string(bound) + "; bracket term = " + std::to_string(bracket) +
                     ")");
  }

  c.beta = p_hat * bracket / (2.0 * eh * (1.0 + gamma1) * one_el_sq);
  const double one_plus_el_sq = (1.0 + el) * (1.0 + el);
  c.rho2 = 2.0 * one_plus_el_sq / (gamma4 * eh) + one_el_sq / eh +
           bracket / (2.0 * eh * one_el_sq * gamma1);
  c.rho1 = c.rho2 + one_el_sq / eh;
  c.c1 = 2.0 * one_plus_el_sq * (1.0 + gamma2) / (eh * eh * c.beta);
  c.c2 = c.rho1 * c.c1;
  c.c3 = c.rho2 * c.c1 + one_plus_el_sq * (1.0 + gamma2) / (eh * eh * gamma2);
  return c;
}

long long iterations_to_target(const RateConstants& constants, double gap,
                               double eps_square_sum, double eps) {
  if (!(eps > 0)) throw UsageError("iterations_to_target: target accuracy must be positive");
  if (!(gap >= 0) || !std::isfinite(gap)) {
    throw UsageError("iterations_to_target: optimality gap must be finite and nonnegative");
  }
  if (!(eps_square_sum >= 0) || !std::isfinite(eps_square_sum)) {
    throw UsageError("iterations_to_target: accuracy budget must be finite and nonnegative");
  }
  const double value =
      (constants.c1 * gap + (constants.c2 + constants.c3) * eps_square_sum) / (eps * eps);
  if (!(value < 9.0e18)) {
    throw UsageError("iterations_to_target: iteration bound overflows a 64-bit count");
  }
  return static_cast<long long>(std::floor(value));
}

double loglog_slope(std::span<const double> values) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] > 0) || !std::isfinite(values[k])) continue;
    const double x = std::log(static_cast<double>(k + 1));
    const double y = std::log(values[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) throw UsageError("loglog_slope: need at least two positive entries");
  const double denom = m * sxx - sx * sx;
  if (denom == 0) throw UsageError("loglog_slope: degenerate abscissae");
  return (m * sxy - sx * sy) / denom;
}

RateCheckReport check_rate_bound(std::span<const RunTrace> traces,
                                 const CompositeProblem& problem,
                                 const RateConstants& constants, const EpsSchedule& eps) {
  if (traces.empty()) throw UsageError("check_rate_bound: need at least one trace");
  if (!problem.regularizer.is_zero()) {
    throw UsageError("check_rate_bound: the bound covers g == 0 runs only");
  }
  if (!problem.optimal_value_hint.has_value()) {
    throw ConfigError("check_rate_bound: the problem does not carry its optimal value");
  }
  const int k_max = traces[0].config.rounds;
  for (const RunTrace& trace : traces) {
    if (trace.config.rounds != k_max) {
      throw UsageError("check_rate_bound: traces cover different horizons");
    }
    if (static_cast<int>(trace.rounds.size()) != k_max + 1) {
      throw UsageError("check_rate_bound: trace is missing rows");
    }
  }

  const double f_star = *problem.optimal_value_hint;
  const double gap = traces[0].rounds[0].objective - f_star;

  RateCheckReport report;
  report.averaged = traces.size() >= 2;
  report.rows.reserve(static_cast<std::size_t>(k_max) + 1);

  // Running sum of the per-round gradient norms, averaged across traces, and
  // the accuracy-budget sum of the right-hand side.
  double lhs_sum = 0.0;
  double eps_sum = 0.0;
  std::vector<double> lhs_curve;
  lhs_curve.reserve(static_cast<std::size_t>(k_max) + 1);
  for (int k = 0; k <= k_max; ++k) {
    double avg_at_k = 0.0;
    for (const RunTrace& trace : traces) avg_at_k += trace.rounds[static_cast<std::size_t>(k)].grad_mapping_sq;
    avg_at_k /= static_cast<double>(traces.size());
    lhs_sum += avg_at_k;

    const double ek = eps.at(k);
    const double ek1 = eps.at(k + 1);
    eps_sum += constants.c2 * ek * ek + constants.c3 * ek1 * ek1;

    RateCheckRow row;
    row.k = k;
    row.lhs_avg = lhs_sum / static_cast<double>(k + 1);
    row.rhs = (constants.c1 * gap + eps_sum) / static_cast<double>(k + 1);
    row.ratio = row.rhs > 0 ? row.lhs_avg / row.rhs : (row.lhs_avg == 0 ? 0.0 : std::numeric_limits<double>::infinity());
    row.pass = row.lhs_avg <= row.rhs;
    if (!row.pass) ++report.violations;
    lhs_curve.push_back(row.lhs_avg);
    report.rows.push_back(row);
  }

  report.pass = report.averaged ? report.violations == 0 : true;
  try {
    report.slope = loglog_slope(lhs_curve);
  } catch (const UsageError&) {
    // Degenerate curve (e.g. started at a stationary point): no slope.
    report.slope = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

void write_rate_csv(const RateCheckReport& report, std::ostream& out) {
  out << "# fedcomp-rate-v1\n";
  out << "K,lhs_avg,rhs,ratio,pass\n";
  for (const RateCheckRow& row : report.rows) {
    out << row.k << ',' << csv::fmt(row.lhs_avg) << ',' << csv::fmt(row.rhs) << ','
        << csv::fmt(row.ratio) << ',' << (row.pass ? 1 : 0) << '\n';
  }
}

}  // namespace fedcomp
