#include "fedcomp/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedcomp/csv.hpp"

namespace fedcomp {

DrPoint map_admm_to_dr(const ModelVector& x, const ModelVector& z, const ModelVector& xbar,
                       double eta) {
  if (!(eta > 0)) throw UsageError("map_admm_to_dr: eta must be positive");
  require_same_dim(x, z, "map_admm_to_dr");
  require_same_dim(x, xbar, "map_admm_to_dr");
  DrPoint p;
  p.s = x - z / eta;
  p.u = x;
  p.uhat = x + z / eta;
  p.vbar = xbar;
  return p;
}

AdmmPoint map_dr_to_admm(const ModelVector& s, const ModelVector& u, const ModelVector& vbar,
                         double eta) {
  if (!(eta > 0)) throw UsageError("map_dr_to_admm: eta must be positive");
  require_same_dim(s, u, "map_dr_to_admm");
  require_same_dim(s, vbar, "map_dr_to_admm");
  AdmmPoint p;
  p.x = u;
  p.z = eta * (u - s);
  p.xbar = vbar;
  return p;
}

namespace {

bool same_solver(const LocalSolver& a, const LocalSolver& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == LocalSolver::Kind::ExactProx) return true;
  return a.iterations == b.iterations && a.learning_rate == b.learning_rate &&
         (a.kind != LocalSolver::Kind::StochasticGD || a.batch_size == b.batch_size);
}

bool same_scheme(const SamplingScheme& a, const SamplingScheme& b) {
  if (a.kind() != b.kind() || a.n() != b.n()) return false;
  switch (a.kind()) {
    case SamplingScheme::Kind::FullParticipation: return true;
    case SamplingScheme::Kind::UniformSubset: return a.subset_size() == b.subset_size();
    case SamplingScheme::Kind::IndependentBernoulli: {
      return a.probabilities() == b.probabilities();
    }
  }
  return false;
}

RunConfig mirror_for_feddr(const RunConfig& admm) {
  RunConfig dr = admm;
  dr.eta = 1.0 / admm.eta;
  dr.alpha = 1.0;
  return dr;
}

}  // namespace

LockstepReport lockstep_verify(const CompositeProblem& problem, const ModelVector& x0,
                               const RunConfig& admm_config) {
  return lockstep_verify(problem, x0, admm_config, mirror_for_feddr(admm_config));
}

LockstepReport lockstep_verify(const CompositeProblem& problem, const ModelVector& x0,
                               const RunConfig& admm_config, const RunConfig& feddr_config) {
  problem.validate();
  admm_config.validate();
  feddr_config.validate();
  if (admm_config.n_clients() != problem.n_clients() ||
      feddr_config.n_clients() != problem.n_clients()) {
    throw UsageError("lockstep_verify: configs and problem disagree on client count");
  }
  if (x0.size() != problem.dimension) {
    throw UsageError("lockstep_verify: initial point has the wrong dimension");
  }
  if (feddr_config.alpha != 1.0) {
    throw UsageError("lockstep_verify: the mapping requires FedDR relaxation alpha = 1");
  }
  if (std::abs(feddr_config.eta * admm_config.eta - 1.0) > 1e-12) {
    throw UsageError("lockstep_verify: FedDR must run at step 1/eta of the FedADMM penalty");
  }
  if (!same_scheme(admm_config.sampling, feddr_config.sampling)) {
    throw UsageError("lockstep_verify: the two configs use different sampling schemes");
  }
  if (!same_solver(admm_config.solver, feddr_config.solver)) {
    throw UsageError("lockstep_verify: the two configs use different local solvers");
  }
  if (admm_config.eps.eps0 != feddr_config.eps.eps0) {
    throw UsageError("lockstep_verify: the two configs use different accuracy schedules");
  }
  if (admm_config.rounds != feddr_config.rounds) {
    throw UsageError("lockstep_verify: the two configs cover different horizons");
  }

  const double eta = admm_config.eta;
  const bool exact = admm_config.solver.kind == LocalSolver::Kind::ExactProx;
  const int n = problem.n_clients();

  FedADMMState admm = init_fedadmm(problem, x0);
  // FedDR starts from the mapped image of FedADMM's initial state: with
  // z = 0 the mapping collapses to y = x = xhat = x0, vbar = x0.
  const std::vector<ModelVector> uniform(static_cast<std::size_t>(n), x0);
  FedDRState dr = make_feddr_state(uniform, uniform, uniform, x0, x0);

  LockstepReport report;
  report.rounds.reserve(static_cast<std::size_t>(admm_config.rounds) + 1);

  auto compare = [&](int round, double tolerance) {
    LockstepRound row;
    row.round = round;
    row.tolerance = tolerance;
    for (int i = 0; i < n; ++i) {
      const DrPoint mapped = map_admm_to_dr(admm.x[static_cast<std::size_t>(i)],
                                            admm.z[static_cast<std::size_t>(i)], admm.xbar,
                                            eta);
      row.dev_s = std::max(row.dev_s, (mapped.s - dr.y[static_cast<std::size_t>(i)]).norm());
      row.dev_u = std::max(row.dev_u, (mapped.u - dr.x[static_cast<std::size_t>(i)]).norm());
      row.dev_uhat =
          std::max(row.dev_uhat, (mapped.uhat - dr.xhat[static_cast<std::size_t>(i)]).norm());
    }
    row.dev_vbar = (admm.xbar - dr.xbar).norm();
    const double worst = std::max({row.dev_s, row.dev_u, row.dev_uhat, row.dev_vbar});
    row.pass = worst <= tolerance;
    report.max_deviation = std::max(report.max_deviation, worst);
    report.rounds.push_back(row);
  };

  compare(0, exact ? 1e-10 : 1e-8);

  for (int k = 0; k < admm_config.rounds; ++k) {
    const std::vector<int> active_admm =
        admm_config.sampling.draw(k, admm_config.master_seed);
    const std::vector<int> active_dr = feddr_config.sampling.draw(k, feddr_config.master_seed);
    fedadmm_round(admm, problem, admm_config, k, active_admm);
    feddr_round(dr, problem, feddr_config, k, active_dr);
    const double eps_k = admm_config.eps.at(k + 1);
    compare(k + 1, exact ? 1e-10 : 2.0 * eps_k + 1e-8);
  }

  report.pass = true;
  for (const LockstepRound& row : report.rounds) report.pass = report.pass && row.pass;
  return report;
}

void write_lockstep_csv(const LockstepReport& report, std::ostream& out) {
  out << "# fedcomp-lockstep-v1\n";
  out << "round,dev_s,dev_u,dev_uhat,dev_vbar,pass\n";
  for (const LockstepRound& row : report.rounds) {
    out << row.round << ',' << csv::fmt(row.dev_s) << ',' << csv::fmt(row.dev_u) << ','
        << csv::fmt(row.dev_uhat) << ',' << csv::fmt(row.dev_vbar) << ','
        << (row.pass ? 1 : 0) << '\n';
  }
}

}  // namespace fedcomp
