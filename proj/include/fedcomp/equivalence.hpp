#ifndef FEDCOMP_EQUIVALENCE_HPP_
#define FEDCOMP_EQUIVALENCE_HPP_

#include <ostream>
#include <vector>

#include "fedcomp/algorithms.hpp"

namespace fedcomp {

// One client's iterate in DR coordinates plus the shared consensus point.
struct DrPoint {
  ModelVector s;
  ModelVector u;
  ModelVector uhat;
  ModelVector vbar;
};

// One client's iterate in ADMM coordinates plus the shared consensus point.
struct AdmmPoint {
  ModelVector x;
  ModelVector z;
  ModelVector xbar;
};

// Change of variables between the two algorithm families at penalty eta:
// s = x - z/eta, u = x, uhat = x + z/eta, vbar = xbar. The reflection
// uhat = 2u - s holds by construction, and the two directions are mutually
// inverse bijections on triples.
DrPoint map_admm_to_dr(const ModelVector& x, const ModelVector& z, const ModelVector& xbar,
                       double eta);

// Inverse direction: x = u, z = eta * (u - s), xbar = vbar.
AdmmPoint map_dr_to_admm(const ModelVector& s, const ModelVector& u, const ModelVector& vbar,
                         double eta);

struct LockstepRound {
  int round = 0;  // 0 is the post-initialization comparison
  double dev_s = 0.0;
  double dev_u = 0.0;
  double dev_uhat = 0.0;
  double dev_vbar = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct LockstepReport {
  std::vector<LockstepRound> rounds;
  double max_deviation = 0.0;
  bool pass = false;
};

// Runs FedADMM at penalty eta and FedDR at step 1/eta side by side for
// config.rounds rounds, with FedDR initialized from the image of FedADMM's
// initial state under the mapping. With equal master seeds both runs draw
// identical client subsets and identical local-solver substreams. After each
// round the FedADMM iterates are mapped into DR coordinates and compared
// against FedDR's (y, x, xhat, xbar): the report lists the max deviation
// over clients per variable. A round passes at 1e-10 with the closed-form
// local solver, and at 2*eps_k + 1e-8 for iterative solvers.
LockstepReport lockstep_verify(const CompositeProblem& problem, const ModelVector& x0,
                               const RunConfig& admm_config);

// Explicit two-config form. The FedDR config must mirror the FedADMM one
// (same scheme, horizon, solver, accuracy schedule, alpha = 1 and
// eta_dr = 1/eta_admm); UsageError otherwise. Master seeds may differ, which
// decouples the sampling realizations and serves as a negative control.
LockstepReport lockstep_verify(const CompositeProblem& problem, const ModelVector& x0,
                               const RunConfig& admm_config, const RunConfig& feddr_config);

// CSV with header comment and columns (round, dev_s, dev_u, dev_uhat,
// dev_vbar, pass).
void write_lockstep_csv(const LockstepReport& report, std::ostream& out);

}  // namespace fedcomp

#endif  // FEDCOMP_EQUIVALENCE_HPP_
