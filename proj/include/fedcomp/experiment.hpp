#ifndef FEDCOMP_EXPERIMENT_HPP_
#define FEDCOMP_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedcomp/data.hpp"
#include "fedcomp/equivalence.hpp"
#include "fedcomp/runner.hpp"

namespace fedcomp {

enum class TraceVerbosity { Summary, Full };
enum class TimingMode { None, Wall };

// A complete experiment description, loadable from a flat key=value file with
// [experiment] / [problem] / [run] / [equivalence] sections and full-line #
// comments. Every field has a default, so a config file only states what it
// changes; the resolved snapshot written next to each run states everything.
struct ExperimentConfig {
  // [experiment]
  Algorithm algorithm = Algorithm::FedADMM;
  int replications = 1;
  TraceVerbosity trace = TraceVerbosity::Summary;
  // Wall timing makes the cum_wall_ms column nondeterministic; the
  // byte-identical rerun guarantee holds for timing = none (the default).
  TimingMode timing = TimingMode::None;
  std::string output_dir = "out";
  std::uint64_t seed = 0;  // replication r runs at master seed `seed + r`
  FedDRInit feddr_init = FedDRInit::Prox;

  // [problem]
  std::string kind = "quadratic";  // quadratic | logistic | mlp
  // Data problems only: either a generator preset "synthetic-<alpha>-<beta>"
  // or a directory holding a previously written shard bundle.
  std::string dataset;
  double ridge = 0.0;           // logistic / mlp
  int hidden = 32;              // mlp
  std::uint64_t data_seed = 1;  // generated instances (quadratic or preset)
  int clients = 30;             // quadratic client count / preset n_clients
  int input_dim = 60;           // preset datasets only
  int classes = 10;
  int min_samples = 10;
  int max_samples = 1000;
  int dim = 10;  // quadratic only
  double eig_min = 0.5;
  double eig_max = 2.0;
  std::string regularizer = "none";  // none | l1 | box | ball
  double lambda = 0.1;               // l1
  double lo = -1.0;                  // box
  double hi = 1.0;
  double radius = 1.0;  // ball
  double x0 = 0.0;      // constant fill of the initial point

  // [run]
  double eta = 1.0;
  double alpha = 1.0;
  int rounds = 100;
  std::string sampling = "subset";  // full | subset | bernoulli
  int active = 10;                  // subset size S
  double prob = 0.5;                // shared bernoulli inclusion probability
  std::string solver = "exact";     // exact | gd | sgd
  int iterations = 300;             // gd / sgd
  double lr = 0.01;
  int batch = 2;  // sgd
  double eps0 = 0.0;

  // [equivalence]: optional FedDR-side master seed; a value different from
  // `seed` decouples the sampling realizations (negative control).
  std::optional<std::uint64_t> feddr_seed;

  // Semantic validation beyond parsing (ranges, cross-field consistency).
  // Parse-time checks anchor to config lines; this backstop covers configs
  // built programmatically.
  void validate() const;

  // Materializes the [run] section for a problem with n_clients clients.
  RunConfig make_run_config(int n_clients) const;
};

// Parses a config stream. Unknown sections or keys, duplicates, malformed
// values, and keys inapplicable to the selected kind/regularizer/sampling/
// solver/algorithm raise ConfigError anchored to the offending line.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::string& path);

// Every applicable key written out explicitly; parsing the result reproduces
// the config exactly (the rerun-determinism contract rests on this).
std::string render_resolved_config(const ExperimentConfig& config);

// "synthetic-<alpha>-<beta>" -> generator spec completed from the config's
// data fields; nullopt when the name is not a preset (a bundle directory).
std::optional<SyntheticSpec> parse_synthetic_preset(const std::string& dataset,
                                                    const ExperimentConfig& config);

// Relative directories are placed under $FEDCOMP_OUTPUT_ROOT when it is set.
std::filesystem::path resolve_output_dir(const std::string& dir);

struct BuiltProblem {
  CompositeProblem problem;
  ModelVector x0;
  // Data problems keep their shards so runs can report pooled accuracy.
  std::optional<DatasetBundle> bundle;
};

BuiltProblem build_problem(const ExperimentConfig& config);

// Versioned CSV emitters. Metrics: one row per round, K+1 rows total.
void write_metrics_csv(const RunTrace& trace, std::ostream& out);
// Full consensus trace: xbar and xtilde coordinates per round.
void write_trace_csv(const RunTrace& trace, std::ostream& out);

struct ExperimentResult {
  std::filesystem::path directory;
  std::filesystem::path resolved_config;
  std::vector<std::filesystem::path> metrics;  // one per replication
  double final_grad_mapping_sq = 0.0;          // last replication, last round
};

// Runs config.replications independent runs, writing metrics.csv (and
// trace.csv under trace = full) per replication plus resolved.ini at the
// experiment root. Existing files are overwritten.
ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment_file(const std::string& path,
                                     const std::string& output_override = "");

struct EquivalenceOutcome {
  LockstepReport report;
  std::filesystem::path csv;
};

// Drives the lockstep harness from the config's [run] section (the FedADMM
// side; the FedDR mirror is derived). Requires algorithm = fedadmm and
// trace = full. Writes lockstep.csv and resolved.ini to the output directory.
EquivalenceOutcome run_equivalence(const ExperimentConfig& config);
EquivalenceOutcome run_equivalence_file(const std::string& path,
                                        const std::string& output_override = "");

}  // namespace fedcomp

#endif  // FEDCOMP_EXPERIMENT_HPP_
