#include "fedcomp/experiment.hpp"

#include <cerrno>
#include <climits>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "fedcomp/csv.hpp"
#include "fedcomp/problems.hpp"

namespace fedcomp {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
  return v;
}

std::optional<long long> to_ll(const std::string& s) {
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_u64(const std::string& s) {
  if (s.empty() || s[0] == '-') return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
  return static_cast<std::uint64_t>(v);
}

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

// Parsed key=value sections with consumption tracking: every key must be
// taken by the typed readers below or flagged at the end.
class Fields {
 public:
  void insert(const std::string& section, const std::string& key, const std::string& value,
              int line) {
    auto& slot = sections_[section];
    const auto it = slot.find(key);
    if (it != slot.end()) {
      throw ConfigError("duplicate key '" + key + "' in [" + section + "] (first at line " +
                            std::to_string(it->second.line) + ")",
                        line);
    }
    slot[key] = Entry{value, line, false};
  }

  void add_section(const std::string& section) { sections_[section]; }

  bool has(const std::string& section, const std::string& key) const {
    const auto sec = sections_.find(section);
    return sec != sections_.end() && sec->second.count(key) > 0;
  }

  int line_of(const std::string& section, const std::string& key) const {
    const auto sec = sections_.find(section);
    if (sec == sections_.end()) return 0;
    const auto it = sec->second.find(key);
    return it == sec->second.end() ? 0 : it->second.line;
  }

  std::optional<std::string> take(const std::string& section, const std::string& key) {
    const auto sec = sections_.find(section);
    if (sec == sections_.end()) return std::nullopt;
    const auto it = sec->second.find(key);
    if (it == sec->second.end()) return std::nullopt;
    it->second.used = true;
    return it->second.value;
  }

  std::string take_string(const std::string& section, const std::string& key,
                          const std::string& fallback) {
    const auto v = take(section, key);
    return v ? *v : fallback;
  }

  double take_double(const std::string& section, const std::string& key, double fallback) {
    const auto v = take(section, key);
    if (!v) return fallback;
    const auto parsed = to_double(*v);
    if (!parsed) bad_value(section, key, *v, "a number");
    return *parsed;
  }

  int take_int(const std::string& section, const std::string& key, int fallback) {
    const auto v = take(section, key);
    if (!v) return fallback;
    const auto parsed = to_ll(*v);
    if (!parsed || *parsed < INT_MIN || *parsed > INT_MAX) {
      bad_value(section, key, *v, "an integer");
    }
    return static_cast<int>(*parsed);
  }

  std::uint64_t take_u64(const std::string& section, const std::string& key,
                         std::uint64_t fallback) {
    const auto v = take(section, key);
    if (!v) return fallback;
    const auto parsed = to_u64(*v);
    if (!parsed) bad_value(section, key, *v, "a nonnegative integer");
    return *parsed;
  }

  // Range/consistency check anchored to the key's line when it was given.
  void require(bool ok, const std::string& section, const std::string& key,
               const std::string& what) const {
    if (!ok) {
      throw ConfigError("[" + section + "] " + key + " " + what, line_of(section, key));
    }
  }

  // Known key that does not apply under the current discriminators.
  void require_absent(const std::string& section, const std::string& key,
                      const std::string& reason) const {
    if (has(section, key)) {
      throw ConfigError("'" + key + "' " + reason, line_of(section, key));
    }
  }

  void finish() const {
    for (const auto& [section, entries] : sections_) {
      for (const auto& [key, entry] : entries) {
        if (!entry.used) {
          throw ConfigError("unknown key '" + key + "' in [" + section + "]", entry.line);
        }
      }
    }
  }

 private:
  [[noreturn]] void bad_value(const std::string& section, const std::string& key,
                              const std::string& value, const char* expected) const {
    throw ConfigError("[" + section + "] " + key + ": expected " + expected + ", got '" +
                          value + "'",
                      line_of(section, key));
  }

  std::map<std::string, std::map<std::string, Entry>> sections_;
};

Fields parse_raw(std::istream& in) {
  static const char* kKnown[] = {"experiment", "problem", "run", "equivalence"};
  Fields fields;
  std::string line;
  std::string current;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    if (text.front() == '[') {
      if (text.back() != ']' || text.size() < 3) {
        throw ConfigError("malformed section header '" + text + "'", lineno);
      }
      current = trim(text.substr(1, text.size() - 2));
      bool known = false;
      for (const char* name : kKnown) known = known || current == name;
      if (!known) {
        throw ConfigError("unknown section [" + current + "]", lineno);
      }
      fields.add_section(current);
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value', got '" + text + "'", lineno);
    }
    if (current.empty()) {
      throw ConfigError("key outside any [section]", lineno);
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", lineno);
    if (value.empty()) throw ConfigError("empty value for key '" + key + "'", lineno);
    fields.insert(current, key, value, lineno);
  }
  return fields;
}

bool is_synthetic_name(const std::string& dataset) {
  return dataset.rfind("synthetic-", 0) == 0;
}

Regularizer make_regularizer(const ExperimentConfig& config) {
  if (config.regularizer == "none") return Regularizer::zero();
  if (config.regularizer == "l1") return Regularizer::l1(config.lambda);
  if (config.regularizer == "box") return Regularizer::indicator_box(config.lo, config.hi);
  if (config.regularizer == "ball") return Regularizer::indicator_ball(config.radius);
  throw ConfigError("unknown regularizer '" + config.regularizer + "'");
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  out << content;
  out.close();
  if (!out.good()) {
    throw ConfigError("failed while writing " + path.string());
  }
}

std::string slurp_csv(const RunTrace& trace,
                      void (*writer)(const RunTrace&, std::ostream&)) {
  std::ostringstream out;
  writer(trace, out);
  return out.str();
}

// The step the local prox actually runs at: FedADMM/FedPD solve at 1/eta.
double local_prox_step(Algorithm algorithm, double eta) {
  const bool admm_family = algorithm == Algorithm::FedADMM || algorithm == Algorithm::FedPD;
  return admm_family ? 1.0 / eta : eta;
}

void warn_stepsize(const ExperimentConfig& config, const CompositeProblem& problem) {
  bool nonconvex = false;
  for (const auto& client : problem.clients) nonconvex = nonconvex || !client->is_convex();
  if (!nonconvex || problem.lipschitz_L <= 0) return;
  const double step = local_prox_step(config.algorithm, config.eta);
  if (step >= 1.0 / problem.lipschitz_L) {
    std::cerr << "warning: local prox step " << step << " is not below 1/L = "
              << 1.0 / problem.lipschitz_L
              << "; nonconvex local subproblems may be ill-posed\n";
  }
}

std::string rep_dir_name(int r) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "rep%03d", r);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

ExperimentConfig parse_experiment_config(std::istream& in) {
  Fields f = parse_raw(in);
  ExperimentConfig c;

  // [experiment]
  const std::string alg =
      f.take_string("experiment", "algorithm", std::string(algorithm_name(c.algorithm)));
  try {
    c.algorithm = algorithm_from_name(alg);
  } catch (const UsageError& e) {
    throw ConfigError(e.what(), f.line_of("experiment", "algorithm"));
  }
  c.replications = f.take_int("experiment", "replications", c.replications);
  f.require(c.replications >= 1 && c.replications <= 1000, "experiment", "replications",
            "must be in [1, 1000]");
  const std::string trace = f.take_string("experiment", "trace", "summary");
  f.require(trace == "summary" || trace == "full", "experiment", "trace",
            "must be summary or full");
  c.trace = trace == "full" ? TraceVerbosity::Full : TraceVerbosity::Summary;
  const std::string timing = f.take_string("experiment", "timing", "none");
  f.require(timing == "none" || timing == "wall", "experiment", "timing",
            "must be none or wall");
  c.timing = timing == "wall" ? TimingMode::Wall : TimingMode::None;
  c.output_dir = f.take_string("experiment", "output_dir", c.output_dir);
  c.seed = f.take_u64("experiment", "seed", c.seed);
  if (c.algorithm == Algorithm::FedDR) {
    const std::string init = f.take_string("experiment", "feddr_init", "prox");
    f.require(init == "prox" || init == "aligned", "experiment", "feddr_init",
              "must be prox or aligned");
    c.feddr_init = init == "aligned" ? FedDRInit::Aligned : FedDRInit::Prox;
  } else {
    f.require_absent("experiment", "feddr_init", "applies to algorithm = feddr only");
  }

  // [problem]
  c.kind = f.take_string("problem", "kind", c.kind);
  f.require(c.kind == "quadratic" || c.kind == "logistic" || c.kind == "mlp", "problem",
            "kind", "must be quadratic, logistic, or mlp");
  c.x0 = f.take_double("problem", "x0", c.x0);
  f.require(std::isfinite(c.x0), "problem", "x0", "must be finite");

  c.regularizer = f.take_string("problem", "regularizer", c.regularizer);
  f.require(c.regularizer == "none" || c.regularizer == "l1" || c.regularizer == "box" ||
                c.regularizer == "ball",
            "problem", "regularizer", "must be none, l1, box, or ball");
  if (c.regularizer == "l1") {
    c.lambda = f.take_double("problem", "lambda", c.lambda);
    f.require(c.lambda > 0 && std::isfinite(c.lambda), "problem", "lambda",
              "must be positive");
  } else {
    f.require_absent("problem", "lambda", "applies to regularizer = l1 only");
  }
  if (c.regularizer == "box") {
    c.lo = f.take_double("problem", "lo", c.lo);
    c.hi = f.take_double("problem", "hi", c.hi);
    f.require(std::isfinite(c.lo) && std::isfinite(c.hi) && c.lo < c.hi, "problem", "hi",
              "box bounds must satisfy lo < hi");
  } else {
    f.require_absent("problem", "lo", "applies to regularizer = box only");
    f.require_absent("problem", "hi", "applies to regularizer = box only");
  }
  if (c.regularizer == "ball") {
    c.radius = f.take_double("problem", "radius", c.radius);
    f.require(c.radius > 0 && std::isfinite(c.radius), "problem", "radius",
              "must be positive");
  } else {
    f.require_absent("problem", "radius", "applies to regularizer = ball only");
  }

  if (c.kind == "quadratic") {
    c.dim = f.take_int("problem", "dim", c.dim);
    f.require(c.dim >= 1, "problem", "dim", "must be >= 1");
    c.eig_min = f.take_double("problem", "eig_min", c.eig_min);
    c.eig_max = f.take_double("problem", "eig_max", c.eig_max);
    f.require(c.eig_min > 0 && c.eig_max >= c.eig_min, "problem", "eig_max",
              "eigenvalue range must satisfy 0 < eig_min <= eig_max");
    c.clients = f.take_int("problem", "clients", c.clients);
    f.require(c.clients >= 1, "problem", "clients", "must be >= 1");
    c.data_seed = f.take_u64("problem", "data_seed", c.data_seed);
    f.require_absent("problem", "dataset", "applies to data problems (logistic, mlp)");
    f.require_absent("problem", "ridge", "applies to data problems (logistic, mlp)");
    f.require_absent("problem", "hidden", "applies to kind = mlp only");
    for (const char* key : {"input_dim", "classes", "min_samples", "max_samples"}) {
      f.require_absent("problem", key, "applies to synthetic preset datasets only");
    }
  } else {
    c.dataset = f.take_string("problem", "dataset", "");
    if (c.dataset.empty()) {
      throw ConfigError("kind = " + c.kind + " requires a dataset (preset or directory)",
                        f.line_of("problem", "kind"));
    }
    c.ridge = f.take_double("problem", "ridge", c.ridge);
    f.require(c.ridge >= 0 && std::isfinite(c.ridge), "problem", "ridge", "must be >= 0");
    if (c.kind == "mlp") {
      c.hidden = f.take_int("problem", "hidden", c.hidden);
      f.require(c.hidden >= 1, "problem", "hidden", "must be >= 1");
    } else {
      f.require_absent("problem", "hidden", "applies to kind = mlp only");
    }
    f.require_absent("problem", "dim", "applies to kind = quadratic only");
    f.require_absent("problem", "eig_min", "applies to kind = quadratic only");
    f.require_absent("problem", "eig_max", "applies to kind = quadratic only");
    if (is_synthetic_name(c.dataset)) {
      c.clients = f.take_int("problem", "clients", c.clients);
      f.require(c.clients >= 1, "problem", "clients", "must be >= 1");
      c.input_dim = f.take_int("problem", "input_dim", c.input_dim);
      f.require(c.input_dim >= 1, "problem", "input_dim", "must be >= 1");
      c.classes = f.take_int("problem", "classes", c.classes);
      f.require(c.classes >= 2, "problem", "classes", "must be >= 2");
      c.min_samples = f.take_int("problem", "min_samples", c.min_samples);
      c.max_samples = f.take_int("problem", "max_samples", c.max_samples);
      f.require(c.min_samples >= 1 && c.max_samples >= c.min_samples, "problem",
                "max_samples", "sample bounds must satisfy 1 <= min_samples <= max_samples");
      c.data_seed = f.take_u64("problem", "data_seed", c.data_seed);
      try {
        parse_synthetic_preset(c.dataset, c);
      } catch (const ConfigError& e) {
        throw ConfigError(e.what(), f.line_of("problem", "dataset"));
      }
    } else {
      for (const char* key :
           {"clients", "input_dim", "classes", "min_samples", "max_samples", "data_seed"}) {
        f.require_absent("problem", key,
                         "applies to generated instances only (dataset is a directory)");
      }
    }
  }

  // [run]
  c.eta = f.take_double("run", "eta", c.eta);
  f.require(c.eta > 0 && std::isfinite(c.eta), "run", "eta", "must be positive");
  c.alpha = f.take_double("run", "alpha", c.alpha);
  f.require(c.alpha > 0 && std::isfinite(c.alpha), "run", "alpha", "must be positive");
  c.rounds = f.take_int("run", "rounds", c.rounds);
  f.require(c.rounds >= 1, "run", "rounds", "must be >= 1");
  c.sampling = f.take_string("run", "sampling", c.sampling);
  f.require(c.sampling == "full" || c.sampling == "subset" || c.sampling == "bernoulli",
            "run", "sampling", "must be full, subset, or bernoulli");
  if (c.sampling == "subset") {
    c.active = f.take_int("run", "active", c.active);
    f.require(c.active >= 1, "run", "active", "must be >= 1");
    f.require_absent("run", "prob", "applies to sampling = bernoulli only");
  } else if (c.sampling == "bernoulli") {
    c.prob = f.take_double("run", "prob", c.prob);
    f.require(c.prob > 0 && c.prob <= 1, "run", "prob", "must lie in (0, 1]");
    f.require_absent("run", "active", "applies to sampling = subset only");
  } else {
    f.require_absent("run", "active", "applies to sampling = subset only");
    f.require_absent("run", "prob", "applies to sampling = bernoulli only");
  }
  c.solver = f.take_string("run", "solver", c.solver);
  f.require(c.solver == "exact" || c.solver == "gd" || c.solver == "sgd", "run", "solver",
            "must be exact, gd, or sgd");
  if (c.solver == "exact") {
    f.require_absent("run", "iterations", "applies to iterative solvers only");
    f.require_absent("run", "lr", "applies to iterative solvers only");
    f.require_absent("run", "batch", "applies to solver = sgd only");
  } else {
    c.iterations = f.take_int("run", "iterations", c.iterations);
    f.require(c.iterations >= 1, "run", "iterations", "must be >= 1");
    c.lr = f.take_double("run", "lr", c.lr);
    if (c.solver == "gd") {
      f.require(c.lr >= 0 && std::isfinite(c.lr), "run", "lr",
                "must be >= 0 (0 selects the safe default step)");
      f.require_absent("run", "batch", "applies to solver = sgd only");
    } else {
      f.require(c.lr > 0 && std::isfinite(c.lr), "run", "lr", "must be positive for sgd");
      c.batch = f.take_int("run", "batch", c.batch);
      f.require(c.batch >= 1, "run", "batch", "must be >= 1");
    }
  }
  c.eps0 = f.take_double("run", "eps0", c.eps0);
  f.require(c.eps0 >= 0 && std::isfinite(c.eps0), "run", "eps0", "must be finite and >= 0");

  // [equivalence]
  if (f.has("equivalence", "feddr_seed")) {
    c.feddr_seed = f.take_u64("equivalence", "feddr_seed", 0);
  }

  f.finish();
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read config file " + path);
  }
  try {
    return parse_experiment_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (replications < 1 || replications > 1000) fail("replications must be in [1, 1000]");
  if (kind != "quadratic" && kind != "logistic" && kind != "mlp") {
    fail("unknown problem kind '" + kind + "'");
  }
  const bool data_kind = kind != "quadratic";
  if (data_kind && dataset.empty()) {
    fail("kind = " + kind + " requires a dataset (preset or directory)");
  }
  if (!(ridge >= 0) || !std::isfinite(ridge)) fail("ridge must be >= 0");
  if (hidden < 1) fail("hidden must be >= 1");
  if (clients < 1) fail("clients must be >= 1");
  if (input_dim < 1) fail("input_dim must be >= 1");
  if (classes < 2) fail("classes must be >= 2");
  if (min_samples < 1 || max_samples < min_samples) {
    fail("sample bounds must satisfy 1 <= min_samples <= max_samples");
  }
  if (dim < 1) fail("dim must be >= 1");
  if (!(eig_min > 0) || !(eig_max >= eig_min)) {
    fail("eigenvalue range must satisfy 0 < eig_min <= eig_max");
  }
  if (regularizer == "l1") {
    if (!(lambda > 0) || !std::isfinite(lambda)) fail("lambda must be positive");
  } else if (regularizer == "box") {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      fail("box bounds must satisfy lo < hi");
    }
  } else if (regularizer == "ball") {
    if (!(radius > 0) || !std::isfinite(radius)) fail("radius must be positive");
  } else if (regularizer != "none") {
    fail("unknown regularizer '" + regularizer + "'");
  }
  if (!std::isfinite(x0)) fail("x0 must be finite");

  if (!(eta > 0) || !std::isfinite(eta)) fail("eta must be positive");
  if (!(alpha > 0) || !std::isfinite(alpha)) fail("alpha must be positive");
  if (rounds < 1) fail("rounds must be >= 1");
  const bool known_count = kind == "quadratic" || is_synthetic_name(dataset);
  if (sampling == "subset") {
    if (active < 1) fail("active must be >= 1");
    if (known_count && active > clients) {
      fail("active exceeds the client count (" + std::to_string(active) + " > " +
           std::to_string(clients) + ")");
    }
  } else if (sampling == "bernoulli") {
    if (!(prob > 0) || prob > 1) fail("prob must lie in (0, 1]");
  } else if (sampling != "full") {
    fail("unknown sampling '" + sampling + "'");
  }
  const bool splitting = algorithm == Algorithm::ParallelDRS ||
                         algorithm == Algorithm::ReorderedDRS ||
                         algorithm == Algorithm::CovDRS;
  if (splitting && sampling != "full") {
    fail("the splitting variants require sampling = full");
  }
  if (solver == "gd") {
    if (iterations < 1) fail("iterations must be >= 1");
    if (!(lr >= 0) || !std::isfinite(lr)) fail("lr must be >= 0");
  } else if (solver == "sgd") {
    if (iterations < 1) fail("iterations must be >= 1");
    if (!(lr > 0) || !std::isfinite(lr)) fail("lr must be positive for sgd");
    if (batch < 1) fail("batch must be >= 1");
  } else if (solver != "exact") {
    fail("unknown solver '" + solver + "'");
  }
  if (!(eps0 >= 0) || !std::isfinite(eps0)) fail("eps0 must be finite and >= 0");
  if (feddr_init == FedDRInit::Aligned && algorithm != Algorithm::FedDR) {
    fail("feddr_init = aligned applies to algorithm = feddr only");
  }
}

RunConfig ExperimentConfig::make_run_config(int n_clients) const {
  RunConfig rc;
  rc.eta = eta;
  rc.alpha = alpha;
  rc.rounds = rounds;
  rc.eps.eps0 = eps0;
  rc.master_seed = seed;
  if (sampling == "full") {
    rc.sampling = SamplingScheme::full_participation(n_clients);
  } else if (sampling == "subset") {
    rc.sampling = SamplingScheme::uniform_subset(active, n_clients);
  } else {
    rc.sampling = SamplingScheme::independent_bernoulli(
        std::vector<double>(static_cast<std::size_t>(n_clients), prob));
  }
  if (solver == "exact") {
    rc.solver = LocalSolver::exact();
  } else if (solver == "gd") {
    rc.solver = LocalSolver::gradient_descent(iterations, lr);
  } else {
    rc.solver = LocalSolver::stochastic_gd(iterations, lr, batch);
  }
  rc.validate();
  return rc;
}

std::string render_resolved_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "# fedcomp experiment config (resolved)\n";
  out << "[experiment]\n";
  out << "algorithm = " << algorithm_name(c.algorithm) << "\n";
  out << "replications = " << c.replications << "\n";
  out << "trace = " << (c.trace == TraceVerbosity::Full ? "full" : "summary") << "\n";
  out << "timing = " << (c.timing == TimingMode::Wall ? "wall" : "none") << "\n";
  out << "output_dir = " << c.output_dir << "\n";
  out << "seed = " << c.seed << "\n";
  if (c.algorithm == Algorithm::FedDR) {
    out << "feddr_init = " << (c.feddr_init == FedDRInit::Aligned ? "aligned" : "prox")
        << "\n";
  }

  out << "\n[problem]\n";
  out << "kind = " << c.kind << "\n";
  if (c.kind == "quadratic") {
    out << "dim = " << c.dim << "\n";
    out << "eig_min = " << csv::fmt(c.eig_min) << "\n";
    out << "eig_max = " << csv::fmt(c.eig_max) << "\n";
    out << "clients = " << c.clients << "\n";
    out << "data_seed = " << c.data_seed << "\n";
  } else {
    out << "dataset = " << c.dataset << "\n";
    out << "ridge = " << csv::fmt(c.ridge) << "\n";
    if (c.kind == "mlp") out << "hidden = " << c.hidden << "\n";
    if (is_synthetic_name(c.dataset)) {
      out << "clients = " << c.clients << "\n";
      out << "input_dim = " << c.input_dim << "\n";
      out << "classes = " << c.classes << "\n";
      out << "min_samples = " << c.min_samples << "\n";
      out << "max_samples = " << c.max_samples << "\n";
      out << "data_seed = " << c.data_seed << "\n";
    }
  }
  out << "regularizer = " << c.regularizer << "\n";
  if (c.regularizer == "l1") out << "lambda = " << csv::fmt(c.lambda) << "\n";
  if (c.regularizer == "box") {
    out << "lo = " << csv::fmt(c.lo) << "\n";
    out << "hi = " << csv::fmt(c.hi) << "\n";
  }
  if (c.regularizer == "ball") out << "radius = " << csv::fmt(c.radius) << "\n";
  out << "x0 = " << csv::fmt(c.x0) << "\n";

  out << "\n[run]\n";
  out << "eta = " << csv::fmt(c.eta) << "\n";
  out << "alpha = " << csv::fmt(c.alpha) << "\n";
  out << "rounds = " << c.rounds << "\n";
  out << "sampling = " << c.sampling << "\n";
  if (c.sampling == "subset") out << "active = " << c.active << "\n";
  if (c.sampling == "bernoulli") out << "prob = " << csv::fmt(c.prob) << "\n";
  out << "solver = " << c.solver << "\n";
  if (c.solver != "exact") {
    out << "iterations = " << c.iterations << "\n";
    out << "lr = " << csv::fmt(c.lr) << "\n";
    if (c.solver == "sgd") out << "batch = " << c.batch << "\n";
  }
  out << "eps0 = " << csv::fmt(c.eps0) << "\n";

  if (c.feddr_seed) {
    out << "\n[equivalence]\n";
    out << "feddr_seed = " << *c.feddr_seed << "\n";
  }
  return out.str();
}

std::optional<SyntheticSpec> parse_synthetic_preset(const std::string& dataset,
                                                    const ExperimentConfig& config) {
  if (!is_synthetic_name(dataset)) return std::nullopt;
  const std::string rest = dataset.substr(std::string("synthetic-").size());
  const auto dash = rest.find('-');
  const auto malformed = [&dataset]() -> ConfigError {
    return ConfigError("malformed preset '" + dataset +
                       "' (expected synthetic-<alpha>-<beta> with nonnegative values)");
  };
  if (dash == std::string::npos) throw malformed();
  const auto alpha = to_double(rest.substr(0, dash));
  const auto beta = to_double(rest.substr(dash + 1));
  if (!alpha || !beta || !(*alpha >= 0) || !(*beta >= 0) || !std::isfinite(*alpha) ||
      !std::isfinite(*beta)) {
    throw malformed();
  }
  SyntheticSpec spec;
  spec.alpha = *alpha;
  spec.beta = *beta;
  spec.n_clients = config.clients;
  spec.input_dim = config.input_dim;
  spec.n_classes = config.classes;
  spec.min_samples = config.min_samples;
  spec.max_samples = config.max_samples;
  spec.seed = config.data_seed;
  return spec;
}

std::filesystem::path resolve_output_dir(const std::string& dir) {
  std::filesystem::path path(dir);
  if (path.is_absolute()) return path;
  if (const char* root = std::getenv("FEDCOMP_OUTPUT_ROOT"); root != nullptr && *root != 0) {
    return std::filesystem::path(root) / path;
  }
  return path;
}

BuiltProblem build_problem(const ExperimentConfig& config) {
  config.validate();
  BuiltProblem built;
  const Regularizer reg = make_regularizer(config);
  if (config.kind == "quadratic") {
    QuadraticInstance inst = make_quadratic_instance(config.clients, config.dim,
                                                     config.data_seed, config.eig_min,
                                                     config.eig_max);
    built.problem = std::move(inst.problem);
    if (!reg.is_zero()) {
      built.problem.regularizer = reg;
      built.problem.optimal_value_hint.reset();  // hint holds for g = 0 only
    }
  } else {
    DatasetBundle bundle;
    if (const auto spec = parse_synthetic_preset(config.dataset, config)) {
      spec->validate();
      bundle = generate_synthetic(*spec);
    } else {
      bundle = read_bundle(config.dataset);
    }
    built.problem = config.kind == "logistic"
                        ? make_logistic_instance(bundle, config.ridge, reg)
                        : make_mlp_instance(bundle, config.hidden, config.ridge, reg);
    built.bundle = std::move(bundle);
  }
  built.x0 = ModelVector::Constant(built.problem.dimension, config.x0);
  return built;
}

// ---------------------------------------------------------------------------
// CSV emitters
// ---------------------------------------------------------------------------

void write_metrics_csv(const RunTrace& trace, std::ostream& out) {
  out << "# fedcomp-metrics-v1\n";
  out << "round,sampled_count,train_loss,train_accuracy,grad_mapping_norm_sq,cum_wall_ms\n";
  for (const RoundRecord& row : trace.rounds) {
    out << row.round << ',' << row.sampled_count << ',' << csv::fmt(row.objective) << ','
        << csv::fmt(row.accuracy) << ',' << csv::fmt(row.grad_mapping_sq) << ','
        << csv::fmt(row.cum_wall_ms) << '\n';
  }
}

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  out << "# fedcomp-trace-v1\n";
  out << "round";
  const Eigen::Index d = trace.rounds.empty() ? 0 : trace.rounds.front().xbar.size();
  for (Eigen::Index j = 0; j < d; ++j) out << ",xbar_" << j;
  for (Eigen::Index j = 0; j < d; ++j) out << ",xtilde_" << j;
  out << '\n';
  for (const RoundRecord& row : trace.rounds) {
    out << row.round;
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << csv::fmt(row.xbar(j));
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << csv::fmt(row.xtilde(j));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::filesystem::path dir = resolve_output_dir(config.output_dir);
  std::filesystem::create_directories(dir);

  BuiltProblem built = build_problem(config);
  const RunConfig base = config.make_run_config(built.problem.n_clients());
  warn_stepsize(config, built.problem);

  RunOptions options;
  options.record_wall_time = config.timing == TimingMode::Wall;
  options.feddr_init = config.feddr_init;
  if (built.bundle) {
    const auto shards =
        std::make_shared<const std::vector<ClientShard>>(built.bundle->shards);
    if (config.kind == "logistic") {
      options.accuracy = [shards](const ModelVector& x) {
        return logistic_accuracy(*shards, x);
      };
    } else {
      const int hidden = config.hidden;
      options.accuracy = [shards, hidden](const ModelVector& x) {
        return mlp_accuracy(*shards, hidden, x);
      };
    }
  }

  ExperimentResult result;
  result.directory = dir;
  result.resolved_config = dir / "resolved.ini";
  write_file(result.resolved_config, render_resolved_config(config));

  for (int r = 0; r < config.replications; ++r) {
    RunConfig rc = base;
    rc.master_seed = config.seed + static_cast<std::uint64_t>(r);
    const RunTrace trace = run_algorithm(config.algorithm, built.problem, built.x0, rc,
                                         options);
    std::filesystem::path rep_dir = dir;
    if (config.replications > 1) {
      rep_dir = dir / rep_dir_name(r);
      std::filesystem::create_directories(rep_dir);
    }
    const std::filesystem::path metrics_path = rep_dir / "metrics.csv";
    write_file(metrics_path, slurp_csv(trace, &write_metrics_csv));
    if (config.trace == TraceVerbosity::Full) {
      write_file(rep_dir / "trace.csv", slurp_csv(trace, &write_trace_csv));
    }
    result.metrics.push_back(metrics_path);
    result.final_grad_mapping_sq = trace.rounds.back().grad_mapping_sq;
  }
  return result;
}

ExperimentResult run_experiment_file(const std::string& path,
                                     const std::string& output_override) {
  ExperimentConfig config = load_experiment_config(path);
  if (!output_override.empty()) config.output_dir = output_override;
  return run_experiment(config);
}

EquivalenceOutcome run_equivalence(const ExperimentConfig& config) {
  config.validate();
  if (config.algorithm != Algorithm::FedADMM) {
    throw ConfigError(
        "equivalence drives the FedADMM side of the pair; set algorithm = fedadmm");
  }
  if (config.trace != TraceVerbosity::Full) {
    throw ConfigError("equivalence requires trace = full (it compares full iterates)");
  }
  const std::filesystem::path dir = resolve_output_dir(config.output_dir);
  std::filesystem::create_directories(dir);

  BuiltProblem built = build_problem(config);
  const RunConfig admm = config.make_run_config(built.problem.n_clients());
  write_file(dir / "resolved.ini", render_resolved_config(config));

  EquivalenceOutcome outcome;
  if (config.feddr_seed) {
    RunConfig feddr = admm;
    feddr.eta = 1.0 / admm.eta;
    feddr.alpha = 1.0;
    feddr.master_seed = *config.feddr_seed;
    outcome.report = lockstep_verify(built.problem, built.x0, admm, feddr);
  } else {
    outcome.report = lockstep_verify(built.problem, built.x0, admm);
  }
  outcome.csv = dir / "lockstep.csv";
  std::ostringstream csv;
  write_lockstep_csv(outcome.report, csv);
  write_file(outcome.csv, csv.str());
  return outcome;
}

EquivalenceOutcome run_equivalence_file(const std::string& path,
                                        const std::string& output_override) {
  ExperimentConfig config = load_experiment_config(path);
  if (!output_override.empty()) config.output_dir = output_override;
  return run_equivalence(config);
}

}  // namespace fedcomp
