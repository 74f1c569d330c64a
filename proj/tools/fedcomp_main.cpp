// fedcomp command-line front end. Exit codes: 0 success (equivalence: pass),
// 1 equivalence harness fail, 2 invalid configuration or unusable inputs,
// 3 runtime numeric abort.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fedcomp/data.hpp"
#include "fedcomp/experiment.hpp"

namespace {

int dispatch(const CLI::App& app, const std::string& config_path,
             const std::string& out_override, const std::string& preset, double alpha,
             double beta, int clients, int input_dim, int classes, int min_samples,
             int max_samples, std::uint64_t seed, const std::string& data_out) {
  using namespace fedcomp;

  if (app.got_subcommand("run")) {
    const ExperimentResult result = run_experiment_file(config_path, out_override);
    for (const auto& path : result.metrics) {
      std::cout << "wrote " << path.string() << "\n";
    }
    std::cout << "resolved config: " << result.resolved_config.string() << "\n";
    std::cout << "final grad_mapping_norm_sq = " << result.final_grad_mapping_sq << "\n";
    return 0;
  }

  if (app.got_subcommand("equivalence")) {
    const EquivalenceOutcome outcome = run_equivalence_file(config_path, out_override);
    std::cout << "wrote " << outcome.csv.string() << "\n";
    std::cout << "lockstep " << (outcome.report.pass ? "pass" : "FAIL")
              << ": max deviation " << outcome.report.max_deviation << " over "
              << outcome.report.rounds.size() << " checkpoints\n";
    return outcome.report.pass ? 0 : 1;
  }

  if (app.got_subcommand("gen-data")) {
    SyntheticSpec spec;
    spec.alpha = alpha;
    spec.beta = beta;
    spec.n_clients = clients;
    spec.input_dim = input_dim;
    spec.n_classes = classes;
    spec.min_samples = min_samples;
    spec.max_samples = max_samples;
    spec.seed = seed;
    if (!preset.empty()) {
      ExperimentConfig defaults;
      defaults.clients = clients;
      defaults.input_dim = input_dim;
      defaults.classes = classes;
      defaults.min_samples = min_samples;
      defaults.max_samples = max_samples;
      defaults.data_seed = seed;
      const auto parsed = parse_synthetic_preset(preset, defaults);
      if (!parsed) {
        throw ConfigError("--preset must look like synthetic-<alpha>-<beta>");
      }
      spec = *parsed;
    }
    spec.validate();
    const DatasetBundle bundle = generate_synthetic(spec);
    const std::filesystem::path dir = resolve_output_dir(data_out);
    const std::uint64_t hash = write_bundle(bundle, dir.string());
    char hash_text[32];
    std::snprintf(hash_text, sizeof(hash_text), "%016llx",
                  static_cast<unsigned long long>(hash));
    std::cout << "wrote " << bundle.shards.size() << " shards to " << dir.string()
              << " (bundle hash " << hash_text << ")\n";
    return 0;
  }

  // validate-config
  const fedcomp::ExperimentConfig config = load_experiment_config(config_path);
  config.validate();
  std::cout << "ok: " << config_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated composite-optimization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::string preset;
  std::string data_out;
  double alpha = 0.0;
  double beta = 0.0;
  int clients = 30;
  int input_dim = 60;
  int classes = 10;
  int min_samples = 10;
  int max_samples = 1000;
  std::uint64_t seed = 1;

  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment from a config file");
  run_cmd->add_option("config", config_path, "config file path")->required();
  run_cmd->add_option("--out", out_override, "override [experiment] output_dir");

  CLI::App* eq_cmd =
      app.add_subcommand("equivalence", "run the FedADMM/FedDR lockstep harness");
  eq_cmd->add_option("config", config_path, "config file path")->required();
  eq_cmd->add_option("--out", out_override, "override [experiment] output_dir");

  CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset bundle");
  CLI::Option* preset_opt =
      gen_cmd->add_option("--preset", preset, "preset name synthetic-<alpha>-<beta>");
  gen_cmd->add_option("--alpha", alpha, "model dispersion")->excludes(preset_opt);
  gen_cmd->add_option("--beta", beta, "input dispersion")->excludes(preset_opt);
  gen_cmd->add_option("--clients", clients, "number of clients");
  gen_cmd->add_option("--input-dim", input_dim, "feature dimension");
  gen_cmd->add_option("--classes", classes, "number of classes");
  gen_cmd->add_option("--min-samples", min_samples, "smallest shard size");
  gen_cmd->add_option("--max-samples", max_samples, "largest shard size");
  gen_cmd->add_option("--seed", seed, "generator seed");
  gen_cmd->add_option("--out", data_out, "output directory")->required();

  CLI::App* val_cmd =
      app.add_subcommand("validate-config", "parse and validate a config file");
  val_cmd->add_option("config", config_path, "config file path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return dispatch(app, config_path, out_override, preset, alpha, beta, clients, input_dim,
                    classes, min_samples, max_samples, seed, data_out);
  } catch (const fedcomp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fedcomp::UsageError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fedcomp::CapabilityError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const fedcomp::NumericError& e) {
    std::cerr << "numeric error: " << e.what();
    if (e.round >= 0) std::cerr << " (round " << e.round << ")";
    if (e.client >= 0) std::cerr << " (client " << e.client << ")";
    std::cerr << "\n";
    return 3;
  } catch (const fedcomp::ToleranceError& e) {
    std::cerr << "numeric error: " << e.what() << " (achieved " << e.achieved << ")\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
