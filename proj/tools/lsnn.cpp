// Command-line front end:
//   lsnn run [config.json] [--preset NAME] [--seed N] [--out DIR]
//   lsnn study <config.json>
//   lsnn report <run-dir>
//   lsnn presets
// Exit codes: 0 success, 2 config error, 3 training divergence, 4 oracle failure.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "lsnn/experiment.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kDiverged = 3;
constexpr int kOracleFailure = 4;

lsnn::json resolve_run_config(const std::string& path, const std::string& preset) {
  lsnn::json config = lsnn::json::object();
  if (!preset.empty()) config = lsnn::load_preset(preset);
  if (!path.empty()) config.merge_patch(lsnn::load_json_file(path, "config"));
  if (path.empty() && preset.empty()) throw lsnn::ConfigError("config", "give a config file or --preset");
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block space-time least-squares ReLU network solver for scalar conservation laws"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "train all blocks and write errors, traces, checkpoints and manifest");
  run->add_option("config", config_path, "JSON config (merged over the preset)");
  run->add_option("--preset", preset, "builtin preset name");
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out", out_dir, "override the output directory");

  std::string study_path;
  auto* study = app.add_subcommand("study", "quadrature convergence study on manufactured solutions");
  study->add_option("config", study_path, "JSON study config")->required();

  std::string run_dir;
  auto* report = app.add_subcommand("report", "re-derive the error table of a run from its checkpoints");
  report->add_option("run-dir", run_dir, "run output directory")->required();

  auto* presets = app.add_subcommand("presets", "list builtin presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      lsnn::json config = resolve_run_config(config_path, preset);
      if (seed) config["seed"] = *seed;
      if (!out_dir.empty()) config["output"]["dir"] = out_dir;
      const lsnn::ExperimentConfig cfg = lsnn::parse_experiment_config(config);
      const lsnn::RunResult result = lsnn::run_experiment(cfg);
      std::cout << lsnn::errors_csv(result.errors);
      if (result.march.failed) {
        std::cerr << "training diverged: " << result.march.failure << " (block " << result.march.failed_block
                  << ", iteration " << result.march.failed_iteration << ")\n";
        return kDiverged;
      }
      return 0;
    }
    if (study->parsed()) {
      lsnn::run_divergence_study(lsnn::load_json_file(study_path, "config"));
      return 0;
    }
    if (report->parsed()) {
      lsnn::report_run(run_dir);
      return 0;
    }
    if (presets->parsed()) {
      for (const auto& name : lsnn::preset_names()) std::cout << name << '\n';
      return 0;
    }
  } catch (const lsnn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const lsnn::NonFiniteError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kDiverged;
  } catch (const lsnn::CflViolation& e) {
    std::cerr << "oracle failure: " << e.what() << " (advisory dt " << e.advisory_dt() << ")\n";
    return kOracleFailure;
  } catch (const lsnn::UnimplementedCase& e) {
    std::cerr << "oracle failure: " << e.what() << '\n';
    return kOracleFailure;
  } catch (const lsnn::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return 0;
}
