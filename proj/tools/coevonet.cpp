#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "coevonet/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace coevonet;
  CLI::App app{"coevonet: co-evolving network experiments (finite-n CTMC and its graphon limit)"};
  app.set_version_flag("--version", kVersion);
  std::string mode_name;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> ensemble;
  std::vector<std::string> modes;
  for (const auto& [name, m] : mode_names()) modes.push_back(name);
  app.add_option("mode", mode_name, "simulate | limit | compare | verify-generator | mixing-check | polarisation")
      ->required()
      ->check(CLI::IsMember(modes));
  app.add_option("--config", config_path, "JSON experiment configuration")->required();
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--out", out, "output directory (overrides the config)");
  app.add_option("--ensemble", ensemble, "number of independent runs (overrides the config)");
  app.footer("Worker threads are capped by the COEVONET_THREADS environment variable.\n"
             "Exit codes: 0 success, 1 configuration error, 2 runtime error.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path, parse_mode(mode_name), Overrides{seed, out, ensemble});
  } catch (const config_error& e) {
    std::cerr << "coevonet: configuration error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    const auto result = run_experiment(cfg);
    for (const auto& w : result.warnings) std::cerr << "coevonet: warning: " << w << "\n";
    std::cout << "coevonet " << to_string(cfg.mode) << ": wrote " << cfg.output_dir << " (config "
              << result.report["metadata"]["config_hash"].get<std::string>() << ")\n";
  } catch (const config_error& e) {
    std::cerr << "coevonet: configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "coevonet: runtime error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}
