#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "deeptrade/config.hpp"
#include "deeptrade/error.hpp"
#include "deeptrade/pipeline.hpp"

using namespace deeptrade;

namespace {

config::RunConfig resolve(const std::string& config_path, const std::vector<std::string>& overrides,
                          const std::string& out, const std::string& seed) {
  config::RunConfig cfg = config_path.empty() ? config::RunConfig{} : config::load_config(config_path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (!out.empty()) cfg.set("output.dir", out);
  if (!seed.empty()) cfg.set("seed", seed);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep reinforcement learning futures trading engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DEEPTRADE_VERSION);

  std::string config_path, out, seed;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "Configuration file (key = value lines)")->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "Override one key, e.g. --set reward.bp=0.001 (repeatable)")
      ->allow_extra_args(false);
  app.add_option("--out", out, "Output directory (overrides output.dir)");
  app.add_option("--seed", seed, "Training seed (synth: data seed)");

  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"synth", "Write the bundled synthetic universe to <out>/data"},
      {"features", "Write per-contract feature matrices to <out>/features"},
      {"train", "Train the configured agents per asset class and walk-forward block"},
      {"backtest", "Backtest all strategies and write metrics, equity curve and per-contract CSVs"},
      {"sweep", "Re-run accounting over the cost grid and write cost_sweep.csv"},
      {"report", "Render report.txt, report.csv and SVG plots from the CSVs"},
      {"all", "synth, features, train, backtest, sweep and report in order"},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    std::string effective_seed = seed;
    // --seed on synth seeds the data generator.
    std::string data_seed;
    if (command == "synth") std::swap(effective_seed, data_seed);
    auto cfg = resolve(config_path, overrides, out, effective_seed);
    if (!data_seed.empty()) cfg.set("synth.seed", data_seed);

    pipeline::write_manifest(cfg, command);
    const bool all = command == "all";
    if (command == "synth" || all) pipeline::run_synth(cfg);
    if (command == "features" || all) pipeline::run_features(cfg);
    if (command == "train" || all) pipeline::run_train(cfg);
    if (command == "backtest" || all) pipeline::run_backtest(cfg);
    if (command == "sweep" || all) pipeline::run_sweep(cfg);
    if (command == "report" || all) pipeline::run_report(cfg);
    return 0;
  } catch (const Error& e) {
    std::cerr << "deeptrade " << command << ": " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "deeptrade " << command << ": " << e.what() << '\n';
    return 1;
  }
}
