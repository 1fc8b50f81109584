#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "deeptrade/agents.hpp"
#include "deeptrade/baselines.hpp"
#include "deeptrade/env.hpp"
#include "deeptrade/evaluation.hpp"

namespace deeptrade::config {

// Output root used when output.dir is not set: $DEEPTRADE_OUTPUT_ROOT, else
// "deeptrade_out".
std::string default_output_dir();

inline const std::vector<std::string> kAllStrategies = {"Long", "Sign(R)", "MACD", "DQN", "PG", "A2C"};

// Everything a run depends on. Text form is one `key = value` per line with
// flat dotted keys; `#` starts a comment.
struct RunConfig {
  std::string output_dir = default_output_dir();
  std::string data_source = "synthetic";  // synthetic | csv
  std::string data_dir;                   // csv: directory of <ticker>.csv files
  std::string data_catalog;               // csv: optional catalog file
  std::uint64_t synth_seed = 7;
  std::string synth_start = "2005-01-03";
  std::string synth_end = "2019-12-31";
  int retrain_years = 5;
  int first_test_year = 2011;
  std::vector<std::string> strategies = kAllStrategies;
  baselines::MacdCombine macd_combine = baselines::MacdCombine::Average;
  env::RewardConfig reward;
  double portfolio_sigma_tgt = 0.15;
  eval::Alignment alignment = eval::Alignment::Intersection;
  std::vector<double> sweep_rates{eval::kDefaultSweepBp.begin(), eval::kDefaultSweepBp.end()};
  std::uint64_t seed = 1;
  agents::AgentConfig dqn = agents::AgentConfig::defaults(agents::Algo::DQN);
  agents::AgentConfig pg = agents::AgentConfig::defaults(agents::Algo::PG);
  agents::AgentConfig a2c = agents::AgentConfig::defaults(agents::Algo::A2C);

  // Throws Error{ConfigError} for an unknown key or a malformed value.
  void set(std::string_view key, std::string_view value);
  // Throws Error{ConfigError} when the combination is inconsistent.
  void validate() const;

  const agents::AgentConfig& agent(agents::Algo algo) const;
  bool wants(std::string_view strategy) const;

  // Every key except output.dir, in a fixed order.
  std::string serialize() const;
  // FNV-1a over serialize().
  std::uint64_t hash() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace deeptrade::config
