#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "deeptrade/date.hpp"
#include "deeptrade/indicators.hpp"
#include "deeptrade/market_data.hpp"

namespace deeptrade::env {

enum class ActionMode { Discrete3, Continuous };

// Percentage: r = p_t / p_{t-1} - 1 and cost = bp * |change in scaled position|.
// PriceDifference: r = p_t - p_{t-1} and cost = bp * p_{t-1} * |change|.
enum class ReturnConvention { Percentage, PriceDifference };

std::string_view to_string(ReturnConvention c);
std::optional<ReturnConvention> parse_return_convention(std::string_view text);

inline constexpr double kTradingDays = 252.0;

struct RewardConfig {
  double mu = 1.0;
  double sigma_tgt = 0.15;  // annualized
  double bp = 0.0020;
  double vol_floor = 1e-4;  // daily
  ReturnConvention convention = ReturnConvention::Percentage;

  double daily_target() const;
  // Throws Error{BadSpec} when a field is out of range.
  void validate() const;

  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

// Discrete action index 0, 1, 2 maps to position -1, 0, +1.
double discrete_position(int action_index);

// A * (sigma_tgt_daily / sigma_daily). sigma_daily must already be floored.
double scaled_position(double action, double sigma_daily, const RewardConfig& cfg);

struct RewardTerms {
  double reward = 0.0;  // mu * (gross - cost)
  double gross = 0.0;
  double cost = 0.0;
  double position = 0.0;  // new scaled position
};

// Reward earned over (t, t+1] by holding `action` chosen at the close of t,
// coming from `prev_action` held over (t-1, t]. Vols are floored here.
RewardTerms step_reward(const RewardConfig& cfg, double price_t, double price_next, double action,
                        double vol_t, double prev_action, double vol_prev);

struct StepResult {
  indicators::StateWindow next_state;
  double reward = 0.0;
  double cost = 0.0;
  double scaled_position = 0.0;
  bool done = false;
};

struct TraceRow {
  Date date;
  double action = 0.0;
  double scaled_position = 0.0;
  double reward = 0.0;
  double cost = 0.0;
};

// One contract's MDP. Borrows the series and features, which must outlive it.
class TradingEnv {
 public:
  TradingEnv(const data::PriceSeries& series, const indicators::ContractFeatures& features, RewardConfig cfg,
             ActionMode mode);

  // First and last index at which an action may be taken.
  std::size_t first_decision_index() const;
  std::size_t last_decision_index() const;

  // Throws Error{OutOfRange} if fewer than episode_len steps fit after
  // start_index or if start_index has no complete state.
  indicators::StateWindow reset(std::size_t start_index, std::size_t episode_len);

  // Discrete mode takes an action index in {0,1,2}; continuous mode clamps to
  // [-1,1]. Throws Error{EpisodeDone} after the last step.
  StepResult step(double action);

  std::size_t index() const { return t_; }
  bool done() const { return done_; }
  double prev_action() const { return a_prev_; }
  double prev_action2() const { return a_prev2_; }
  ActionMode mode() const { return mode_; }
  const RewardConfig& config() const { return cfg_; }
  const data::PriceSeries& series() const { return *series_; }
  const indicators::ContractFeatures& features() const { return *features_; }

  void set_tracing(bool on) { tracing_ = on; }
  const std::vector<TraceRow>& trace() const { return trace_; }
  void write_trace_csv(const std::filesystem::path& path) const;

 private:
  const data::PriceSeries* series_;
  const indicators::ContractFeatures* features_;
  RewardConfig cfg_;
  ActionMode mode_;
  std::size_t t_ = 0;
  std::size_t end_ = 0;
  double a_prev_ = 0.0;
  double a_prev2_ = 0.0;
  bool done_ = true;
  bool tracing_ = false;
  std::vector<TraceRow> trace_;
};

}  // namespace deeptrade::env
