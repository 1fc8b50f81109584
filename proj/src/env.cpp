#include "deeptrade/env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "deeptrade/csv.hpp"
#include "deeptrade/error.hpp"

namespace deeptrade::env {

std::string_view to_string(ReturnConvention c) {
  return c == ReturnConvention::Percentage ? "percentage" : "price_difference";
}

std::optional<ReturnConvention> parse_return_convention(std::string_view text) {
  if (text == "percentage") return ReturnConvention::Percentage;
  if (text == "price_difference") return ReturnConvention::PriceDifference;
  return std::nullopt;
}

double RewardConfig::daily_target() const { return sigma_tgt / std::sqrt(kTradingDays); }

void RewardConfig::validate() const {
  if (!(mu > 0.0)) throw Error(ErrorCode::BadSpec, "reward.mu must be positive");
  if (!(sigma_tgt > 0.0)) throw Error(ErrorCode::BadSpec, "reward.sigma_tgt must be positive");
  if (!(bp >= 0.0)) throw Error(ErrorCode::BadSpec, "reward.bp must be non-negative");
  if (!(vol_floor > 0.0)) throw Error(ErrorCode::BadSpec, "reward.vol_floor must be positive");
}

double discrete_position(int action_index) {
  if (action_index < 0 || action_index > 2) throw Error(ErrorCode::OutOfRange, "discrete action must be 0, 1 or 2");
  return static_cast<double>(action_index - 1);
}

double scaled_position(double action, double sigma_daily, const RewardConfig& cfg) {
  return action * (cfg.daily_target() / sigma_daily);
}

RewardTerms step_reward(const RewardConfig& cfg, double price_t, double price_next, double action,
                        double vol_t, double prev_action, double vol_prev) {
  RewardTerms out;
  out.position = scaled_position(action, std::max(vol_t, cfg.vol_floor), cfg);
  const double prev_position = scaled_position(prev_action, std::max(vol_prev, cfg.vol_floor), cfg);
  const double turnover = std::abs(out.position - prev_position);
  if (cfg.convention == ReturnConvention::Percentage) {
    out.gross = out.position * (price_next / price_t - 1.0);
    out.cost = cfg.bp * turnover;
  } else {
    out.gross = out.position * (price_next - price_t);
    out.cost = cfg.bp * price_t * turnover;
  }
  out.reward = cfg.mu * (out.gross - out.cost);
  return out;
}

TradingEnv::TradingEnv(const data::PriceSeries& series, const indicators::ContractFeatures& features,
                       RewardConfig cfg, ActionMode mode)
    : series_(&series), features_(&features), cfg_(cfg), mode_(mode) {
  cfg_.validate();
  if (features.matrix.rows() != series.size() || features.vol.size() != series.size()) {
    throw Error(ErrorCode::ShapeMismatch, "features do not match the price series");
  }
}

std::size_t TradingEnv::first_decision_index() const { return indicators::first_state_index(features_->matrix); }

std::size_t TradingEnv::last_decision_index() const { return series_->size() - 2; }

indicators::StateWindow TradingEnv::reset(std::size_t start_index, std::size_t episode_len) {
  if (episode_len == 0 || start_index < first_decision_index() || series_->size() < 2 ||
      start_index + episode_len - 1 > last_decision_index()) {
    throw Error(ErrorCode::OutOfRange, "episode [" + std::to_string(start_index) + ", +" +
                                           std::to_string(episode_len) + ") does not fit " + series_->ticker);
  }
  t_ = start_index;
  end_ = start_index + episode_len;
  a_prev_ = 0.0;
  a_prev2_ = 0.0;
  done_ = false;
  trace_.clear();
  return indicators::state_at(features_->matrix, t_);
}

StepResult TradingEnv::step(double action) {
  if (done_) throw Error(ErrorCode::EpisodeDone, "step called on a finished episode");
  double a = 0.0;
  if (mode_ == ActionMode::Discrete3) {
    const int idx = static_cast<int>(action);
    if (static_cast<double>(idx) != action) throw Error(ErrorCode::OutOfRange, "discrete action must be an index");
    a = discrete_position(idx);
  } else {
    if (!std::isfinite(action)) throw Error(ErrorCode::NonFiniteInput, "continuous action is not finite");
    a = std::clamp(action, -1.0, 1.0);
  }

  const auto& p = series_->closes;
  const auto& vol = features_->vol;
  const RewardTerms terms = step_reward(cfg_, p[t_], p[t_ + 1], a, vol[t_], a_prev_, vol[t_ - 1]);
  if (tracing_) trace_.push_back({series_->dates[t_], a, terms.position, terms.reward, terms.cost});

  a_prev2_ = a_prev_;
  a_prev_ = a;
  ++t_;
  done_ = t_ == end_;

  StepResult out;
  out.next_state = indicators::state_at(features_->matrix, t_);
  out.reward = terms.reward;
  out.cost = terms.cost;
  out.scaled_position = terms.position;
  out.done = done_;
  return out;
}

void TradingEnv::write_trace_csv(const std::filesystem::path& path) const {
  std::ostringstream os;
  os << "date,action,scaled_position,reward,cost\n";
  for (const auto& r : trace_) {
    os << format_date(r.date) << ',' << csv::format_double(r.action) << ',' << csv::format_double(r.scaled_position) << ','
       << csv::format_double(r.reward) << ',' << csv::format_double(r.cost) << '\n';
  }
  csv::write_text(path, os.str());
}

}  // namespace deeptrade::env
