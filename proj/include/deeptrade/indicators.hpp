#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "deeptrade/date.hpp"
#include "deeptrade/market_data.hpp"

namespace deeptrade::indicators {

// Undefined entries (insufficient history) are NaN.
using Series = std::vector<double>;

inline constexpr std::size_t kFeatureCount = 7;
inline constexpr std::size_t kWindowLength = 60;
inline constexpr std::size_t kVolSpan = 60;
inline constexpr std::size_t kRsiWindow = 30;
inline constexpr std::size_t kZScoreWindow = 252;
inline constexpr std::size_t kMacdPriceStdWindow = 63;
inline constexpr std::size_t kMacdSignalStdWindow = 252;
// First index at which the MACD (and so every feature) is defined.
inline constexpr std::size_t kMacdFirstIndex = kMacdPriceStdWindow + kMacdSignalStdWindow;
inline constexpr std::size_t kHorizons[] = {21, 42, 63, 252};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "norm_close", "ret_1m", "ret_2m", "ret_3m", "ret_1y", "macd", "rsi"};

// Standard deviations below this fraction of the mean magnitude are treated
// as exactly zero (floating-point residue of a constant input).
inline constexpr double kNegligibleRelativeStd = 1e-10;

// Exponentially weighted standard deviation, population form. Weights
// (1 - alpha)^k over the available history, alpha = 2 / (span + 1);
// out[0] = 0. Throws Error{BadSpan} for span < 2.
Series ewm_std(std::span<const double> x, std::size_t span);

// Exponentially weighted mean with alpha = 1 / timescale and weights
// renormalized over the available history.
Series ewm_mean(std::span<const double> x, double alpha);

// Percentage returns r[t] = p[t] / p[t-1] - 1, r[0] = NaN.
Series pct_returns(std::span<const double> prices);

// Daily ex-ante volatility: EWM std (span 60) of percentage returns. Index t
// uses returns through t; out[0] = 0.
Series daily_vol(std::span<const double> prices, std::size_t span = kVolSpan);

// (p_t / p_{t-h} - 1) / (sigma_t sqrt(h)); 0 where sigma_t is zero. NaN for
// t < h. Throws Error{InsufficientHistory} if no index is defined.
Series vol_normalized_return(std::span<const double> prices, std::size_t horizon_days,
                             std::span<const double> vol);

// Population std over the inclusive window x[t-window .. t] (window + 1
// observations). NaN for t < window.
Series rolling_std(std::span<const double> x, std::size_t window);
Series rolling_mean(std::span<const double> x, std::size_t window);

// q_t = (m_S - m_L) / std(p_{t-63..t}); MACD_t = q_t / std(q_{t-252..t}).
// Zero denominators give 0. Defined from index 315.
Series macd_raw(std::span<const double> prices, std::size_t short_scale, std::size_t long_scale);

// Wilder RSI; defined from index `window`.
Series rsi(std::span<const double> prices, std::size_t window = kRsiWindow);

// Rolling 252-day z-score of the close; defined from index 252.
Series normalized_close(std::span<const double> prices, std::size_t window = kZScoreWindow);

// Per-day feature rows, row-major (size() rows x kFeatureCount columns).
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<Date> dates, std::vector<double> values, std::size_t first_valid_index);

  std::size_t rows() const { return dates_.size(); }
  static constexpr std::size_t cols() { return kFeatureCount; }
  std::size_t first_valid_index() const { return first_valid_index_; }
  const std::vector<Date>& dates() const { return dates_; }

  double at(std::size_t row, std::size_t col) const { return values_[row * kFeatureCount + col]; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * kFeatureCount, kFeatureCount};
  }
  Series column(std::size_t col) const;
  std::span<const double> data() const { return values_; }

  void write_csv(const std::filesystem::path& path) const;

 private:
  std::vector<Date> dates_;
  std::vector<double> values_;
  std::size_t first_valid_index_ = 0;
};

// Features of one contract plus the daily vol the reward uses.
struct ContractFeatures {
  FeatureMatrix matrix;
  Series vol;  // daily EWM std of percentage returns
};

// Throws Error{InsufficientHistory} for series shorter than kMinSeriesLength.
ContractFeatures compute_features(const data::PriceSeries& series);

// Sixty consecutive feature rows ending at `index`, viewed in place.
struct StateWindow {
  std::span<const double> values;  // kWindowLength * kFeatureCount, row-major
  Date as_of;
  std::size_t index = 0;

  std::size_t rows() const { return values.size() / kFeatureCount; }
  double at(std::size_t r, std::size_t c) const { return values[r * kFeatureCount + c]; }
};

// First row index whose window lies entirely in the valid region.
inline std::size_t first_state_index(const FeatureMatrix& fm) {
  return fm.first_valid_index() + kWindowLength - 1;
}

StateWindow state_at(const FeatureMatrix& fm, std::size_t index);

// One window per index t >= first_valid_index + 59. Windows view `fm`, which
// must outlive them. Throws Error{InsufficientHistory} when none fit.
std::vector<StateWindow> build_states(const FeatureMatrix& fm);

}  // namespace deeptrade::indicators
