#include "deeptrade/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "deeptrade/csv.hpp"
#include "deeptrade/error.hpp"

namespace deeptrade::indicators {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double snap_std(double variance, double mean) {
  const double sd = variance > 0.0 ? std::sqrt(variance) : 0.0;
  return sd <= kNegligibleRelativeStd * std::abs(mean) ? 0.0 : sd;
}

// MACD scale pairs averaged into the single `macd` feature column.
constexpr std::pair<std::size_t, std::size_t> kFeatureMacdScales[] = {{8, 24}, {16, 48}, {32, 96}};

}  // namespace

Series ewm_std(std::span<const double> x, std::size_t span) {
  if (span < 2) throw Error(ErrorCode::BadSpan, "span must be >= 2, got " + std::to_string(span));
  const double decay = 1.0 - 2.0 / (static_cast<double>(span) + 1.0);
  Series out(x.size(), 0.0);
  double weight = 0.0, mean = 0.0, scatter = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    // Weighted Welford update: old weights decay, the new point has weight 1.
    weight = decay * weight + 1.0;
    const double delta = x[t] - mean;
    mean += delta / weight;
    scatter = decay * scatter + delta * (x[t] - mean);
    out[t] = t == 0 ? 0.0 : snap_std(scatter / weight, mean);
  }
  return out;
}

Series ewm_mean(std::span<const double> x, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::BadSpan, "ewm alpha must be in (0, 1]");
  const double decay = 1.0 - alpha;
  Series out(x.size());
  double weight = 0.0, mean = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    weight = decay * weight + 1.0;
    mean += (x[t] - mean) / weight;
    out[t] = mean;
  }
  return out;
}

Series pct_returns(std::span<const double> prices) {
  Series r(prices.size(), kNaN);
  for (std::size_t t = 1; t < prices.size(); ++t) r[t] = prices[t] / prices[t - 1] - 1.0;
  return r;
}

Series daily_vol(std::span<const double> prices, std::size_t span) {
  Series out(prices.size(), 0.0);
  if (prices.size() < 2) return out;
  const Series r = pct_returns(prices);
  const Series sd = ewm_std(std::span<const double>(r).subspan(1), span);
  for (std::size_t t = 1; t < prices.size(); ++t) out[t] = sd[t - 1];
  return out;
}

Series vol_normalized_return(std::span<const double> prices, std::size_t horizon_days,
                             std::span<const double> vol) {
  if (horizon_days == 0) throw Error(ErrorCode::BadSpec, "horizon must be positive");
  if (vol.size() != prices.size()) throw Error(ErrorCode::ShapeMismatch, "vol and prices differ in length");
  if (prices.size() <= horizon_days) {
    throw Error(ErrorCode::InsufficientHistory,
                std::to_string(prices.size()) + " prices for a " + std::to_string(horizon_days) + "-day horizon");
  }
  Series out(prices.size(), kNaN);
  const double root_h = std::sqrt(static_cast<double>(horizon_days));
  for (std::size_t t = horizon_days; t < prices.size(); ++t) {
    const double ret = prices[t] / prices[t - horizon_days] - 1.0;
    out[t] = vol[t] > 0.0 ? ret / (vol[t] * root_h) : 0.0;
  }
  return out;
}

Series rolling_mean(std::span<const double> x, std::size_t window) {
  Series out(x.size(), kNaN);
  for (std::size_t t = window; t < x.size(); ++t) {
    double sum = 0.0;
    for (std::size_t k = t - window; k <= t; ++k) sum += x[k];
    out[t] = sum / static_cast<double>(window + 1);
  }
  return out;
}

Series rolling_std(std::span<const double> x, std::size_t window) {
  Series out(x.size(), kNaN);
  const Series mean = rolling_mean(x, window);
  for (std::size_t t = window; t < x.size(); ++t) {
    double ss = 0.0;
    for (std::size_t k = t - window; k <= t; ++k) ss += (x[k] - mean[t]) * (x[k] - mean[t]);
    out[t] = snap_std(ss / static_cast<double>(window + 1), mean[t]);
  }
  return out;
}

Series macd_raw(std::span<const double> prices, std::size_t short_scale, std::size_t long_scale) {
  if (short_scale == 0 || short_scale >= long_scale) {
    throw Error(ErrorCode::BadSpec, "MACD needs 0 < S < L");
  }
  const std::size_t first = kMacdPriceStdWindow + kMacdSignalStdWindow;
  if (prices.size() <= first) {
    throw Error(ErrorCode::InsufficientHistory,
                "MACD needs more than " + std::to_string(first) + " prices, got " + std::to_string(prices.size()));
  }
  const Series fast = ewm_mean(prices, 1.0 / static_cast<double>(short_scale));
  const Series slow = ewm_mean(prices, 1.0 / static_cast<double>(long_scale));
  const Series price_sd = rolling_std(prices, kMacdPriceStdWindow);

  Series q(prices.size(), kNaN);
  for (std::size_t t = kMacdPriceStdWindow; t < prices.size(); ++t) {
    q[t] = price_sd[t] > 0.0 ? (fast[t] - slow[t]) / price_sd[t] : 0.0;
  }
  const std::span<const double> q_defined = std::span<const double>(q).subspan(kMacdPriceStdWindow);
  const Series q_sd = rolling_std(q_defined, kMacdSignalStdWindow);

  Series out(prices.size(), kNaN);
  for (std::size_t t = first; t < prices.size(); ++t) {
    const double sd = q_sd[t - kMacdPriceStdWindow];
    out[t] = sd > 0.0 ? q[t] / sd : 0.0;
  }
  return out;
}

Series rsi(std::span<const double> prices, std::size_t window) {
  if (window == 0) throw Error(ErrorCode::BadSpec, "RSI window must be positive");
  if (prices.size() <= window) {
    throw Error(ErrorCode::InsufficientHistory,
                "RSI needs more than " + std::to_string(window) + " prices, got " + std::to_string(prices.size()));
  }
  const double n = static_cast<double>(window);
  Series out(prices.size(), kNaN);
  double avg_gain = 0.0, avg_loss = 0.0;
  for (std::size_t t = 1; t < prices.size(); ++t) {
    const double change = prices[t] - prices[t - 1];
    const double gain = change > 0.0 ? change : 0.0;
    const double loss = change < 0.0 ? -change : 0.0;
    if (t <= window) {
      avg_gain += gain / n;
      avg_loss += loss / n;
      if (t < window) continue;
    } else {
      avg_gain = (avg_gain * (n - 1.0) + gain) / n;
      avg_loss = (avg_loss * (n - 1.0) + loss) / n;
    }
    if (avg_loss == 0.0) {
      out[t] = avg_gain == 0.0 ? 50.0 : 100.0;
    } else {
      out[t] = 100.0 - 100.0 / (1.0 + avg_gain / avg_loss);
    }
  }
  return out;
}

Series normalized_close(std::span<const double> prices, std::size_t window) {
  if (prices.size() <= window) {
    throw Error(ErrorCode::InsufficientHistory,
                "z-score needs more than " + std::to_string(window) + " prices, got " + std::to_string(prices.size()));
  }
  const Series mean = rolling_mean(prices, window);
  const Series sd = rolling_std(prices, window);
  Series out(prices.size(), kNaN);
  for (std::size_t t = window; t < prices.size(); ++t) {
    out[t] = sd[t] > 0.0 ? (prices[t] - mean[t]) / sd[t] : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

FeatureMatrix::FeatureMatrix(std::vector<Date> dates, std::vector<double> values, std::size_t first_valid_index)
    : dates_(std::move(dates)), values_(std::move(values)), first_valid_index_(first_valid_index) {
  if (values_.size() != dates_.size() * kFeatureCount) {
    throw Error(ErrorCode::ShapeMismatch, "feature values do not match dates x features");
  }
}

Series FeatureMatrix::column(std::size_t col) const {
  Series out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, col);
  return out;
}

void FeatureMatrix::write_csv(const std::filesystem::path& path) const {
  std::string out = "date";
  for (auto name : kFeatureNames) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (std::size_t r = first_valid_index_; r < rows(); ++r) {
    out += format_date(dates_[r]);
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      out += ',';
      out += csv::format_double(at(r, c));
    }
    out += '\n';
  }
  csv::write_text(path, out);
}

ContractFeatures compute_features(const data::PriceSeries& series) {
  const std::size_t n = series.size();
  if (n < data::kMinSeriesLength) {
    throw Error(ErrorCode::InsufficientHistory, series.ticker + ": " + std::to_string(n) + " closes, need " +
                                                    std::to_string(data::kMinSeriesLength));
  }
  const std::span<const double> p = series.closes;

  ContractFeatures out;
  out.vol = daily_vol(p);

  std::array<Series, kFeatureCount> cols;
  cols[0] = normalized_close(p);
  for (std::size_t h = 0; h < 4; ++h) cols[1 + h] = vol_normalized_return(p, kHorizons[h], out.vol);
  cols[5] = Series(n, 0.0);
  for (auto [s, l] : kFeatureMacdScales) {
    const Series m = macd_raw(p, s, l);
    for (std::size_t t = 0; t < n; ++t) cols[5][t] += m[t] / std::size(kFeatureMacdScales);
  }
  cols[6] = rsi(p);

  const std::size_t first_valid = kMacdPriceStdWindow + kMacdSignalStdWindow;
  std::vector<double> values(n * kFeatureCount);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      const double v = cols[c][t];
      if (t >= first_valid && !std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteInput, series.ticker + ": non-finite " + std::string(kFeatureNames[c]) +
                                                   " at " + format_date(series.dates[t]));
      }
      values[t * kFeatureCount + c] = v;
    }
  }
  out.matrix = FeatureMatrix(series.dates, std::move(values), first_valid);
  return out;
}

StateWindow state_at(const FeatureMatrix& fm, std::size_t index) {
  if (index < first_state_index(fm) || index >= fm.rows()) {
    throw Error(ErrorCode::OutOfRange, "no full state window at index " + std::to_string(index));
  }
  const std::size_t start = index + 1 - kWindowLength;
  return {fm.data().subspan(start * kFeatureCount, kWindowLength * kFeatureCount), fm.dates()[index], index};
}

std::vector<StateWindow> build_states(const FeatureMatrix& fm) {
  const std::size_t first = first_state_index(fm);
  if (fm.rows() <= first) {
    throw Error(ErrorCode::InsufficientHistory, "need " + std::to_string(first + 1) + " feature rows, have " +
                                                    std::to_string(fm.rows()));
  }
  std::vector<StateWindow> out;
  out.reserve(fm.rows() - first);
  for (std::size_t t = first; t < fm.rows(); ++t) out.push_back(state_at(fm, t));
  return out;
}

}  // namespace deeptrade::indicators
