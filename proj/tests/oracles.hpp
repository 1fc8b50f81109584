#pragma once

// Straight-line reference implementations used as oracles. They recompute
// every quantity from its defining sum at each index, with no recursion
// shared with the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace oracle {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Weighted variance of x[0..t] with weight (1-alpha)^(t-k) on x[k].
inline double ewm_std_at(std::span<const double> x, std::size_t span, std::size_t t) {
  if (t == 0) return 0.0;
  const double decay = 1.0 - 2.0 / (static_cast<double>(span) + 1.0);
  double wsum = 0.0, mean = 0.0;
  for (std::size_t k = 0; k <= t; ++k) {
    const double w = std::pow(decay, static_cast<double>(t - k));
    wsum += w;
    mean += w * x[k];
  }
  mean /= wsum;
  double var = 0.0;
  for (std::size_t k = 0; k <= t; ++k) {
    var += std::pow(decay, static_cast<double>(t - k)) * (x[k] - mean) * (x[k] - mean);
  }
  return std::sqrt(var / wsum);
}

inline double ewm_mean_at(std::span<const double> x, double alpha, std::size_t t) {
  double wsum = 0.0, acc = 0.0;
  for (std::size_t k = 0; k <= t; ++k) {
    const double w = std::pow(1.0 - alpha, static_cast<double>(t - k));
    wsum += w;
    acc += w * x[k];
  }
  return acc / wsum;
}

// Population std of x[t-window .. t].
inline double rolling_std_at(std::span<const double> x, std::size_t window, std::size_t t) {
  double mean = 0.0;
  for (std::size_t k = t - window; k <= t; ++k) mean += x[k];
  mean /= static_cast<double>(window + 1);
  double ss = 0.0;
  for (std::size_t k = t - window; k <= t; ++k) ss += (x[k] - mean) * (x[k] - mean);
  return std::sqrt(ss / static_cast<double>(window + 1));
}

inline double zscore_at(std::span<const double> p, std::size_t window, std::size_t t) {
  double mean = 0.0;
  for (std::size_t k = t - window; k <= t; ++k) mean += p[k];
  mean /= static_cast<double>(window + 1);
  const double sd = rolling_std_at(p, window, t);
  return sd > 0.0 ? (p[t] - mean) / sd : 0.0;
}

inline double macd_q_at(std::span<const double> p, std::size_t s, std::size_t l, std::size_t t) {
  const double sd = rolling_std_at(p, 63, t);
  if (!(sd > 0.0)) return 0.0;
  return (ewm_mean_at(p, 1.0 / static_cast<double>(s), t) - ewm_mean_at(p, 1.0 / static_cast<double>(l), t)) / sd;
}

inline double macd_at(std::span<const double> p, std::size_t s, std::size_t l, std::size_t t) {
  std::vector<double> q;
  for (std::size_t k = t - 252; k <= t; ++k) q.push_back(macd_q_at(p, s, l, k));
  const double sd = rolling_std_at(q, 252, 252);
  return sd > 0.0 ? q.back() / sd : 0.0;
}

// Wilder RSI: seed averages are simple means of the first `window` changes,
// then avg <- (avg * (n - 1) + x) / n.
inline std::vector<double> rsi(std::span<const double> p, std::size_t window) {
  std::vector<double> gains, losses;
  for (std::size_t t = 1; t < p.size(); ++t) {
    gains.push_back(std::max(p[t] - p[t - 1], 0.0));
    losses.push_back(std::max(p[t - 1] - p[t], 0.0));
  }
  std::vector<double> out(p.size(), kNaN);
  const double n = static_cast<double>(window);
  double g = 0.0, l = 0.0;
  for (std::size_t k = 0; k < window; ++k) {
    g += gains[k];
    l += losses[k];
  }
  g /= n;
  l /= n;
  for (std::size_t t = window; t < p.size(); ++t) {
    if (t > window) {
      g = (g * (n - 1.0) + gains[t - 1]) / n;
      l = (l * (n - 1.0) + losses[t - 1]) / n;
    }
    if (l == 0.0) {
      out[t] = g == 0.0 ? 50.0 : 100.0;
    } else {
      out[t] = 100.0 - 100.0 / (1.0 + g / l);
    }
  }
  return out;
}

// Percentage-convention reward for each decision t in [first, last]:
// pos_t = a_t * tgt / max(vol_t, floor); prev position uses vol_{t-1}.
struct Accounting {
  std::vector<double> rewards;
  std::vector<double> costs;
};

inline Accounting eq4_percentage(std::span<const double> prices, std::span<const double> vol,
                                 std::span<const double> actions, std::size_t first, double sigma_tgt, double bp,
                                 double mu = 1.0, double floor = 1e-4) {
  Accounting out;
  const double tgt = sigma_tgt / std::sqrt(252.0);
  double prev_action = 0.0;
  for (std::size_t k = 0; k < actions.size(); ++k) {
    const std::size_t t = first + k;
    const double pos = actions[k] * tgt / std::max(vol[t], floor);
    const double prev_pos = prev_action * tgt / std::max(vol[t - 1], floor);
    const double r = prices[t + 1] / prices[t] - 1.0;
    const double cost = bp * std::abs(pos - prev_pos);
    out.rewards.push_back(mu * (pos * r - cost));
    out.costs.push_back(cost);
    prev_action = actions[k];
  }
  return out;
}

// The nine annualized statistics written out from their definitions.
struct Metrics {
  double er, sd;
  std::optional<double> dd, sharpe, sortino;
  double mdd;
  std::optional<double> calmar;
  double pct_pos;
  std::optional<double> pl;
};

inline Metrics metrics(std::span<const double> r) {
  const double n = static_cast<double>(r.size());
  double sum = 0.0;
  for (double x : r) sum += x;
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : r) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));

  std::vector<double> neg, pos;
  for (double x : r) {
    if (x < 0.0) neg.push_back(x);
    if (x > 0.0) pos.push_back(x);
  }
  std::optional<double> dd;
  if (neg.size() >= 2) {
    double m = 0.0;
    for (double x : neg) m += x;
    m /= static_cast<double>(neg.size());
    double s2 = 0.0;
    for (double x : neg) s2 += (x - m) * (x - m);
    dd = std::sqrt(s2 / static_cast<double>(neg.size() - 1)) * std::sqrt(252.0);
  }

  // Peak-to-trough scan over every ordered pair of equity points.
  std::vector<double> eq{1.0};
  for (double x : r) eq.push_back(eq.back() * (1.0 + x));
  double mdd = 0.0;
  for (std::size_t i = 0; i < eq.size(); ++i) {
    for (std::size_t j = i + 1; j < eq.size(); ++j) {
      if (eq[i] > 0.0) mdd = std::max(mdd, (eq[i] - eq[j]) / eq[i]);
    }
  }
  mdd = std::clamp(mdd, 0.0, 1.0);

  Metrics m{};
  m.er = mean * 252.0;
  m.sd = sd * std::sqrt(252.0);
  m.dd = dd;
  if (sd > 0.0) m.sharpe = m.er / m.sd;
  if (dd && *dd > 0.0) m.sortino = m.er / *dd;
  m.mdd = mdd;
  if (mdd > 0.0) m.calmar = m.er / mdd;
  m.pct_pos = static_cast<double>(pos.size()) / n;
  if (!pos.empty() && !neg.empty()) {
    double ap = 0.0, al = 0.0;
    for (double x : pos) ap += x;
    for (double x : neg) al += x;
    ap /= static_cast<double>(pos.size());
    al /= static_cast<double>(neg.size());
    m.pl = ap / std::abs(al);
  }
  return m;
}

}  // namespace oracle
