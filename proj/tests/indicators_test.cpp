#include <gtest/gtest.h>

#include <cmath>

#include "deeptrade/error.hpp"
#include "deeptrade/indicators.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace deeptrade;
using namespace deeptrade::indicators;

TEST(EwmStd, TwoPointOracle) {
  const std::vector<double> x{1.0, -1.0};
  const auto s = ewm_std(x, 3);
  EXPECT_EQ(s[0], 0.0);
  EXPECT_NEAR(s[1], std::sqrt(8.0 / 9.0), 1e-15);
}

TEST(EwmStd, ConstantSeriesIsZero) {
  const std::vector<double> x(200, 3.7);
  for (double v : ewm_std(x, 60)) EXPECT_EQ(v, 0.0);
}

TEST(EwmStd, RecursionMatchesDirectSummation) {
  const auto x = testing_support::random_walk(700, 11, 0.02);
  const auto s = ewm_std(x, 60);
  for (std::size_t t : {1ul, 2ul, 59ul, 300ul, 699ul}) {
    EXPECT_NEAR(s[t], oracle::ewm_std_at(x, 60, t), 1e-12 * std::max(1.0, s[t])) << t;
  }
}

TEST(EwmStd, SignAndShiftInvariance) {
  auto x = testing_support::random_walk(300, 5);
  for (double& v : x) v = std::log(v);
  std::vector<double> neg(x.size()), shifted(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    neg[i] = -x[i];
    shifted[i] = x[i] + 2.5;
  }
  const auto a = ewm_std(x, 20), b = ewm_std(neg, 20), c = ewm_std(shifted, 20);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(a[i], b[i], 1e-12);
    EXPECT_NEAR(a[i], c[i], 1e-10);
  }
}

TEST(EwmStd, BadSpan) {
  const std::vector<double> x{1.0, 2.0};
  EXPECT_THROW(ewm_std(x, 1), Error);
}

TEST(VolNormalizedReturn, HandExample) {
  std::vector<double> p(253, 100.0);
  p[252] = 110.0;
  const std::vector<double> vol(253, 0.01);
  const auto out = vol_normalized_return(p, 252, vol);
  EXPECT_NEAR(out[252], 0.10 / (0.01 * std::sqrt(252.0)), 1e-12);
  EXPECT_NEAR(out[252], 0.6299, 5e-5);
  EXPECT_TRUE(std::isnan(out[251]));
}

TEST(VolNormalizedReturn, ZeroVolGivesZeroAndConstantPricesGiveZero) {
  std::vector<double> p(30, 50.0);
  p[29] = 60.0;
  const std::vector<double> vol(30, 0.0);
  EXPECT_EQ(vol_normalized_return(p, 21, vol)[29], 0.0);
  const std::vector<double> flat(30, 50.0), v(30, 0.01);
  for (std::size_t t = 21; t < 30; ++t) EXPECT_EQ(vol_normalized_return(flat, 21, v)[t], 0.0);
  const std::vector<double> short_p(10, 1.0), short_v(10, 0.01);
  EXPECT_THROW(vol_normalized_return(short_p, 21, short_v), Error);
}

TEST(Macd, ConstantPricesGiveZero) {
  const std::vector<double> p(400, 42.0);
  const auto m = macd_raw(p, 8, 24);
  for (std::size_t t = kMacdFirstIndex; t < p.size(); ++t) EXPECT_EQ(m[t], 0.0);
  EXPECT_TRUE(std::isnan(m[kMacdFirstIndex - 1]));
}

TEST(Macd, RampMatchesDirectOracle) {
  std::vector<double> p(420);
  for (std::size_t t = 0; t < p.size(); ++t) p[t] = 100.0 + 0.5 * static_cast<double>(t) + 3.0 * std::sin(0.05 * t);
  const auto m = macd_raw(p, 8, 24);
  for (std::size_t t : {kMacdFirstIndex, kMacdFirstIndex + 50, p.size() - 1}) {
    EXPECT_NEAR(m[t], oracle::macd_at(p, 8, 24, t), 1e-10) << t;
  }
}

TEST(Macd, ScaleInvariance) {
  const auto p = testing_support::random_walk(600, 8);
  std::vector<double> q(p);
  for (double& v : q) v *= 10.0;
  const auto a = macd_raw(p, 16, 48), b = macd_raw(q, 16, 48);
  for (std::size_t t = kMacdFirstIndex; t < p.size(); ++t) EXPECT_NEAR(a[t], b[t], 1e-9);
}

TEST(Macd, FirstIndexIs315) {
  EXPECT_EQ(kMacdFirstIndex, 315u);
  const std::vector<double> p(315, 1.0);
  EXPECT_THROW(macd_raw(p, 8, 24), Error);
}

TEST(Rsi, MonotoneSeries) {
  std::vector<double> up(60), down(60);
  for (std::size_t t = 0; t < 60; ++t) {
    up[t] = 10.0 + static_cast<double>(t);
    down[t] = 100.0 - static_cast<double>(t);
  }
  const auto a = rsi(up), b = rsi(down);
  for (std::size_t t = kRsiWindow; t < 60; ++t) {
    EXPECT_EQ(a[t], 100.0);
    EXPECT_EQ(b[t], 0.0);
  }
  const std::vector<double> flat(40, 5.0);
  EXPECT_EQ(rsi(flat)[39], 50.0);
}

TEST(Rsi, MixedSeriesMatchesWilderOracle) {
  const auto p = testing_support::random_walk(40, 21, 0.03);
  const auto a = rsi(p);
  const auto b = oracle::rsi(p, kRsiWindow);
  for (std::size_t t = kRsiWindow; t < p.size(); ++t) EXPECT_NEAR(a[t], b[t], 1e-10);
}

TEST(Rsi, BoundedOnRandomWalks) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = testing_support::random_walk(500, seed, 0.05);
    for (double v : rsi(p)) {
      if (std::isnan(v)) continue;
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 100.0);
    }
  }
}

TEST(NormalizedClose, OracleAndDegenerateCases) {
  const auto p = testing_support::random_walk(400, 3);
  const auto z = normalized_close(p);
  for (std::size_t t = kZScoreWindow; t < p.size(); t += 37) {
    EXPECT_NEAR(z[t], oracle::zscore_at(p, kZScoreWindow, t), 1e-10);
  }
  const std::vector<double> flat(300, 7.0);
  EXPECT_EQ(normalized_close(flat)[299], 0.0);
}

TEST(NormalizedClose, OneStdAboveMeanIsOne) {
  // Window of 3 points {-1, 1, x}: choose x so that x equals mean + std.
  // With values {a, b, x} and small window, solve numerically by bisection.
  const std::size_t w = 2;
  auto z_of = [&](double x) {
    const std::vector<double> p{9.0, 11.0, x};
    return normalized_close(p, w)[2];
  };
  double lo = 10.0, hi = 100.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (z_of(mid) < 1.0 ? lo : hi) = mid;
  }
  const double x = 0.5 * (lo + hi);
  const double mean = (9.0 + 11.0 + x) / 3.0;
  const double sd = std::sqrt(((9.0 - mean) * (9.0 - mean) + (11.0 - mean) * (11.0 - mean) + (x - mean) * (x - mean)) / 3.0);
  EXPECT_NEAR(x, mean + sd, 1e-9);
  EXPECT_NEAR(z_of(x), 1.0, 1e-9);
}

TEST(ScaleInvariance, FeaturesUnchangedByPriceScaling) {
  const auto p = testing_support::random_walk(700, 17);
  for (double k : {0.01, 1000.0}) {
    auto a = testing_support::make_series(p);
    auto b = a;
    for (double& v : b.closes) v *= k;
    const auto fa = compute_features(a), fb = compute_features(b);
    for (std::size_t t = fa.matrix.first_valid_index(); t < p.size(); ++t) {
      for (std::size_t c = 0; c < kFeatureCount; ++c) {
        EXPECT_NEAR(fa.matrix.at(t, c), fb.matrix.at(t, c), 1e-9) << t << "," << c;
      }
      EXPECT_NEAR(fa.vol[t], fb.vol[t], 1e-12);
    }
  }
}

TEST(Features, FiniteFromFirstValidIndex) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = testing_support::make_series(testing_support::random_walk(500, seed, 0.001 + 0.01 * seed));
    const auto f = compute_features(s);
    EXPECT_EQ(f.matrix.first_valid_index(), kMacdFirstIndex);
    for (std::size_t t = f.matrix.first_valid_index(); t < s.size(); ++t) {
      for (std::size_t c = 0; c < kFeatureCount; ++c) EXPECT_TRUE(std::isfinite(f.matrix.at(t, c)));
    }
  }
}

TEST(Features, ShortSeriesRejected) {
  const auto s = testing_support::make_series(testing_support::random_walk(data::kMinSeriesLength - 1, 1));
  EXPECT_THROW(compute_features(s), Error);
}

TEST(DailyVol, UsesReturnsThroughT) {
  const auto p = testing_support::random_walk(200, 4);
  const auto v = daily_vol(p);
  std::vector<double> r;
  for (std::size_t t = 1; t < p.size(); ++t) r.push_back(p[t] / p[t - 1] - 1.0);
  EXPECT_EQ(v[0], 0.0);
  for (std::size_t t : {2ul, 50ul, 199ul}) EXPECT_NEAR(v[t], oracle::ewm_std_at(r, kVolSpan, t - 1), 1e-12);
}

TEST(States, CountAndOverlap) {
  const std::size_t n = kMacdFirstIndex + kWindowLength;
  const auto s = testing_support::make_series(testing_support::random_walk(n, 2));
  const auto f = compute_features(s);
  const auto states = build_states(f.matrix);
  ASSERT_EQ(states.size(), 1u);
  EXPECT_EQ(states[0].index, n - 1);

  const auto longer = testing_support::make_series(testing_support::random_walk(n + 40, 2));
  const auto fl = compute_features(longer);
  const auto st = build_states(fl.matrix);
  ASSERT_EQ(st.size(), 41u);
  for (std::size_t r = 1; r < kWindowLength; ++r) {
    for (std::size_t c = 0; c < kFeatureCount; ++c) EXPECT_EQ(st[5].at(r, c), st[6].at(r - 1, c));
  }
  for (const auto& w : st) {
    EXPECT_EQ(w.rows(), kWindowLength);
    for (double v : w.values) EXPECT_TRUE(std::isfinite(v));
  }
  const auto direct = state_at(fl.matrix, st[3].index);
  EXPECT_EQ(direct.values.data(), st[3].values.data());
  EXPECT_THROW(state_at(fl.matrix, first_state_index(fl.matrix) - 1), Error);
}

TEST(Lookahead, TruncationPreservesEarlierFeatures) {
  const auto s = testing_support::make_series(testing_support::random_walk(800, 13));
  const auto full = compute_features(s);
  for (std::size_t cut : {400ul, 555ul, 799ul}) {
    const auto part = compute_features(s.truncated_before(s.dates[cut]));
    for (std::size_t t = part.matrix.first_valid_index(); t < cut; ++t) {
      for (std::size_t c = 0; c < kFeatureCount; ++c) EXPECT_EQ(part.matrix.at(t, c), full.matrix.at(t, c));
      EXPECT_EQ(part.vol[t], full.vol[t]);
    }
  }
}
