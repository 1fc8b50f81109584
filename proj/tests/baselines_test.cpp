#include <gtest/gtest.h>

#include <cmath>

#include "deeptrade/baselines.hpp"
#include "deeptrade/error.hpp"
#include "deeptrade/indicators.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace deeptrade;
using namespace deeptrade::baselines;

TEST(Phi, PeakOddAndBounded) {
  EXPECT_EQ(phi(0.0), 0.0);
  double best = -1.0, at = 0.0;
  for (double x = 0.0; x <= 5.0; x += 1e-5) {
    const double v = phi(x);
    if (v > best) {
      best = v;
      at = x;
    }
  }
  EXPECT_NEAR(best, 0.96378, 1e-4);
  EXPECT_NEAR(at, std::sqrt(2.0), 1e-3);
  EXPECT_NEAR(best, std::sqrt(2.0) * std::exp(-0.5) / kPhiScale, 1e-9);
  for (double x = -50.0; x <= 50.0; x += 0.01) {
    EXPECT_EQ(phi(-x), -phi(x));
    EXPECT_LE(std::abs(phi(x)), 0.96379);
  }
}

TEST(SignMomentum, ValuesAndTies) {
  std::vector<double> p(300, 10.0);
  EXPECT_EQ(sign_momentum(p, 260), 0.0);
  p[290] = 11.0;
  EXPECT_EQ(sign_momentum(p, 290), 1.0);
  p[291] = 9.0;
  EXPECT_EQ(sign_momentum(p, 291), -1.0);
  EXPECT_THROW(sign_momentum(p, 251), Error);
}

TEST(SignMomentum, SineWaveMatchesScan) {
  std::vector<double> p(1500);
  for (std::size_t t = 0; t < p.size(); ++t) p[t] = 100.0 + 10.0 * std::sin(2.0 * M_PI * static_cast<double>(t) / 504.0 + 0.1);
  BaselineSpec spec;
  spec.kind = BaselineKind::SignR;
  const auto pos = positions(p, 252, p.size() - 1, spec);
  int flips = 0;
  for (std::size_t t = 252; t < p.size(); ++t) {
    const double d = p[t] - p[t - 252];
    const double expected = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    EXPECT_EQ(pos[t - 252], expected);
    if (t > 252 && pos[t - 252] != pos[t - 253]) ++flips;
  }
  // Two flips per 504-day period over roughly 2.5 periods.
  EXPECT_GE(flips, 4);
  EXPECT_LE(flips, 6);
}

TEST(LongOnly, ConstantAndEqualsSignOnRisingSeries) {
  std::vector<double> p(400);
  for (std::size_t t = 0; t < p.size(); ++t) p[t] = 50.0 * std::exp(0.001 * static_cast<double>(t));
  BaselineSpec lo, sr;
  sr.kind = BaselineKind::SignR;
  EXPECT_EQ(positions(p, 300, 399, lo), positions(p, 300, 399, sr));
  for (double v : positions(p, 300, 399, lo)) EXPECT_EQ(v, 1.0);
}

TEST(MacdSignal, ConstantPricesGiveFlat) {
  const std::vector<double> p(400, 20.0);
  BaselineSpec spec;
  spec.kind = BaselineKind::MacdSignal;
  EXPECT_EQ(macd_signal(p, 399, spec), 0.0);
  EXPECT_THROW(macd_signal(p, indicators::kMacdFirstIndex - 1, spec), Error);
}

TEST(MacdSignal, CombinesScalePairs) {
  const auto p = testing_support::random_walk(420, 31);
  BaselineSpec avg;
  avg.kind = BaselineKind::MacdSignal;
  BaselineSpec sum = avg;
  sum.combine = MacdCombine::Sum;
  for (std::size_t t : {330ul, 419ul}) {
    double total = 0.0;
    for (auto [s, l] : avg.macd_scales) total += oracle::macd_at(p, s, l, t);
    EXPECT_NEAR(macd_signal(p, t, avg), phi(total / 3.0), 1e-9);
    EXPECT_NEAR(macd_signal(p, t, sum), phi(total), 1e-9);
  }
}

TEST(Positions, OnePassEqualsPointwise) {
  const auto p = testing_support::random_walk(600, 12);
  for (auto kind : {BaselineKind::Long, BaselineKind::SignR, BaselineKind::MacdSignal}) {
    BaselineSpec spec;
    spec.kind = kind;
    const auto batch = positions(p, 400, 599, spec);
    for (std::size_t t = 400; t < 600; t += 13) {
      double single = 1.0;
      if (kind == BaselineKind::SignR) single = sign_momentum(p, t);
      if (kind == BaselineKind::MacdSignal) single = macd_signal(p, t, spec);
      EXPECT_EQ(batch[t - 400], single) << to_string(kind) << " " << t;
    }
  }
}

TEST(Positions, NoLookahead) {
  const auto p = testing_support::random_walk(700, 14);
  for (auto kind : {BaselineKind::SignR, BaselineKind::MacdSignal}) {
    BaselineSpec spec;
    spec.kind = kind;
    const auto full = positions(p, 400, 699, spec);
    auto perturbed = p;
    for (std::size_t t = 551; t < perturbed.size(); ++t) perturbed[t] *= 1.3;
    const auto alt = positions(perturbed, 400, 699, spec);
    for (std::size_t t = 400; t <= 550; ++t) EXPECT_EQ(full[t - 400], alt[t - 400]);
  }
}

TEST(Baselines, NamesRoundTrip) {
  for (auto k : {BaselineKind::Long, BaselineKind::SignR, BaselineKind::MacdSignal}) {
    EXPECT_EQ(*parse_baseline(to_string(k)), k);
  }
  EXPECT_FALSE(parse_baseline("DQN"));
}
