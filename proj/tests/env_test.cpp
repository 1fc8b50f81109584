#include <gtest/gtest.h>

#include <cmath>

#include "deeptrade/agents.hpp"
#include "deeptrade/env.hpp"
#include "deeptrade/error.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace deeptrade;
using namespace deeptrade::env;

namespace {

RewardConfig unit_ratio_cfg(double bp) {
  RewardConfig c;
  c.bp = bp;
  return c;
}

agents::ContractData contract(std::uint64_t seed, std::size_t n = 600, double vol = 0.01) {
  return agents::prepare_contract(testing_support::make_series(testing_support::random_walk(n, seed, vol)));
}

std::vector<double> run(const agents::ContractData& c, const RewardConfig& cfg, std::size_t start,
                        const std::vector<double>& actions) {
  TradingEnv e(c.series, c.features, cfg, ActionMode::Continuous);
  e.reset(start, actions.size());
  std::vector<double> out;
  for (double a : actions) out.push_back(e.step(a).reward);
  return out;
}

}  // namespace

TEST(ScaledPosition, HandValues) {
  RewardConfig c;
  EXPECT_NEAR(scaled_position(1.0, 0.02, c), 0.15 / std::sqrt(252.0) / 0.02, 1e-15);
  EXPECT_NEAR(scaled_position(1.0, 0.02, c), 0.4724, 1e-4);
  EXPECT_EQ(scaled_position(0.0, 0.02, c), 0.0);
  EXPECT_DOUBLE_EQ(scaled_position(-0.5, c.daily_target(), c), -0.5);
}

TEST(StepReward, PercentageConventionExample) {
  const auto c = unit_ratio_cfg(0.0001);
  const double s = c.daily_target();
  const auto r = step_reward(c, 100.0, 102.0, +1.0, s, -1.0, s);
  EXPECT_NEAR(r.reward, 0.0198, 1e-15);
  EXPECT_NEAR(r.cost, 0.0002, 1e-18);
}

TEST(StepReward, PriceDifferenceCostExample) {
  auto c = unit_ratio_cfg(0.0001);
  c.convention = ReturnConvention::PriceDifference;
  const double s = c.daily_target();
  const auto r = step_reward(c, 1000.0, 1000.0, 1.0, s, 0.0, s);
  EXPECT_NEAR(r.cost, 0.1, 1e-12);
  EXPECT_NEAR(r.reward, -0.1, 1e-12);
}

TEST(StepReward, FlatPriceAndHeldPositionIsZero) {
  const auto c = unit_ratio_cfg(0.002);
  const auto r = step_reward(c, 50.0, 50.0, 1.0, 0.01, 1.0, 0.01);
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_EQ(r.cost, 0.0);
}

TEST(StepReward, ReversalCostsTwiceAnOpening) {
  const auto c = unit_ratio_cfg(0.0015);
  const auto reverse = step_reward(c, 80.0, 80.0, -1.0, 0.013, 1.0, 0.013);
  const auto open = step_reward(c, 80.0, 80.0, -1.0, 0.013, 0.0, 0.013);
  EXPECT_EQ(reverse.cost, 2.0 * open.cost);
}

TEST(StepReward, VolFloorApplied) {
  const auto c = unit_ratio_cfg(0.0);
  const auto r = step_reward(c, 1.0, 1.01, 1.0, 0.0, 0.0, 0.0);
  EXPECT_NEAR(r.position, c.daily_target() / c.vol_floor, 1e-9);
}

TEST(RewardConfig, Validation) {
  RewardConfig c;
  c.bp = -1.0;
  EXPECT_THROW(c.validate(), Error);
  c = RewardConfig{};
  c.vol_floor = 0.0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(*parse_return_convention("price_difference"), ReturnConvention::PriceDifference);
  EXPECT_EQ(to_string(ReturnConvention::Percentage), "percentage");
}

TEST(Env, ResetMatchesBuildStatesAndIsPure) {
  const auto c = contract(1);
  TradingEnv e(c.series, c.features, RewardConfig{}, ActionMode::Discrete3);
  const std::size_t start = e.first_decision_index() + 10;
  const auto s0 = e.reset(start, 20);
  const auto states = indicators::build_states(c.features.matrix);
  EXPECT_EQ(s0.index, start);
  EXPECT_EQ(s0.values.data(), states[10].values.data());
  e.step(2);
  const auto again = e.reset(start, 20);
  EXPECT_EQ(again.values.data(), s0.values.data());
  EXPECT_EQ(e.prev_action(), 0.0);
  EXPECT_EQ(e.prev_action2(), 0.0);
}

TEST(Env, FirstStepCostUsesFlatInception) {
  const auto c = contract(2);
  RewardConfig cfg;
  TradingEnv e(c.series, c.features, cfg, ActionMode::Discrete3);
  const std::size_t t = e.first_decision_index();
  e.reset(t, 5);
  const auto r = e.step(2);
  const double pos = scaled_position(1.0, std::max(c.features.vol[t], cfg.vol_floor), cfg);
  EXPECT_NEAR(r.cost, cfg.bp * pos, 1e-15);
  EXPECT_EQ(e.prev_action(), 1.0);
  e.step(0);
  EXPECT_EQ(e.prev_action(), -1.0);
  EXPECT_EQ(e.prev_action2(), 1.0);
}

TEST(Env, EpisodeBoundsAndErrors) {
  const auto c = contract(3);
  TradingEnv e(c.series, c.features, RewardConfig{}, ActionMode::Discrete3);
  EXPECT_EQ(e.last_decision_index(), c.series.size() - 2);
  EXPECT_THROW(e.reset(e.first_decision_index() - 1, 1), Error);
  EXPECT_THROW(e.reset(e.last_decision_index(), 2), Error);
  e.reset(e.last_decision_index(), 1);
  EXPECT_TRUE(e.step(1).done);
  try {
    e.step(1);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::EpisodeDone);
  }
  e.reset(e.first_decision_index(), 3);
  EXPECT_THROW(e.step(1.5), Error);
  EXPECT_THROW(e.step(3), Error);
  TradingEnv ce(c.series, c.features, RewardConfig{}, ActionMode::Continuous);
  ce.reset(ce.first_decision_index(), 3);
  EXPECT_THROW(ce.step(std::nan("")), Error);
  const auto clamped = ce.step(5.0);
  EXPECT_EQ(ce.prev_action(), 1.0);
  EXPECT_GT(clamped.scaled_position, 0.0);
}

TEST(Env, MatchesStraightLineAccounting) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto c = contract(seed, 700, 0.005 + 0.004 * seed);
    RewardConfig cfg;
    cfg.bp = 0.0007 * seed;
    TradingEnv probe(c.series, c.features, cfg, ActionMode::Continuous);
    const std::size_t first = probe.first_decision_index();
    const std::size_t len = probe.last_decision_index() - first + 1;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> actions(len);
    for (double& a : actions) a = u(rng);
    const auto engine = run(c, cfg, first, actions);
    const auto ref = oracle::eq4_percentage(c.series.closes, c.features.vol, actions, first, cfg.sigma_tgt, cfg.bp);
    for (std::size_t k = 0; k < len; ++k) EXPECT_NEAR(engine[k], ref.rewards[k], 1e-12);
  }
}

TEST(Env, PriceScaleInvariance) {
  const auto base = contract(4);
  for (double k : {0.01, 1000.0}) {
    auto scaled_series = base.series;
    for (double& p : scaled_series.closes) p *= k;
    const auto scaled = agents::prepare_contract(scaled_series);
    TradingEnv e(base.series, base.features, RewardConfig{}, ActionMode::Continuous);
    const std::size_t first = e.first_decision_index();
    std::vector<double> actions;
    for (std::size_t i = 0; i < 150; ++i) actions.push_back(std::sin(0.3 * static_cast<double>(i)));
    const auto a = run(base, RewardConfig{}, first, actions);
    const auto b = run(scaled, RewardConfig{}, first, actions);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
  }
}

TEST(Env, TotalRewardNonIncreasingInCost) {
  const auto c = contract(5);
  TradingEnv e(c.series, c.features, RewardConfig{}, ActionMode::Continuous);
  std::vector<double> actions;
  for (std::size_t i = 0; i < 200; ++i) actions.push_back(i % 3 == 0 ? 1.0 : (i % 3 == 1 ? -0.5 : 0.0));
  double prev = std::numeric_limits<double>::infinity();
  for (double bp : {0.0, 0.0001, 0.0005, 0.0010, 0.0025}) {
    const auto r = run(c, unit_ratio_cfg(bp), e.first_decision_index(), actions);
    double total = 0.0;
    for (double x : r) total += x;
    EXPECT_LE(total, prev);
    prev = total;
  }
}

TEST(Env, ZeroActionsEarnNothing) {
  const auto c = contract(6);
  TradingEnv e(c.series, c.features, RewardConfig{}, ActionMode::Continuous);
  for (double r : run(c, RewardConfig{}, e.first_decision_index(), std::vector<double>(100, 0.0))) EXPECT_EQ(r, 0.0);
}

TEST(Env, TraceRecordsDecisionDates) {
  const auto c = contract(7);
  TradingEnv e(c.series, c.features, RewardConfig{}, ActionMode::Discrete3);
  e.set_tracing(true);
  const std::size_t t = e.first_decision_index();
  e.reset(t, 3);
  e.step(2);
  e.step(1);
  ASSERT_EQ(e.trace().size(), 2u);
  EXPECT_EQ(e.trace()[0].date, c.series.dates[t]);
  EXPECT_EQ(e.trace()[1].action, 0.0);
  testing_support::TempDir dir("env");
  e.write_trace_csv(dir / "trace.csv");
  const auto text = testing_support::read_file(dir / "trace.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "date,action,scaled_position,reward,cost");
}
