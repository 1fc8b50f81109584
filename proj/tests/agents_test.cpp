#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "deeptrade/agents.hpp"
#include "deeptrade/error.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace deeptrade;
using namespace deeptrade::agents;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorCode::IoError;
}

AgentConfig small(Algo algo) {
  auto c = AgentConfig::defaults(algo);
  c.hidden1 = 8;
  c.hidden2 = 4;
  c.head_hidden = 4;
  c.batch_size = 8;
  c.memory_size = 100;
  c.episode_len = 20;
  return c;
}

ContractData small_contract(std::uint64_t seed) {
  return prepare_contract(testing_support::make_series(testing_support::random_walk(460, seed)));
}

// Windows of 7-feature rows filled with seeded noise.
struct Windows {
  std::vector<double> storage;
  std::vector<indicators::StateWindow> w;
  Windows(std::size_t n, std::uint64_t seed) {
    const std::size_t len = indicators::kWindowLength * indicators::kFeatureCount;
    storage.resize(n * len);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    for (double& v : storage) v = z(rng);
    for (std::size_t i = 0; i < n; ++i) w.push_back({std::span<const double>(storage.data() + i * len, len), {}, i});
  }
};

}  // namespace

TEST(Returns, DiscountedSum) {
  const std::vector<double> r{1.0, 1.0, 1.0};
  EXPECT_EQ(compute_returns(r, 0.5), (std::vector<double>{1.75, 1.5, 1.0}));
  EXPECT_TRUE(compute_returns(std::vector<double>{}, 0.3).empty());
}

TEST(Epsilon, LinearScheduleThenConstant) {
  auto c = AgentConfig::defaults(Algo::DQN);
  c.step_budget = 1000;
  EXPECT_EQ(epsilon_at(0, c), 1.0);
  EXPECT_NEAR(epsilon_at(150, c), 0.55, 1e-12);
  EXPECT_NEAR(epsilon_at(300, c), 0.1, 1e-12);
  EXPECT_DOUBLE_EQ(epsilon_at(999, c), 0.1);
  for (std::size_t s = 1; s < 1000; ++s) EXPECT_LE(epsilon_at(s, c), epsilon_at(s - 1, c));
}

TEST(Argmax, TiesGoLow) {
  EXPECT_EQ(argmax(std::vector<double>{1.0, 3.0, 3.0}), 1);
  EXPECT_EQ(argmax(std::vector<double>{2.0, 2.0, 2.0}), 0);
  std::mt19937_64 rng(1);
  const std::vector<double> q{0.0, 5.0, 1.0};
  for (int i = 0; i < 50; ++i) EXPECT_EQ(epsilon_greedy(q, 0.0, rng), 1);
  std::set<int> seen;
  for (int i = 0; i < 200; ++i) seen.insert(epsilon_greedy(q, 1.0, rng));
  EXPECT_EQ(seen.size(), 3u);
}

TEST(Replay, CapacityEvictionAndDistinctSamples) {
  ReplayBuffer buf(5);
  for (int i = 0; i < 12; ++i) {
    Transition t;
    t.reward = i;
    buf.push(t);
    EXPECT_LE(buf.size(), 5u);
  }
  std::multiset<double> held;
  for (std::size_t i = 0; i < buf.size(); ++i) held.insert(buf[i].reward);
  EXPECT_EQ(held, (std::multiset<double>{7, 8, 9, 10, 11}));
  std::mt19937_64 rng(3);
  const auto s = buf.sample(4, rng);
  std::set<double> distinct;
  for (const auto& t : s) distinct.insert(t.reward);
  EXPECT_EQ(distinct.size(), 4u);
  EXPECT_EQ(buf.sample(50, rng).size(), 5u);
}

TEST(DoubleDqn, HandTableTarget) {
  nn::Matrix online(3, 1), target(3, 1);
  online << 0.2, 0.9, 0.5;
  target << 1.0, 0.1, 0.7;
  const std::vector<double> r{1.0};
  EXPECT_NEAR(double_dqn_targets(online, target, r, {false}, 0.3)[0], 1.03, 1e-15);
  EXPECT_EQ(double_dqn_targets(online, target, r, {true}, 0.3)[0], 1.0);
}

TEST(TargetSync, CopiesExactlyAtTau) {
  const auto cfg = small(Algo::DQN);
  nn::Network online = nn::make_network(cfg.network_spec(nn::HeadKind::DuelingQ), 1);
  nn::Network target = nn::make_network(cfg.network_spec(nn::HeadKind::DuelingQ), 2);
  EXPECT_FALSE(target_sync(online, target, 0, 10));
  EXPECT_FALSE(target_sync(online, target, 9, 10));
  EXPECT_NE(target.params, online.params);
  EXPECT_TRUE(target_sync(online, target, 10, 10));
  EXPECT_EQ(target.params, online.params);

  Windows w(4, 5);
  std::vector<Transition> batch;
  for (int i = 0; i < 3; ++i) batch.push_back({w.w[i], i % 3, 0.1 * i, w.w[i + 1], false});
  auto adam = nn::AdamState::for_params(online.params);
  dqn_train_step(online, target, batch, cfg, adam);
  EXPECT_FALSE(target_sync(online, target, 11, 10));
  EXPECT_NE(target.params, online.params);
  EXPECT_EQ(code_of([&] { dqn_train_step(online, target, {}, cfg, adam); }), ErrorCode::EmptyBatch);
}

TEST(DqnTrainStep, ReducesLossOnFixedBatch) {
  auto cfg = small(Algo::DQN);
  cfg.lr_critic = 1e-3;
  nn::Network online = nn::make_network(cfg.network_spec(nn::HeadKind::DuelingQ), 3);
  const nn::Network target = online;
  Windows w(9, 6);
  std::vector<Transition> batch;
  for (int i = 0; i < 8; ++i) batch.push_back({w.w[i], i % 3, i % 2 ? 0.5 : -0.5, w.w[i + 1], i == 7});
  auto adam = nn::AdamState::for_params(online.params);
  const double first = dqn_train_step(online, target, batch, cfg, adam);
  double last = first;
  for (int k = 0; k < 30; ++k) last = dqn_train_step(online, target, batch, cfg, adam);
  EXPECT_LT(last, first);
}

TEST(PgUpdate, ZeroReturnsLeaveParamsUnchanged) {
  const auto cfg = small(Algo::PG);
  nn::Network actor = nn::make_network(cfg.network_spec(nn::HeadKind::SoftmaxPolicy), 4);
  const auto before = actor.params;
  Windows w(3, 7);
  Episode ep{w.w, {0, 1, 2}, {0.0, 0.0, 0.0}, true};
  auto adam = nn::AdamState::for_params(actor.params);
  pg_update(actor, ep, cfg, adam);
  EXPECT_EQ(actor.params, before);
  ep.complete = false;
  EXPECT_EQ(code_of([&] { pg_update(actor, ep, cfg, adam); }), ErrorCode::IncompleteEpisode);
}

TEST(PgUpdate, PositiveReturnRaisesActionProbability) {
  auto cfg = small(Algo::PG);
  cfg.lr_actor = 1e-3;
  nn::Network actor = nn::make_network(cfg.network_spec(nn::HeadKind::SoftmaxPolicy), 5);
  Windows w(1, 8);
  auto prob = [&](int a) {
    const nn::Matrix logits = nn::evaluate(actor, w.w);
    const Eigen::VectorXd e = (logits.col(0).array() - logits.col(0).maxCoeff()).exp();
    return e(a) / e.sum();
  };
  const double before = prob(2);
  Episode ep{w.w, {2}, {1.0}, true};
  auto adam = nn::AdamState::for_params(actor.params);
  pg_update(actor, ep, cfg, adam);
  EXPECT_GT(prob(2), before);
}

TEST(PgUpdate, SoftmaxGradientMatchesAnalytic) {
  // One window, loss -log softmax(z)_a * G: d/dz = -(onehot(a) - softmax(z)) * G.
  nn::Tape t;
  nn::Matrix z(3, 1);
  z << 0.3, -1.2, 0.8;
  nn::ParamStore p;
  p.add("z", 3, 1);
  for (int i = 0; i < 3; ++i) p.flat(static_cast<std::size_t>(i)) = z(i, 0);
  const double g = 1.7;
  const std::vector<int> a{1};
  const nn::Var zv = t.parameter(p, 0);
  t.backward(t.scale(t.sum(t.pick(t.log_softmax(zv), a)), -g));
  auto grads = p.zeros_like();
  t.accumulate_gradients(grads);
  const Eigen::VectorXd e = z.col(0).array().exp();
  const Eigen::VectorXd sm = e / e.sum();
  for (int i = 0; i < 3; ++i) {
    const double expected = -((i == 1 ? 1.0 : 0.0) - sm(i)) * g;
    EXPECT_NEAR(grads.flat(static_cast<std::size_t>(i)), expected, 1e-10);
  }
}

TEST(A2C, AdvantageExamples) {
  const std::vector<double> r{0.2}, v{0.5}, nv{1.0};
  EXPECT_NEAR(a2c_advantages(r, v, nv, {false}, 0.3)[0], 0.0, 1e-15);
  const std::vector<double> rr{0.4, -0.1}, zero{0.0, 0.0};
  EXPECT_EQ(a2c_advantages(rr, zero, zero, {false, true}, 0.3), rr);
  EXPECT_NEAR(a2c_advantages(r, v, nv, {true}, 0.3)[0], -0.3, 1e-15);
}

TEST(A2C, SampleCentredOnSquashedMean) {
  std::mt19937_64 rng(9);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) sum += a2c_sample(0.5, -2.0, rng);
  EXPECT_NEAR(sum / 20000.0, std::tanh(0.5), 2e-3);
}

TEST(A2C, UpdateChecksEnvCountAndMovesBothNetworks) {
  auto cfg = small(Algo::A2C);
  cfg.n_envs = 2;
  nn::Network actor = nn::make_network(cfg.network_spec(nn::HeadKind::GaussianPolicy), 1);
  nn::Network critic = nn::make_network(cfg.network_spec(nn::HeadKind::Value), 2);
  auto aa = nn::AdamState::for_params(actor.params);
  auto ca = nn::AdamState::for_params(critic.params);
  Windows w(5, 3);
  A2CBatch b;
  b.n_envs = 2;
  for (int i = 0; i < 4; ++i) {
    b.states.push_back(w.w[i]);
    b.next_states.push_back(w.w[i + 1]);
    b.actions.push_back(0.1 * i - 0.2);
    b.rewards.push_back(i % 2 ? 0.3 : -0.2);
    b.dones.push_back(false);
  }
  const auto a0 = actor.params, c0 = critic.params;
  const auto losses = a2c_update(actor, critic, b, cfg, aa, ca);
  EXPECT_TRUE(std::isfinite(losses.actor));
  EXPECT_GT(losses.critic, 0.0);
  EXPECT_NE(actor.params, a0);
  EXPECT_NE(critic.params, c0);
  b.n_envs = 3;
  EXPECT_EQ(code_of([&] { a2c_update(actor, critic, b, cfg, aa, ca); }), ErrorCode::EnvCountMismatch);
}

TEST(A2C, CriticGradientMatchesFiniteDifferencesWithFixedTarget) {
  const auto fx = gradcheck::make_fixture(nn::HeadKind::Value, 21);
  const auto r = gradcheck::check(fx.net, gradcheck::loss_for(fx, nn::HeadKind::Value));
  EXPECT_LT(r.max_rel_err, 1e-4) << r.worst;
}

TEST(Config, DefaultsSetAndValidate) {
  const auto dqn = AgentConfig::defaults(Algo::DQN);
  EXPECT_EQ(dqn.gamma, 0.3);
  EXPECT_EQ(dqn.target_sync_tau, 1000u);
  EXPECT_EQ(dqn.bp_train, 0.002);
  const auto a2c = AgentConfig::defaults(Algo::A2C);
  EXPECT_EQ(a2c.rollout_len(), a2c.batch_size / a2c.n_envs);
  auto c = dqn;
  EXPECT_TRUE(c.set("gamma", "0.5"));
  EXPECT_EQ(c.gamma, 0.5);
  EXPECT_FALSE(c.set("nonsense", "1"));
  EXPECT_EQ(code_of([&] { c.set("gamma", "abc"); }), ErrorCode::ConfigError);
  auto round = AgentConfig::defaults(Algo::DQN);
  for (const auto& [k, v] : c.to_key_values()) round.set(k, v);
  EXPECT_EQ(round, c);
  c.gamma = 1.5;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::BadSpec);
  EXPECT_EQ(*parse_algo("A2c"), Algo::A2C);
  EXPECT_FALSE(parse_algo("ppo"));
}

TEST(Train, DeterministicAndCounted) {
  std::vector<ContractData> cs;
  cs.push_back(small_contract(1));
  cs.push_back(small_contract(2));
  const data::DateRange range{cs[0].series.dates.front(), cs[0].series.dates.back()};
  for (Algo algo : {Algo::DQN, Algo::PG, Algo::A2C}) {
    auto cfg = small(algo);
    cfg.step_budget = 80;
    cfg.n_envs = 2;
    const auto a = train(cs, range, cfg, env::RewardConfig{}, 7);
    const auto b = train(cs, range, cfg, env::RewardConfig{}, 7);
    EXPECT_EQ(a.checkpoint.primary.params, b.checkpoint.primary.params) << to_string(algo);
    ASSERT_EQ(a.curve.size(), b.curve.size());
    for (std::size_t i = 0; i < a.curve.size(); ++i) {
      EXPECT_EQ(a.curve[i].step, b.curve[i].step);
      EXPECT_TRUE(a.curve[i].loss == b.curve[i].loss || (std::isnan(a.curve[i].loss) && std::isnan(b.curve[i].loss)));
    }
    EXPECT_EQ(a.checkpoint.env_steps, 80u);
    if (algo == Algo::PG) { EXPECT_EQ(a.checkpoint.updates, 80u / cfg.episode_len); }
    if (algo == Algo::A2C) { EXPECT_EQ(a.checkpoint.updates, 80u / cfg.batch_size); }
  }
}

TEST(Train, ZeroBudgetKeepsInitialization) {
  std::vector<ContractData> cs{small_contract(3)};
  const data::DateRange range{cs[0].series.dates.front(), cs[0].series.dates.back()};
  auto cfg = small(Algo::PG);
  cfg.step_budget = 0;
  const auto r = train(cs, range, cfg, env::RewardConfig{}, 11);
  std::mt19937_64 rng(11);
  EXPECT_EQ(r.checkpoint.primary.params, nn::init_params(cfg.network_spec(nn::HeadKind::SoftmaxPolicy), rng()));
  EXPECT_EQ(r.checkpoint.updates, 0u);
}

TEST(Train, NoDecisionInRange) {
  std::vector<ContractData> cs{small_contract(4)};
  const data::DateRange early{cs[0].series.dates.front(), cs[0].series.dates[100]};
  EXPECT_EQ(code_of([&] { train(cs, early, small(Algo::DQN), env::RewardConfig{}, 1); }),
            ErrorCode::InsufficientHistory);
}

TEST(Checkpoint, SaveLoadRoundTripAndGreedyDeterminism) {
  std::vector<ContractData> cs{small_contract(5)};
  const data::DateRange range{cs[0].series.dates.front(), cs[0].series.dates.back()};
  testing_support::TempDir dir("ckpt");
  for (Algo algo : {Algo::DQN, Algo::PG, Algo::A2C}) {
    auto cfg = small(algo);
    cfg.step_budget = 40;
    cfg.n_envs = 2;
    const auto r = train(cs, range, cfg, env::RewardConfig{}, 2, "Commodity");
    const auto path = dir / (std::string(to_string(algo)) + ".ckpt");
    r.checkpoint.save(path);
    const auto back = PolicyCheckpoint::load(path);
    EXPECT_EQ(back.algo, algo);
    EXPECT_EQ(back.config, cfg);
    EXPECT_EQ(back.primary.params, r.checkpoint.primary.params);
    EXPECT_EQ(back.secondary.has_value(), r.checkpoint.secondary.has_value());
    EXPECT_EQ(back.asset_class, "Commodity");
    EXPECT_EQ(back.train_range, range);
    const auto states = indicators::build_states(cs[0].features.matrix);
    const auto p1 = greedy_positions(r.checkpoint, states);
    const auto p2 = greedy_positions(back, states);
    EXPECT_EQ(p1, p2);
    for (double p : p1) {
      EXPECT_GE(p, -1.0);
      EXPECT_LE(p, 1.0);
      if (algo != Algo::A2C) { EXPECT_TRUE(p == -1.0 || p == 0.0 || p == 1.0); }
    }
  }
}

TEST(DecisionSpan, RewardMustFallInRange) {
  const auto c = small_contract(6);
  const auto& d = c.series.dates;
  const auto span = decision_span(c, {d[400], d[410]});
  ASSERT_TRUE(span);
  EXPECT_EQ(span->first, 400u);
  EXPECT_EQ(span->second, 409u);
  const auto whole = decision_span(c, {d.front(), d.back()});
  EXPECT_EQ(whole->first, indicators::first_state_index(c.features.matrix));
  EXPECT_EQ(whole->second, d.size() - 2);
  EXPECT_FALSE(decision_span(c, {d[0], d[100]}));
}
