#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deeptrade/env.hpp"
#include "deeptrade/indicators.hpp"
#include "deeptrade/market_data.hpp"
#include "deeptrade/nn/adam.hpp"
#include "deeptrade/nn/network.hpp"

namespace deeptrade::agents {

enum class Algo { DQN, PG, A2C };

std::string_view to_string(Algo a);
std::optional<Algo> parse_algo(std::string_view text);

struct AgentConfig {
  Algo algo = Algo::DQN;
  double gamma = 0.3;
  double lr_actor = 1e-4;
  double lr_critic = 1e-4;
  std::size_t batch_size = 64;
  double bp_train = 0.0020;
  std::size_t memory_size = 5000;
  std::size_t target_sync_tau = 1000;  // env steps between hard target copies
  double eps_start = 1.0;
  double eps_end = 0.1;
  double eps_decay_fraction = 0.3;  // of step_budget
  std::size_t n_envs = 4;
  double entropy_coef = 0.0;
  double grad_clip = 1.0;  // global norm; 0 disables
  std::size_t step_budget = 100000;
  std::size_t episode_len = 252;
  std::size_t train_every = 1;  // DQN env steps per gradient update
  bool dueling = true;
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 32;
  std::size_t head_hidden = 32;

  static AgentConfig defaults(Algo algo);
  // A2C steps each environment batch_size / n_envs times per update.
  std::size_t rollout_len() const { return batch_size / n_envs; }
  nn::NetworkSpec network_spec(nn::HeadKind head) const;
  // Throws Error{BadSpec}.
  void validate() const;

  // Flat key/value form, keys without any prefix (e.g. "gamma").
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
  // Returns false for an unknown key; throws Error{ConfigError} for a bad value.
  bool set(std::string_view key, std::string_view value);

  friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
};

// G_t = sum_{k>=t} gamma^{k-t} rewards[k], where rewards[k] is the reward
// that follows the action at step k.
std::vector<double> compute_returns(std::span<const double> rewards, double gamma);

// Linear decay from eps_start to eps_end over the first
// eps_decay_fraction * step_budget steps, then constant.
double epsilon_at(std::size_t step, const AgentConfig& cfg);

// Index of the largest value; ties go to the lowest index.
int argmax(std::span<const double> values);

// Epsilon-greedy choice from precomputed Q-values.
int epsilon_greedy(std::span<const double> q, double epsilon, std::mt19937_64& rng);
// Runs the Q network on one state only when the greedy branch is taken.
int dqn_select(const nn::Network& q_net, const indicators::StateWindow& state, double epsilon, std::mt19937_64& rng);

struct Transition {
  indicators::StateWindow state;
  int action = 0;
  double reward = 0.0;
  indicators::StateWindow next_state;
  bool done = false;
};

// Fixed-capacity ring buffer; the oldest transition is overwritten first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }
  // Uniform sample of min(n, size()) distinct transitions.
  std::vector<Transition> sample(std::size_t n, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

// y = r + gamma * Q_target(s', argmax_a Q_online(s', a)), or y = r when done.
// Q matrices are 3 x B.
std::vector<double> double_dqn_targets(const nn::Matrix& q_online_next, const nn::Matrix& q_target_next,
                                       std::span<const double> rewards, const std::vector<bool>& dones, double gamma);

// One MSE step on the online network. Throws Error{EmptyBatch}.
double dqn_train_step(nn::Network& online, const nn::Network& target, std::span<const Transition> batch,
                      const AgentConfig& cfg, nn::AdamState& adam);

// Copies online into target when step is a positive multiple of tau.
bool target_sync(const nn::Network& online, nn::Network& target, std::size_t step, std::size_t tau);

struct Episode {
  std::vector<indicators::StateWindow> states;
  std::vector<int> actions;
  std::vector<double> rewards;
  bool complete = false;
};

// Loss -sum_t log pi(a_t|s_t) G_t, one Adam step. Returns the loss.
// Throws Error{IncompleteEpisode}.
double pg_update(nn::Network& actor, const Episode& episode, const AgentConfig& cfg, nn::AdamState& adam);

// Synchronized one-step transitions, ordered step-major: entry k * n_envs + e
// is environment e at rollout step k. Actions are the unclamped samples.
struct A2CBatch {
  std::size_t n_envs = 0;
  std::vector<indicators::StateWindow> states;
  std::vector<double> actions;
  std::vector<double> rewards;
  std::vector<indicators::StateWindow> next_states;
  std::vector<bool> dones;
};

// R + gamma V(s') - V(s), bootstrap dropped on done.
std::vector<double> a2c_advantages(std::span<const double> rewards, std::span<const double> values,
                                   std::span<const double> next_values, const std::vector<bool>& dones, double gamma);

// Raw Gaussian sample around tanh(mean) with scale exp(log_std).
double a2c_sample(double pre_squash_mean, double log_std, std::mt19937_64& rng);

struct A2CLosses {
  double actor = 0.0;
  double critic = 0.0;
};

// Critic: mean squared TD error with the bootstrap target held fixed.
// Actor: -mean(log pi(a|s) * advantage) - entropy_coef * entropy, advantage
// held fixed. Separate Adam steps. Throws Error{EnvCountMismatch}.
A2CLosses a2c_update(nn::Network& actor, nn::Network& critic, const A2CBatch& batch, const AgentConfig& cfg,
                     nn::AdamState& actor_adam, nn::AdamState& critic_adam);

// A contract's prices with its precomputed features.
struct ContractData {
  data::PriceSeries series;
  indicators::ContractFeatures features;
};

ContractData prepare_contract(data::PriceSeries series);

struct PolicyCheckpoint {
  Algo algo = Algo::DQN;
  AgentConfig config;
  nn::Network primary;                  // DQN online, PG policy, A2C actor
  std::optional<nn::Network> secondary; // DQN target, A2C critic
  std::string asset_class;
  std::uint64_t seed = 0;
  data::DateRange train_range{};
  std::size_t env_steps = 0;
  std::size_t updates = 0;

  // Text format: a `checkpoint,1` line, `meta,<key>,<value>` lines and
  // parameter lines tagged primary/secondary (see nn::write_params).
  void save(const std::filesystem::path& path) const;
  static PolicyCheckpoint load(const std::filesystem::path& path);
};

// Deterministic positions in [-1, 1] for each state: greedy action for DQN
// and PG, tanh(mean) for A2C.
std::vector<double> greedy_positions(const PolicyCheckpoint& policy, std::span<const indicators::StateWindow> states);

struct CurveRow {
  std::size_t step = 0;
  double loss = 0.0;  // NaN before the first update of the row
  double mean_episode_reward = 0.0;  // NaN when no episode finished
  double epsilon = 0.0;
};

void write_curve_csv(std::span<const CurveRow> rows, const std::filesystem::path& path);

struct TrainResult {
  PolicyCheckpoint checkpoint;
  std::vector<CurveRow> curve;
};

// Decision indices of `contract` whose action and realized reward both fall in
// `range`, as [first, last]; nullopt when none.
std::optional<std::pair<std::size_t, std::size_t>> decision_span(const ContractData& contract,
                                                                 const data::DateRange& range);

// Trains one agent on episodes sampled uniformly across `contracts` inside
// train_range until cfg.step_budget env steps. Deterministic for a seed.
// Throws Error{InsufficientHistory} when no contract has a decision index in
// range, Error{DivergedLoss} on a non-finite loss.
TrainResult train(std::span<const ContractData> contracts, const data::DateRange& train_range,
                  const AgentConfig& cfg, const env::RewardConfig& reward, std::uint64_t seed,
                  std::string asset_class = {});

}  // namespace deeptrade::agents
