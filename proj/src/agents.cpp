#include "deeptrade/agents.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <tuple>

#include "deeptrade/csv.hpp"
#include "deeptrade/error.hpp"

namespace deeptrade::agents {

namespace {

using indicators::StateWindow;

std::size_t parse_count(std::string_view key, std::string_view value) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::ConfigError,
                std::string(key) + ": expected a non-negative integer, got '" + std::string(value) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  const auto v = csv::parse_double(value);
  if (!v || !std::isfinite(*v)) {
    throw Error(ErrorCode::ConfigError, std::string(key) + ": expected a number, got '" + std::string(value) + "'");
  }
  return *v;
}

bool parse_flag(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(ErrorCode::ConfigError,
              std::string(key) + ": expected true or false, got '" + std::string(value) + "'");
}

// Backprop `loss`, clip, and take one Adam step on `net`.
void optimize(nn::Network& net, nn::Tape& tape, nn::Var loss, double grad_clip, nn::AdamState& adam, double lr) {
  tape.backward(loss);
  nn::ParamStore grads = net.params.zeros_like();
  tape.accumulate_gradients(grads);
  if (grad_clip > 0.0) nn::clip_global_norm(grads, grad_clip);
  nn::adam_step(net.params, grads, adam, lr);
}

void check_finite_loss(double loss, std::string_view what) {
  if (!std::isfinite(loss)) throw Error(ErrorCode::DivergedLoss, std::string(what) + " loss became non-finite");
}

nn::HeadKind q_head(const AgentConfig& cfg) { return cfg.dueling ? nn::HeadKind::DuelingQ : nn::HeadKind::PlainQ; }

}  // namespace

std::string_view to_string(Algo a) {
  switch (a) {
    case Algo::DQN: return "dqn";
    case Algo::PG: return "pg";
    case Algo::A2C: return "a2c";
  }
  return "?";
}

std::optional<Algo> parse_algo(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "dqn") return Algo::DQN;
  if (lower == "pg") return Algo::PG;
  if (lower == "a2c") return Algo::A2C;
  return std::nullopt;
}

AgentConfig AgentConfig::defaults(Algo algo) {
  AgentConfig c;
  c.algo = algo;
  switch (algo) {
    case Algo::DQN:
      c.lr_critic = 0.0001;
      c.batch_size = 64;
      c.memory_size = 5000;
      c.target_sync_tau = 1000;
      break;
    case Algo::PG:
      c.lr_actor = 0.0001;
      break;
    case Algo::A2C:
      c.lr_critic = 0.001;
      c.lr_actor = 0.0001;
      c.batch_size = 128;
      break;
  }
  return c;
}

nn::NetworkSpec AgentConfig::network_spec(nn::HeadKind head) const {
  nn::NetworkSpec s;
  s.hidden1 = hidden1;
  s.hidden2 = hidden2;
  s.head_hidden = head_hidden;
  s.head = head;
  return s;
}

void AgentConfig::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::BadSpec, msg); };
  if (!(gamma >= 0.0 && gamma <= 1.0)) bad("gamma must lie in [0, 1]");
  if (!(lr_actor > 0.0) || !(lr_critic > 0.0)) bad("learning rates must be positive");
  if (batch_size == 0) bad("batch_size must be positive");
  if (!(bp_train >= 0.0)) bad("bp_train must be non-negative");
  if (memory_size < batch_size && algo == Algo::DQN) bad("memory_size must hold at least one batch");
  if (target_sync_tau == 0) bad("target_sync_tau must be at least 1");
  if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0)) bad("epsilon must lie in [0, 1]");
  if (!(eps_decay_fraction >= 0.0 && eps_decay_fraction <= 1.0)) bad("eps_decay_fraction must lie in [0, 1]");
  if (n_envs == 0) bad("n_envs must be positive");
  if (algo == Algo::A2C && (batch_size % n_envs != 0)) bad("batch_size must be a multiple of n_envs");
  if (!(entropy_coef >= 0.0)) bad("entropy_coef must be non-negative");
  if (!(grad_clip >= 0.0)) bad("grad_clip must be non-negative");
  if (episode_len == 0) bad("episode_len must be positive");
  if (train_every == 0) bad("train_every must be positive");
  if (hidden1 == 0 || hidden2 == 0 || head_hidden == 0) bad("layer sizes must be positive");
}

std::vector<std::pair<std::string, std::string>> AgentConfig::to_key_values() const {
  auto num = [](double v) { return csv::format_double(v); };
  return {
      {"algo", std::string(to_string(algo))},
      {"gamma", num(gamma)},
      {"lr_actor", num(lr_actor)},
      {"lr_critic", num(lr_critic)},
      {"batch_size", std::to_string(batch_size)},
      {"bp_train", num(bp_train)},
      {"memory_size", std::to_string(memory_size)},
      {"target_sync_tau", std::to_string(target_sync_tau)},
      {"eps_start", num(eps_start)},
      {"eps_end", num(eps_end)},
      {"eps_decay_fraction", num(eps_decay_fraction)},
      {"n_envs", std::to_string(n_envs)},
      {"entropy_coef", num(entropy_coef)},
      {"grad_clip", num(grad_clip)},
      {"step_budget", std::to_string(step_budget)},
      {"episode_len", std::to_string(episode_len)},
      {"train_every", std::to_string(train_every)},
      {"dueling", dueling ? "true" : "false"},
      {"hidden1", std::to_string(hidden1)},
      {"hidden2", std::to_string(hidden2)},
      {"head_hidden", std::to_string(head_hidden)},
  };
}

bool AgentConfig::set(std::string_view key, std::string_view value) {
  if (key == "algo") {
    const auto a = parse_algo(value);
    if (!a) throw Error(ErrorCode::ConfigError, "algo: unknown algorithm '" + std::string(value) + "'");
    algo = *a;
  } else if (key == "gamma") {
    gamma = parse_real(key, value);
  } else if (key == "lr_actor") {
    lr_actor = parse_real(key, value);
  } else if (key == "lr_critic") {
    lr_critic = parse_real(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_count(key, value);
  } else if (key == "bp_train") {
    bp_train = parse_real(key, value);
  } else if (key == "memory_size") {
    memory_size = parse_count(key, value);
  } else if (key == "target_sync_tau") {
    target_sync_tau = parse_count(key, value);
  } else if (key == "eps_start") {
    eps_start = parse_real(key, value);
  } else if (key == "eps_end") {
    eps_end = parse_real(key, value);
  } else if (key == "eps_decay_fraction") {
    eps_decay_fraction = parse_real(key, value);
  } else if (key == "n_envs") {
    n_envs = parse_count(key, value);
  } else if (key == "entropy_coef") {
    entropy_coef = parse_real(key, value);
  } else if (key == "grad_clip") {
    grad_clip = parse_real(key, value);
  } else if (key == "step_budget") {
    step_budget = parse_count(key, value);
  } else if (key == "episode_len") {
    episode_len = parse_count(key, value);
  } else if (key == "train_every") {
    train_every = parse_count(key, value);
  } else if (key == "dueling") {
    dueling = parse_flag(key, value);
  } else if (key == "hidden1") {
    hidden1 = parse_count(key, value);
  } else if (key == "hidden2") {
    hidden2 = parse_count(key, value);
  } else if (key == "head_hidden") {
    head_hidden = parse_count(key, value);
  } else {
    return false;
  }
  return true;
}

std::vector<double> compute_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    acc = rewards[k] + gamma * acc;
    g[k] = acc;
  }
  return g;
}

double epsilon_at(std::size_t step, const AgentConfig& cfg) {
  const double decay_steps = cfg.eps_decay_fraction * static_cast<double>(cfg.step_budget);
  if (decay_steps <= 0.0) return cfg.eps_end;
  const double frac = std::min(1.0, static_cast<double>(step) / decay_steps);
  return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

int epsilon_greedy(std::span<const double> q, double epsilon, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(q.size()) - 1);
    return pick(rng);
  }
  return argmax(q);
}

int dqn_select(const nn::Network& q_net, const StateWindow& state, double epsilon, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, nn::kDiscreteActions - 1);
    return pick(rng);
  }
  const nn::Matrix q = nn::evaluate(q_net, std::span(&state, 1));
  return argmax(std::span<const double>(q.data(), static_cast<std::size_t>(q.rows())));
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorCode::BadSpec, "replay capacity must be positive");
  items_.reserve(capacity);
}

void ReplayBuffer::push(const Transition& t) {
  if (items_.size() < capacity_) {
    items_.push_back(t);
  } else {
    items_[next_] = t;
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  std::vector<std::size_t> all(items_.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> chosen;
  chosen.reserve(std::min(n, all.size()));
  std::sample(all.begin(), all.end(), std::back_inserter(chosen), n, rng);
  std::vector<Transition> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(items_[i]);
  return out;
}

std::vector<double> double_dqn_targets(const nn::Matrix& q_online_next, const nn::Matrix& q_target_next,
                                       std::span<const double> rewards, const std::vector<bool>& dones, double gamma) {
  const auto b = static_cast<std::size_t>(q_online_next.cols());
  if (q_target_next.cols() != q_online_next.cols() || q_target_next.rows() != q_online_next.rows() ||
      rewards.size() != b || dones.size() != b) {
    throw Error(ErrorCode::ShapeMismatch, "double-DQN target inputs disagree in batch size");
  }
  std::vector<double> y(b);
  for (std::size_t j = 0; j < b; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    if (dones[j]) {
      y[j] = rewards[j];
      continue;
    }
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < q_online_next.rows(); ++a) {
      if (q_online_next(a, col) > q_online_next(best, col)) best = a;
    }
    y[j] = rewards[j] + gamma * q_target_next(best, col);
  }
  return y;
}

double dqn_train_step(nn::Network& online, const nn::Network& target, std::span<const Transition> batch,
                      const AgentConfig& cfg, nn::AdamState& adam) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "DQN update on an empty batch");
  const std::size_t b = batch.size();
  std::vector<StateWindow> states(b), next(b);
  std::vector<int> actions(b);
  std::vector<double> rewards(b);
  std::vector<bool> dones(b);
  for (std::size_t j = 0; j < b; ++j) {
    states[j] = batch[j].state;
    next[j] = batch[j].next_state;
    actions[j] = batch[j].action;
    rewards[j] = batch[j].reward;
    dones[j] = batch[j].done;
  }
  const std::vector<double> y =
      double_dqn_targets(nn::evaluate(online, next), nn::evaluate(target, next), rewards, dones, cfg.gamma);

  nn::Tape tape;
  const nn::HeadOutputs h = nn::lstm_forward(tape, online, states);
  const nn::Var chosen = tape.pick(h.out, actions);
  const nn::Matrix y_row = Eigen::Map<const nn::Matrix>(y.data(), 1, static_cast<Eigen::Index>(b));
  const nn::Var loss = tape.mean(tape.square(tape.sub(chosen, tape.constant(y_row))));
  const double value = tape.scalar(loss);
  check_finite_loss(value, "DQN");
  optimize(online, tape, loss, cfg.grad_clip, adam, cfg.lr_critic);
  return value;
}

bool target_sync(const nn::Network& online, nn::Network& target, std::size_t step, std::size_t tau) {
  if (tau == 0) throw Error(ErrorCode::BadSpec, "target sync interval must be at least 1");
  if (step == 0 || step % tau != 0) return false;
  target.params = online.params;
  return true;
}

double pg_update(nn::Network& actor, const Episode& episode, const AgentConfig& cfg, nn::AdamState& adam) {
  const std::size_t n = episode.states.size();
  if (!episode.complete || n == 0 || episode.actions.size() != n || episode.rewards.size() != n) {
    throw Error(ErrorCode::IncompleteEpisode, "policy-gradient update needs a complete episode");
  }
  const std::vector<double> g = compute_returns(episode.rewards, cfg.gamma);
  nn::Tape tape;
  const nn::HeadOutputs h = nn::lstm_forward(tape, actor, episode.states);
  const nn::Var logp = tape.pick(tape.log_softmax(h.out), episode.actions);
  const nn::Matrix g_row = Eigen::Map<const nn::Matrix>(g.data(), 1, static_cast<Eigen::Index>(n));
  const nn::Var loss = tape.scale(tape.sum(tape.weight(logp, g_row)), -1.0);
  const double value = tape.scalar(loss);
  check_finite_loss(value, "policy-gradient");
  optimize(actor, tape, loss, cfg.grad_clip, adam, cfg.lr_actor);
  return value;
}

std::vector<double> a2c_advantages(std::span<const double> rewards, std::span<const double> values,
                                   std::span<const double> next_values, const std::vector<bool>& dones, double gamma) {
  const std::size_t n = rewards.size();
  if (values.size() != n || next_values.size() != n || dones.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "advantage inputs disagree in length");
  }
  std::vector<double> adv(n);
  for (std::size_t j = 0; j < n; ++j) {
    adv[j] = rewards[j] + (dones[j] ? 0.0 : gamma * next_values[j]) - values[j];
  }
  return adv;
}

double a2c_sample(double pre_squash_mean, double log_std, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  return std::tanh(pre_squash_mean) + std::exp(log_std) * z(rng);
}

A2CLosses a2c_update(nn::Network& actor, nn::Network& critic, const A2CBatch& batch, const AgentConfig& cfg,
                     nn::AdamState& actor_adam, nn::AdamState& critic_adam) {
  const std::size_t n = batch.states.size();
  if (batch.n_envs != cfg.n_envs || n == 0 || n % batch.n_envs != 0) {
    throw Error(ErrorCode::EnvCountMismatch, "A2C batch does not come from " + std::to_string(cfg.n_envs) + " envs");
  }
  if (batch.actions.size() != n || batch.rewards.size() != n || batch.next_states.size() != n ||
      batch.dones.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "A2C batch fields disagree in length");
  }
  const auto cols = static_cast<Eigen::Index>(n);

  const nn::Matrix v_next_m = nn::evaluate(critic, batch.next_states);
  const std::vector<double> v_next(v_next_m.data(), v_next_m.data() + n);

  nn::Tape critic_tape;
  const nn::HeadOutputs v = nn::lstm_forward(critic_tape, critic, batch.states);
  const nn::Matrix& v_now_m = critic_tape.value(v.out);
  const std::vector<double> v_now(v_now_m.data(), v_now_m.data() + n);
  const std::vector<double> adv = a2c_advantages(batch.rewards, v_now, v_next, batch.dones, cfg.gamma);

  nn::Matrix y(1, cols);
  for (std::size_t j = 0; j < n; ++j) {
    y(0, static_cast<Eigen::Index>(j)) = batch.rewards[j] + (batch.dones[j] ? 0.0 : cfg.gamma * v_next[j]);
  }
  const nn::Var critic_loss = critic_tape.mean(critic_tape.square(critic_tape.sub(critic_tape.constant(y), v.out)));

  nn::Tape actor_tape;
  const nn::HeadOutputs pi = nn::lstm_forward(actor_tape, actor, batch.states);
  const nn::Matrix actions = Eigen::Map<const nn::Matrix>(batch.actions.data(), 1, cols);
  const nn::Var logp = actor_tape.gaussian_log_prob(actor_tape.tanh(pi.out), *pi.log_std, actions);
  const nn::Matrix adv_row = Eigen::Map<const nn::Matrix>(adv.data(), 1, cols);
  nn::Var actor_loss = actor_tape.scale(actor_tape.mean(actor_tape.weight(logp, adv_row)), -1.0);
  if (cfg.entropy_coef > 0.0) {
    // Gaussian entropy is log_std plus a constant.
    actor_loss = actor_tape.sub(actor_loss, actor_tape.scale(*pi.log_std, cfg.entropy_coef));
  }

  A2CLosses out{actor_tape.scalar(actor_loss), critic_tape.scalar(critic_loss)};
  check_finite_loss(out.critic, "A2C critic");
  check_finite_loss(out.actor, "A2C actor");
  optimize(critic, critic_tape, critic_loss, cfg.grad_clip, critic_adam, cfg.lr_critic);
  optimize(actor, actor_tape, actor_loss, cfg.grad_clip, actor_adam, cfg.lr_actor);
  return out;
}

ContractData prepare_contract(data::PriceSeries series) {
  ContractData c;
  c.features = indicators::compute_features(series);
  c.series = std::move(series);
  return c;
}

void PolicyCheckpoint::save(const std::filesystem::path& path) const {
  std::ostringstream os;
  os << "checkpoint,1\n";
  os << "meta,algo," << to_string(algo) << '\n';
  os << "meta,asset_class," << asset_class << '\n';
  os << "meta,seed," << seed << '\n';
  os << "meta,train_start," << format_date(train_range.start) << '\n';
  os << "meta,train_end," << format_date(train_range.end) << '\n';
  os << "meta,env_steps," << env_steps << '\n';
  os << "meta,updates," << updates << '\n';
  os << "meta,primary_head," << nn::to_string(primary.spec.head) << '\n';
  if (secondary) os << "meta,secondary_head," << nn::to_string(secondary->spec.head) << '\n';
  for (const auto& [k, v] : config.to_key_values()) os << "config," << k << ',' << v << '\n';
  nn::write_params(os, primary.params, "primary");
  if (secondary) nn::write_params(os, secondary->params, "secondary");
  csv::write_text(path, os.str());
}

PolicyCheckpoint PolicyCheckpoint::load(const std::filesystem::path& path) {
  const std::vector<std::string> lines = csv::read_lines(path);
  if (lines.empty() || lines[0] != "checkpoint,1") {
    throw Error(ErrorCode::MalformedRow, path.string() + ": not a version-1 checkpoint");
  }
  PolicyCheckpoint cp;
  std::optional<nn::HeadKind> primary_head, secondary_head;
  nn::ParamStore primary_params, secondary_params;
  auto meta_date = [&](const std::string& v) {
    const auto d = parse_date(v);
    if (!d) throw Error(ErrorCode::MalformedRow, path.string() + ": bad date '" + v + "'");
    return *d;
  };
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> f = csv::split(lines[i]);
    const std::string& kind = f[0];
    if (kind == "meta" && f.size() >= 3) {
      const std::string& key = f[1];
      const std::string& val = f[2];
      if (key == "algo") {
        const auto a = parse_algo(val);
        if (!a) throw Error(ErrorCode::MalformedRow, path.string() + ": unknown algo " + val);
        cp.algo = *a;
      } else if (key == "asset_class") {
        cp.asset_class = val;
      } else if (key == "seed") {
        cp.seed = parse_count(key, val);
      } else if (key == "train_start") {
        cp.train_range.start = meta_date(val);
      } else if (key == "train_end") {
        cp.train_range.end = meta_date(val);
      } else if (key == "env_steps") {
        cp.env_steps = parse_count(key, val);
      } else if (key == "updates") {
        cp.updates = parse_count(key, val);
      } else if (key == "primary_head") {
        primary_head = nn::parse_head_kind(val);
      } else if (key == "secondary_head") {
        secondary_head = nn::parse_head_kind(val);
      }
    } else if (kind == "meta" && f.size() == 2) {
      if (f[1] != "asset_class") throw Error(ErrorCode::MalformedRow, path.string() + ": bad meta line");
    } else if (kind == "config" && f.size() == 3) {
      if (!cp.config.set(f[1], f[2])) throw Error(ErrorCode::MalformedRow, path.string() + ": unknown key " + f[1]);
    } else if (kind == "primary" || kind == "secondary") {
      nn::read_param_line(kind == "primary" ? primary_params : secondary_params,
                          std::span<const std::string>(f).subspan(1));
    } else {
      throw Error(ErrorCode::MalformedRow, path.string() + ": unrecognized line " + std::to_string(i + 1));
    }
  }
  if (!primary_head) throw Error(ErrorCode::MalformedRow, path.string() + ": missing primary head");
  auto restore = [&](nn::HeadKind head, nn::ParamStore params) {
    nn::Network net = nn::make_network(cp.config.network_spec(head), 0);
    if (!net.params.same_shape(params)) {
      throw Error(ErrorCode::ShapeMismatch, path.string() + ": parameters do not match the configured network");
    }
    net.params = std::move(params);
    return net;
  };
  cp.primary = restore(*primary_head, std::move(primary_params));
  if (secondary_head) cp.secondary = restore(*secondary_head, std::move(secondary_params));
  return cp;
}

std::vector<double> greedy_positions(const PolicyCheckpoint& policy, std::span<const StateWindow> states) {
  std::vector<double> out(states.size(), 0.0);
  if (states.empty()) return out;
  const nn::Matrix head = nn::evaluate(policy.primary, states);
  for (std::size_t j = 0; j < states.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    if (policy.algo == Algo::A2C) {
      out[j] = std::tanh(head(0, col));
    } else {
      const double* q = head.data() + col * head.rows();
      out[j] = env::discrete_position(argmax(std::span<const double>(q, static_cast<std::size_t>(head.rows()))));
    }
  }
  return out;
}

void write_curve_csv(std::span<const CurveRow> rows, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "step,loss,mean_episode_reward,epsilon\n";
  for (const auto& r : rows) {
    os << r.step << ',' << csv::format_double(r.loss) << ',' << csv::format_double(r.mean_episode_reward) << ','
       << csv::format_double(r.epsilon) << '\n';
  }
  csv::write_text(path, os.str());
}

std::optional<std::pair<std::size_t, std::size_t>> decision_span(const ContractData& contract,
                                                                 const data::DateRange& range) {
  const auto& dates = contract.series.dates;
  if (dates.size() < 2) return std::nullopt;
  const std::size_t first =
      std::max(indicators::first_state_index(contract.features.matrix), contract.series.lower_index(range.start));
  // The reward of the action at i is realized at i + 1, which must be in range.
  const auto last_realized = contract.series.upper_index(range.end);
  if (!last_realized || *last_realized == 0) return std::nullopt;
  const std::size_t last = std::min(*last_realized - 1, dates.size() - 2);
  if (first > last) return std::nullopt;
  return std::pair{first, last};
}

namespace {

struct EpisodeSampler {
  struct Slot {
    std::size_t contract;
    std::size_t first;
    std::size_t last;
  };
  std::vector<Slot> slots;
  std::size_t episode_len;

  EpisodeSampler(std::span<const ContractData> contracts, const data::DateRange& range, std::size_t len)
      : episode_len(len) {
    for (std::size_t c = 0; c < contracts.size(); ++c) {
      if (auto s = decision_span(contracts[c], range)) slots.push_back({c, s->first, s->second});
    }
    if (slots.empty()) {
      throw Error(ErrorCode::InsufficientHistory, "no contract has a tradable day inside the training range");
    }
  }

  // (contract, start, length) with length capped by the contract's range.
  std::tuple<std::size_t, std::size_t, std::size_t> draw(std::mt19937_64& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, slots.size() - 1);
    const Slot& s = slots[pick(rng)];
    const std::size_t available = s.last - s.first + 1;
    const std::size_t len = std::min(episode_len, available);
    std::uniform_int_distribution<std::size_t> start(s.first, s.last + 1 - len);
    return {s.contract, start(rng), len};
  }
};

struct CurveLogger {
  std::vector<CurveRow> rows;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  double episode_sum = 0.0;
  std::size_t episode_count = 0;

  void add_loss(double l) {
    loss_sum += l;
    ++loss_count;
  }
  void add_episode(double total_reward) {
    episode_sum += total_reward;
    ++episode_count;
  }
  void flush(std::size_t step, double epsilon) {
    if (loss_count == 0 && episode_count == 0) return;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rows.push_back({step, loss_count ? loss_sum / static_cast<double>(loss_count) : nan,
                    episode_count ? episode_sum / static_cast<double>(episode_count) : nan, epsilon});
    loss_sum = episode_sum = 0.0;
    loss_count = episode_count = 0;
  }
};

std::vector<std::unique_ptr<env::TradingEnv>> make_envs(std::span<const ContractData> contracts,
                                                        const env::RewardConfig& reward, env::ActionMode mode) {
  std::vector<std::unique_ptr<env::TradingEnv>> envs;
  for (const auto& c : contracts) envs.push_back(std::make_unique<env::TradingEnv>(c.series, c.features, reward, mode));
  return envs;
}

void train_dqn(std::span<const ContractData> contracts, const EpisodeSampler& sampler, const AgentConfig& cfg,
               const env::RewardConfig& reward, std::mt19937_64& rng, PolicyCheckpoint& cp, CurveLogger& log) {
  auto envs = make_envs(contracts, reward, env::ActionMode::Discrete3);
  nn::Network& online = cp.primary;
  nn::Network& target = *cp.secondary;
  nn::AdamState adam = nn::AdamState::for_params(online.params);
  ReplayBuffer buffer(cfg.memory_size);
  const std::size_t warmup = cfg.batch_size * 4;

  env::TradingEnv* current = nullptr;
  StateWindow state;
  double episode_reward = 0.0;
  for (std::size_t step = 0; step < cfg.step_budget; ++step) {
    if (current == nullptr || current->done()) {
      const auto [c, start, len] = sampler.draw(rng);
      current = envs[c].get();
      state = current->reset(start, len);
      episode_reward = 0.0;
    }
    const double eps = epsilon_at(step, cfg);
    const int action = dqn_select(online, state, eps, rng);
    const env::StepResult r = current->step(action);
    buffer.push({state, action, r.reward, r.next_state, r.done});
    episode_reward += r.reward;
    state = r.next_state;

    if (buffer.size() >= warmup && (step + 1) % cfg.train_every == 0) {
      const std::vector<Transition> batch = buffer.sample(cfg.batch_size, rng);
      log.add_loss(dqn_train_step(online, target, batch, cfg, adam));
      ++cp.updates;
    }
    target_sync(online, target, step + 1, cfg.target_sync_tau);
    ++cp.env_steps;
    if (r.done) {
      log.add_episode(episode_reward);
      log.flush(step + 1, eps);
    }
  }
}

void train_pg(std::span<const ContractData> contracts, const EpisodeSampler& sampler, const AgentConfig& cfg,
              const env::RewardConfig& reward, std::mt19937_64& rng, PolicyCheckpoint& cp, CurveLogger& log) {
  auto envs = make_envs(contracts, reward, env::ActionMode::Discrete3);
  nn::Network& actor = cp.primary;
  nn::AdamState adam = nn::AdamState::for_params(actor.params);
  std::size_t step = 0;
  while (step < cfg.step_budget) {
    auto [c, start, len] = sampler.draw(rng);
    len = std::min(len, cfg.step_budget - step);
    env::TradingEnv& e = *envs[c];
    e.reset(start, len);

    Episode ep;
    ep.states.reserve(len);
    for (std::size_t k = 0; k < len; ++k) ep.states.push_back(indicators::state_at(e.features().matrix, start + k));
    const nn::Matrix logits = nn::evaluate(actor, ep.states);
    for (std::size_t k = 0; k < len; ++k) {
      const nn::Matrix::ConstColXpr col = logits.col(static_cast<Eigen::Index>(k));
      const Eigen::VectorXd p = (col.array() - col.maxCoeff()).exp();
      std::discrete_distribution<int> dist(p.data(), p.data() + p.size());
      const int a = dist(rng);
      ep.actions.push_back(a);
      ep.rewards.push_back(e.step(a).reward);
    }
    ep.complete = true;
    log.add_loss(pg_update(actor, ep, cfg, adam));
    log.add_episode(std::accumulate(ep.rewards.begin(), ep.rewards.end(), 0.0));
    ++cp.updates;
    step += len;
    cp.env_steps = step;
    log.flush(step, 0.0);
  }
}

void train_a2c(std::span<const ContractData> contracts, const EpisodeSampler& sampler, const AgentConfig& cfg,
               const env::RewardConfig& reward, std::mt19937_64& rng, PolicyCheckpoint& cp, CurveLogger& log) {
  nn::Network& actor = cp.primary;
  nn::Network& critic = *cp.secondary;
  nn::AdamState actor_adam = nn::AdamState::for_params(actor.params);
  nn::AdamState critic_adam = nn::AdamState::for_params(critic.params);

  // Each worker owns its own environment over the shared features.
  std::vector<std::unique_ptr<env::TradingEnv>> workers;
  std::vector<StateWindow> states(cfg.n_envs);
  std::vector<double> episode_reward(cfg.n_envs, 0.0);
  auto restart = [&](std::size_t w) {
    const auto [c, start, len] = sampler.draw(rng);
    workers[w] = std::make_unique<env::TradingEnv>(contracts[c].series, contracts[c].features, reward,
                                                   env::ActionMode::Continuous);
    states[w] = workers[w]->reset(start, len);
    episode_reward[w] = 0.0;
  };
  workers.resize(cfg.n_envs);
  for (std::size_t w = 0; w < cfg.n_envs; ++w) restart(w);

  const std::size_t rollout = cfg.rollout_len();
  const std::size_t per_update = rollout * cfg.n_envs;
  const std::size_t log_std_index = actor.params.index_of("head.log_std");
  std::size_t step = 0;
  while (step + per_update <= cfg.step_budget) {
    A2CBatch batch;
    batch.n_envs = cfg.n_envs;
    for (std::size_t k = 0; k < rollout; ++k) {
      const nn::Matrix means = nn::evaluate(actor, states);
      const double log_std = actor.params[log_std_index].values[0];
      for (std::size_t w = 0; w < cfg.n_envs; ++w) {
        const double raw = a2c_sample(means(0, static_cast<Eigen::Index>(w)), log_std, rng);
        const env::StepResult r = workers[w]->step(raw);
        batch.states.push_back(states[w]);
        batch.actions.push_back(raw);
        batch.rewards.push_back(r.reward);
        batch.next_states.push_back(r.next_state);
        batch.dones.push_back(r.done);
        episode_reward[w] += r.reward;
        if (r.done) {
          log.add_episode(episode_reward[w]);
          restart(w);
        } else {
          states[w] = r.next_state;
        }
      }
    }
    const A2CLosses losses = a2c_update(actor, critic, batch, cfg, actor_adam, critic_adam);
    log.add_loss(losses.actor + losses.critic);
    ++cp.updates;
    step += per_update;
    cp.env_steps = step;
    log.flush(step, 0.0);
  }
}

}  // namespace

TrainResult train(std::span<const ContractData> contracts, const data::DateRange& train_range,
                  const AgentConfig& cfg, const env::RewardConfig& reward, std::uint64_t seed,
                  std::string asset_class) {
  cfg.validate();
  env::RewardConfig train_reward = reward;
  train_reward.bp = cfg.bp_train;
  train_reward.validate();
  const EpisodeSampler sampler(contracts, train_range, cfg.episode_len);

  std::mt19937_64 rng(seed);
  PolicyCheckpoint cp;
  cp.algo = cfg.algo;
  cp.config = cfg;
  cp.asset_class = std::move(asset_class);
  cp.seed = seed;
  cp.train_range = train_range;
  switch (cfg.algo) {
    case Algo::DQN:
      cp.primary = nn::make_network(cfg.network_spec(q_head(cfg)), rng());
      cp.secondary = cp.primary;
      break;
    case Algo::PG:
      cp.primary = nn::make_network(cfg.network_spec(nn::HeadKind::SoftmaxPolicy), rng());
      break;
    case Algo::A2C:
      cp.primary = nn::make_network(cfg.network_spec(nn::HeadKind::GaussianPolicy), rng());
      cp.secondary = nn::make_network(cfg.network_spec(nn::HeadKind::Value), rng());
      break;
  }

  CurveLogger log;
  switch (cfg.algo) {
    case Algo::DQN: train_dqn(contracts, sampler, cfg, train_reward, rng, cp, log); break;
    case Algo::PG: train_pg(contracts, sampler, cfg, train_reward, rng, cp, log); break;
    case Algo::A2C: train_a2c(contracts, sampler, cfg, train_reward, rng, cp, log); break;
  }
  return {std::move(cp), std::move(log.rows)};
}

}  // namespace deeptrade::agents
