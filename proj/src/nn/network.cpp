#include "deeptrade/nn/network.hpp"

#include <cmath>
#include <random>
#include <string>

#include "deeptrade/error.hpp"

namespace deeptrade::nn {

std::string_view to_string(HeadKind k) {
  switch (k) {
    case HeadKind::DuelingQ: return "dueling_q";
    case HeadKind::PlainQ: return "plain_q";
    case HeadKind::SoftmaxPolicy: return "softmax_policy";
    case HeadKind::Value: return "value";
    case HeadKind::GaussianPolicy: return "gaussian_policy";
  }
  return "dueling_q";
}

std::optional<HeadKind> parse_head_kind(std::string_view text) {
  for (HeadKind k : {HeadKind::DuelingQ, HeadKind::PlainQ, HeadKind::SoftmaxPolicy, HeadKind::Value,
                     HeadKind::GaussianPolicy}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::size_t NetworkSpec::head_outputs() const {
  switch (head) {
    case HeadKind::DuelingQ: return 1 + kDiscreteActions;
    case HeadKind::PlainQ:
    case HeadKind::SoftmaxPolicy: return kDiscreteActions;
    case HeadKind::Value:
    case HeadKind::GaussianPolicy: return 1;
  }
  return 1;
}

ParamStore init_params(const NetworkSpec& spec, std::uint64_t seed) {
  if (spec.feature_count < 1 || spec.hidden1 < 1 || spec.hidden2 < 1 || spec.head_hidden < 1) {
    throw Error(ErrorCode::BadSpec, "network dimensions must be positive");
  }
  ParamStore p;
  p.add("lstm1.W", 4 * spec.hidden1, spec.feature_count);
  p.add("lstm1.U", 4 * spec.hidden1, spec.hidden1);
  p.add("lstm1.b", 4 * spec.hidden1, 1);
  p.add("lstm2.W", 4 * spec.hidden2, spec.hidden1);
  p.add("lstm2.U", 4 * spec.hidden2, spec.hidden2);
  p.add("lstm2.b", 4 * spec.hidden2, 1);
  p.add("head.W1", spec.head_hidden, spec.hidden2);
  p.add("head.b1", spec.head_hidden, 1);
  p.add("head.W2", spec.head_outputs(), spec.head_hidden);
  p.add("head.b2", spec.head_outputs(), 1);
  if (spec.head == HeadKind::GaussianPolicy) p.add("head.log_std", 1, 1, kInitialLogStd);

  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < p.array_count(); ++i) {
    ParamArray& a = p[i];
    const bool is_weight = a.name.find(".W") != std::string::npos || a.name.find(".U") != std::string::npos;
    if (!is_weight) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(a.cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : a.values) v = dist(rng);
  }
  for (auto [name, hidden] : {std::pair{"lstm1.b", spec.hidden1}, std::pair{"lstm2.b", spec.hidden2}}) {
    ParamArray& b = p.get(name);
    for (std::size_t r = hidden; r < 2 * hidden; ++r) b.values[r] = 1.0;
  }
  return p;
}

Matrix window_inputs(std::span<const indicators::StateWindow> batch, std::size_t timestep, std::size_t features) {
  Matrix x(static_cast<Eigen::Index>(features), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const double* row = batch[j].values.data() + timestep * features;
    for (std::size_t f = 0; f < features; ++f) x(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(j)) = row[f];
  }
  return x;
}

HeadOutputs lstm_forward(Tape& tape, const Network& net, std::span<const indicators::StateWindow> batch) {
  const NetworkSpec& spec = net.spec;
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "forward on an empty batch");
  const std::size_t steps = batch[0].values.size() / spec.feature_count;
  for (const auto& w : batch) {
    if (w.values.size() != steps * spec.feature_count || w.values.size() % spec.feature_count != 0) {
      throw Error(ErrorCode::ShapeMismatch, "window shape does not match the network feature count");
    }
    for (double v : w.values) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "non-finite value in state window");
    }
  }

  const ParamStore& p = net.params;
  const Var w1 = tape.parameter(p, p.index_of("lstm1.W"));
  const Var u1 = tape.parameter(p, p.index_of("lstm1.U"));
  const Var b1 = tape.parameter(p, p.index_of("lstm1.b"));
  const Var w2 = tape.parameter(p, p.index_of("lstm2.W"));
  const Var u2 = tape.parameter(p, p.index_of("lstm2.U"));
  const Var b2 = tape.parameter(p, p.index_of("lstm2.b"));

  const auto batch_size = static_cast<Eigen::Index>(batch.size());
  const auto h1 = static_cast<Eigen::Index>(spec.hidden1);
  const auto h2 = static_cast<Eigen::Index>(spec.hidden2);
  Var s1 = tape.constant(Matrix::Zero(2 * h1, batch_size));
  Var s2 = tape.constant(Matrix::Zero(2 * h2, batch_size));
  for (std::size_t t = 0; t < steps; ++t) {
    const Var x = tape.constant(window_inputs(batch, t, spec.feature_count));
    s1 = tape.lstm_cell(x, s1, w1, u1, b1);
    s2 = tape.lstm_cell(tape.slice_rows(s1, 0, h1), s2, w2, u2, b2);
  }
  const Var last = tape.slice_rows(s2, 0, h2);

  const Var hw1 = tape.parameter(p, p.index_of("head.W1"));
  const Var hb1 = tape.parameter(p, p.index_of("head.b1"));
  const Var hw2 = tape.parameter(p, p.index_of("head.W2"));
  const Var hb2 = tape.parameter(p, p.index_of("head.b2"));
  const Var hidden = tape.leaky_relu(tape.add_bias(tape.matmul(hw1, last), hb1), kLeakySlope);
  const Var raw = tape.add_bias(tape.matmul(hw2, hidden), hb2);

  HeadOutputs out;
  switch (spec.head) {
    case HeadKind::DuelingQ:
      out.out = tape.dueling(tape.slice_rows(raw, 0, 1), tape.slice_rows(raw, 1, kDiscreteActions));
      break;
    case HeadKind::PlainQ:
    case HeadKind::SoftmaxPolicy:
    case HeadKind::Value:
      out.out = raw;
      break;
    case HeadKind::GaussianPolicy:
      out.out = raw;
      out.log_std = tape.parameter(p, p.index_of("head.log_std"));
      break;
  }
  return out;
}

Matrix evaluate(const Network& net, std::span<const indicators::StateWindow> batch) {
  constexpr std::size_t kChunk = 256;
  Matrix result(static_cast<Eigen::Index>(net.spec.head == HeadKind::DuelingQ ? kDiscreteActions
                                                                              : net.spec.head_outputs()),
                static_cast<Eigen::Index>(batch.size()));
  Tape tape;
  for (std::size_t start = 0; start < batch.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, batch.size() - start);
    tape.clear();
    const HeadOutputs h = lstm_forward(tape, net, batch.subspan(start, n));
    result.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) = tape.value(h.out);
  }
  return result;
}

}  // namespace deeptrade::nn
