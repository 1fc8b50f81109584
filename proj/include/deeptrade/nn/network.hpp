#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "deeptrade/indicators.hpp"
#include "deeptrade/nn/params.hpp"
#include "deeptrade/nn/tape.hpp"

namespace deeptrade::nn {

enum class HeadKind {
  DuelingQ,        // V(s) + A(s,a) - mean_a A(s,a) over three actions
  PlainQ,          // three Q-values
  SoftmaxPolicy,   // three action logits
  Value,           // scalar state value
  GaussianPolicy,  // pre-squash mean plus a state-independent log-std
};

std::string_view to_string(HeadKind k);
std::optional<HeadKind> parse_head_kind(std::string_view text);

inline constexpr int kDiscreteActions = 3;
inline constexpr double kLeakySlope = 0.01;
inline constexpr double kInitialLogStd = -0.5;

struct NetworkSpec {
  std::size_t feature_count = indicators::kFeatureCount;
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 32;
  std::size_t head_hidden = 32;
  HeadKind head = HeadKind::DuelingQ;

  std::size_t head_outputs() const;
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Parameter layout:
//   lstm1.W (4*h1 x F)   lstm1.U (4*h1 x h1)   lstm1.b (4*h1 x 1)
//   lstm2.W (4*h2 x h1)  lstm2.U (4*h2 x h2)   lstm2.b (4*h2 x 1)
//   head.W1 (hh x h2)    head.b1 (hh x 1)
//   head.W2 (out x hh)   head.b2 (out x 1)     [head.log_std (1 x 1)]
// Weights ~ U(-1/sqrt(cols), 1/sqrt(cols)); biases 0 except the forget-gate
// block (rows h..2h) which starts at 1; log_std starts at -0.5.
ParamStore init_params(const NetworkSpec& spec, std::uint64_t seed);

struct Network {
  NetworkSpec spec;
  ParamStore params;
};

inline Network make_network(const NetworkSpec& spec, std::uint64_t seed) { return {spec, init_params(spec, seed)}; }

struct HeadOutputs {
  // DuelingQ/PlainQ: 3 x B Q-values. SoftmaxPolicy: 3 x B logits.
  // Value: 1 x B. GaussianPolicy: 1 x B pre-squash mean.
  Var out;
  std::optional<Var> log_std;  // GaussianPolicy only, 1 x 1
};

// Unrolls both LSTM layers over every window (batched by column), then
// h2 -> dense -> Leaky-ReLU -> dense head. Throws Error{NonFiniteInput} on a
// non-finite window value.
HeadOutputs lstm_forward(Tape& tape, const Network& net, std::span<const indicators::StateWindow> batch);

// Forward pass on a scratch tape, returning the head output matrix.
Matrix evaluate(const Network& net, std::span<const indicators::StateWindow> batch);

// Inputs of every window at one timestep, F x B.
Matrix window_inputs(std::span<const indicators::StateWindow> batch, std::size_t timestep, std::size_t features);

}  // namespace deeptrade::nn
