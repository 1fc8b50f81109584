#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "deeptrade/nn/params.hpp"

namespace deeptrade::nn {

// Column-major; by convention columns index the batch.
using Matrix = Eigen::MatrixXd;

// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

// Reverse-mode gradient record over matrix-valued nodes. Nodes are appended in
// evaluation order, so the record is a topological order and backward() walks
// it in reverse. A tape is single-use per loss: record, backward, read
// gradients, clear().
class Tape {
 public:
  Var constant(Matrix value);
  // Leaf holding a copy of params[index]; its adjoint is collected by
  // accumulate_gradients().
  Var parameter(const ParamStore& params, std::size_t index);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var add_bias(Var a, Var bias);             // bias is rows x 1, broadcast over columns
  Var broadcast(Var scalar, Eigen::Index rows, Eigen::Index cols);  // 1x1 -> rows x cols
  Var weight(Var a, const Matrix& w);        // elementwise product with a constant
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var exp(Var a);
  Var square(Var a);
  Var leaky_relu(Var a, double negative_slope);
  Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
  Var sum(Var a);   // -> 1x1
  Var mean(Var a);  // -> 1x1
  Var log_softmax(Var logits);                          // per column
  Var pick(Var a, std::span<const int> row_per_column);  // -> 1 x cols
  // Q = V + A - mean_rows(A), V is 1 x B, A is n x B.
  Var dueling(Var value, Var advantage);
  // log N(actions; mean, exp(log_std)^2) per column; mean 1 x B, log_std 1x1.
  Var gaussian_log_prob(Var mean, Var log_std, const Matrix& actions);
  // One LSTM step. state is [h; c] (2H x B); W is 4H x in, U is 4H x H,
  // b is 4H x 1 with gate blocks ordered input, forget, candidate, output.
  // Returns the next [h; c].
  Var lstm_cell(Var x, Var state, Var w, Var u, Var b);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value(0, 0); }
  // Adjoint after backward(); a zero matrix for nodes not on a path to the loss.
  Matrix grad(Var v) const;

  // Seeds d(loss)/d(loss) = 1 and propagates in reverse creation order.
  // Throws Error{TapeEmpty} if nothing was recorded, Error{ShapeMismatch} if
  // the loss is not 1x1.
  void backward(Var loss);

  // Adds parameter-leaf adjoints into grads (same layout as the ParamStore the
  // leaves were created from).
  void accumulate_gradients(ParamStore& grads) const;

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // allocated when first reached during backward
    bool requires_grad = false;
    std::ptrdiff_t param_index = -1;
    std::function<void(Tape&, std::size_t)> backprop;
  };

  Var push(Matrix value, bool requires_grad, std::function<void(Tape&, std::size_t)> backprop = {});
  bool needs(Var v) const { return nodes_[v.id].requires_grad; }
  // Adjoint buffer of an input, or nullptr when the input is a constant.
  Matrix* adj(Var v);
  const Matrix& adjoint_of(std::size_t id) const { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

// Numerically stable elementwise helpers, finite for any finite input.
double stable_sigmoid(double x);
double leaky_relu(double x, double negative_slope);

}  // namespace deeptrade::nn
