#include "deeptrade/nn/tape.hpp"

#include <cmath>
#include <numbers>

#include "deeptrade/error.hpp"

namespace deeptrade::nn {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double leaky_relu(double x, double negative_slope) { return x >= 0.0 ? x : negative_slope * x; }

namespace {

// Vectorized forms built on Eigen's packet exp. exp overflows to +inf for very
// negative inputs, which still yields the correct limits 0 and -1.
template <typename Derived>
Matrix sigmoid_of(const Eigen::MatrixBase<Derived>& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

template <typename Derived>
Matrix tanh_of(const Eigen::MatrixBase<Derived>& z) {
  return (2.0 / (1.0 + (-2.0 * z.array()).exp()) - 1.0).matrix();
}

}  // namespace

Var Tape::push(Matrix value, bool requires_grad, std::function<void(Tape&, std::size_t)> backprop) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Matrix* Tape::adj(Var v) {
  Node& n = nodes_[v.id];
  if (!n.requires_grad) return nullptr;
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return &n.grad;
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::constant(Matrix value) { return push(std::move(value), false); }

Var Tape::parameter(const ParamStore& params, std::size_t index) {
  const ParamArray& a = params[index];
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Matrix value = Eigen::Map<const RowMajor>(a.values.data(), static_cast<Eigen::Index>(a.rows),
                                            static_cast<Eigen::Index>(a.cols));
  Var v = push(std::move(value), true);
  nodes_[v.id].param_index = static_cast<std::ptrdiff_t>(index);
  return v;
}

Var Tape::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) throw Error(ErrorCode::ShapeMismatch, "matmul inner dimensions");
  Matrix out = value(a) * value(b);
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint_of(self);
    if (Matrix* ga = t.adj(a)) ga->noalias() += g * t.value(b).transpose();
    if (Matrix* gb = t.adj(b)) gb->noalias() += t.value(a).transpose() * g;
  });
}

Var Tape::add(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw Error(ErrorCode::ShapeMismatch, "add shapes differ");
  }
  Matrix out = value(a) + value(b);
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint_of(self);
    if (Matrix* ga = t.adj(a)) *ga += g;
    if (Matrix* gb = t.adj(b)) *gb += g;
  });
}

Var Tape::sub(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw Error(ErrorCode::ShapeMismatch, "sub shapes differ");
  }
  Matrix out = value(a) - value(b);
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint_of(self);
    if (Matrix* ga = t.adj(a)) *ga += g;
    if (Matrix* gb = t.adj(b)) *gb -= g;
  });
}

Var Tape::mul(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw Error(ErrorCode::ShapeMismatch, "mul shapes differ");
  }
  Matrix out = value(a).cwiseProduct(value(b));
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint_of(self);
    if (Matrix* ga = t.adj(a)) *ga += g.cwiseProduct(t.value(b));
    if (Matrix* gb = t.adj(b)) *gb += g.cwiseProduct(t.value(a));
  });
}

Var Tape::scale(Var a, double s) {
  Matrix out = value(a) * s;
  return push(std::move(out), needs(a), [a, s](Tape& t, std::size_t self) {
    if (Matrix* ga = t.adj(a)) *ga += t.adjoint_of(self) * s;
  });
}

Var Tape::add_bias(Var a, Var bias) {
  if (value(bias).cols() != 1 || value(bias).rows() != value(a).rows()) {
    throw Error(ErrorCode::ShapeMismatch, "bias must be rows x 1");
  }
  Matrix out = value(a).colwise() + value(bias).col(0);
  return push(std::move(out), needs(a) || needs(bias), [a, bias](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint_of(self);
    if (Matrix* ga = t.adj(a)) *ga += g;
    if (Matrix* gb = t.adj(bias)) *gb += g.rowwise().sum();
  });
}

Var Tape::broadcast(Var s, Eigen::Index rows, Eigen::Index cols) {
  if (value(s).size() != 1) throw Error(ErrorCode::ShapeMismatch, "broadcast needs a 1x1 input");
  Matrix out = Matrix::Constant(rows, cols, value(s)(0, 0));
  return push(std::move(out), needs(s), [s](Tape& t, std::size_t self) {
    if (Matrix* gs = t.adj(s)) (*gs)(0, 0) += t.adjoint_of(self).sum();
  });
}

Var Tape::weight(Var a, const Matrix& w) {
  if (value(a).rows() != w.rows() || value(a).cols() != w.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "weight shape differs");
  }
  Matrix out = value(a).cwiseProduct(w);
  return push(std::move(out), needs(a), [a, w](Tape& t, std::size_t self) {
    if (Matrix* ga = t.adj(a)) *ga += t.adjoint_of(self).cwiseProduct(w);
  });
}

Var Tape::sigmoid(Var a) {
  Matrix out = sigmoid_of(value(a));
  return push(std::move(out), needs(a), [a](Tape& t, std::size_t self) {
    const Matrix& y = t.value(Var{self});
    if (Matrix* ga = t.adj(a)) {
      *ga += t.adjoint_of(self).cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
    }
  });
}

Var Tape::tanh(Var a) {
  Matrix out = tanh_of(value(a));
  return push(std::move(out), needs(a), [a](Tape& t, std::size_t self) {
    const Matrix& y = t.value(Var{self});
    if (Matrix* ga = t.adj(a)) {
      *ga += t.adjoint_of(self).cwiseProduct((1.0 - y.array().square()).matrix());
    }
  });
}

Var Tape::exp(Var a) {
  Matrix out = value(a).array().exp().matrix();
  return push(std::move(out), needs(a), [a](Tape& t, std::size_t self) {
    if (Matrix* ga = t.adj(a)) *ga += t.adjoint_of(self).cwiseProduct(t.value(Var{self}));
  });
}

Var Tape::square(Var a) {
  Matrix out = value(a).array().square().matrix();
  return push(std::move(out), needs(a), [a](Tape& t, std::size_t self) {
    if (Matrix* ga = t.adj(a)) *ga += 2.0 * t.adjoint_of(self).cwiseProduct(t.value(a));
  });
}

Var Tape::leaky_relu(Var a, double negative_slope) {
  Matrix out = value(a).unaryExpr([negative_slope](double x) { return nn::leaky_relu(x, negative_slope); });
  return push(std::move(out), needs(a), [a, negative_slope](Tape& t, std::size_t self) {
    if (Matrix* ga = t.adj(a)) {
      const Matrix slope = t.value(a).unaryExpr([negative_slope](double x) { return x >= 0.0 ? 1.0 : negative_slope; });
      *ga += t.adjoint_of(self).cwiseProduct(slope);
    }
  });
}

Var Tape::slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > value(a).rows()) {
    throw Error(ErrorCode::ShapeMismatch, "row slice out of range");
  }
  Matrix out = value(a).middleRows(start, count);
  return push(std::move(out), needs(a), [a, start, count](Tape& t, std::size_t self) {
    if (Matrix* ga = t.adj(a)) ga->middleRows(start, count) += t.adjoint_of(self);
  });
}

Var Tape::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  return push(std::move(out), needs(a), [a](Tape& t, std::size_t self) {
    if (Matrix* ga = t.adj(a)) ga->array() += t.adjoint_of(self)(0, 0);
  });
}

Var Tape::mean(Var a) {
  const double n = static_cast<double>(value(a).size());
  if (n == 0) throw Error(ErrorCode::ShapeMismatch, "mean of empty matrix");
  Matrix out(1, 1);
  out(0, 0) = value(a).sum() / n;
  return push(std::move(out), needs(a), [a, n](Tape& t, std::size_t self) {
    if (Matrix* ga = t.adj(a)) ga->array() += t.adjoint_of(self)(0, 0) / n;
  });
}

Var Tape::log_softmax(Var logits) {
  const Matrix& x = value(logits);
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double m = x.col(j).maxCoeff();
    const double lse = m + std::log((x.col(j).array() - m).exp().sum());
    out.col(j) = x.col(j).array() - lse;
  }
  return push(std::move(out), needs(logits), [logits](Tape& t, std::size_t self) {
    if (Matrix* ga = t.adj(logits)) {
      const Matrix& g = t.adjoint_of(self);
      const Matrix p = t.value(Var{self}).array().exp().matrix();
      *ga += g - p * g.colwise().sum().asDiagonal();
    }
  });
}

Var Tape::pick(Var a, std::span<const int> row_per_column) {
  const Matrix& x = value(a);
  if (static_cast<Eigen::Index>(row_per_column.size()) != x.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "pick needs one row index per column");
  }
  std::vector<int> rows(row_per_column.begin(), row_per_column.end());
  Matrix out(1, x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (rows[j] < 0 || rows[j] >= x.rows()) throw Error(ErrorCode::OutOfRange, "pick row out of range");
    out(0, j) = x(rows[j], j);
  }
  return push(std::move(out), needs(a), [a, rows = std::move(rows)](Tape& t, std::size_t self) {
    if (Matrix* ga = t.adj(a)) {
      const Matrix& g = t.adjoint_of(self);
      for (Eigen::Index j = 0; j < g.cols(); ++j) (*ga)(rows[static_cast<std::size_t>(j)], j) += g(0, j);
    }
  });
}

Var Tape::dueling(Var v, Var adv) {
  const Matrix& vv = value(v);
  const Matrix& aa = value(adv);
  if (vv.rows() != 1 || vv.cols() != aa.cols()) throw Error(ErrorCode::ShapeMismatch, "dueling shapes");
  const Eigen::RowVectorXd shift = vv.row(0) - aa.colwise().mean();
  Matrix out = aa.rowwise() + shift;
  return push(std::move(out), needs(v) || needs(adv), [v, adv](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint_of(self);
    const Eigen::RowVectorXd col_sum = g.colwise().sum();
    if (Matrix* gv = t.adj(v)) gv->row(0) += col_sum;
    if (Matrix* ga = t.adj(adv)) {
      const double n = static_cast<double>(g.rows());
      *ga += g;
      ga->rowwise() -= col_sum / n;
    }
  });
}

Var Tape::gaussian_log_prob(Var mean, Var log_std, const Matrix& actions) {
  const Matrix& mu = value(mean);
  if (mu.rows() != 1 || actions.rows() != 1 || actions.cols() != mu.cols() || value(log_std).size() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "gaussian_log_prob shapes");
  }
  const double ls = value(log_std)(0, 0);
  const double inv_var = std::exp(-2.0 * ls);
  const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
  Matrix out = (-0.5 * (actions - mu).array().square() * inv_var - ls - log_norm).matrix();
  return push(std::move(out), needs(mean) || needs(log_std),
              [mean, log_std, actions, inv_var](Tape& t, std::size_t self) {
                const Matrix& g = t.adjoint_of(self);
                const Matrix diff = actions - t.value(mean);
                if (Matrix* gm = t.adj(mean)) *gm += g.cwiseProduct(diff) * inv_var;
                if (Matrix* gs = t.adj(log_std)) {
                  (*gs)(0, 0) += (g.array() * (diff.array().square() * inv_var - 1.0)).sum();
                }
              });
}

Var Tape::lstm_cell(Var x, Var state, Var w, Var u, Var b) {
  const Matrix& xv = value(x);
  const Matrix& sv = value(state);
  const Matrix& wv = value(w);
  const Matrix& uv = value(u);
  const Eigen::Index hidden = uv.cols();
  const Eigen::Index batch = xv.cols();
  if (wv.rows() != 4 * hidden || uv.rows() != 4 * hidden || wv.cols() != xv.rows() ||
      sv.rows() != 2 * hidden || sv.cols() != batch || value(b).rows() != 4 * hidden || value(b).cols() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "lstm_cell shapes");
  }

  // Activated gates [i; f; g; o], kept for the backward pass.
  Matrix gates(4 * hidden, batch);
  gates.noalias() = wv * xv;
  gates.noalias() += uv * sv.topRows(hidden);
  gates.colwise() += value(b).col(0);
  gates.topRows(2 * hidden) = sigmoid_of(gates.topRows(2 * hidden));
  gates.middleRows(2 * hidden, hidden) = tanh_of(gates.middleRows(2 * hidden, hidden));
  gates.bottomRows(hidden) = sigmoid_of(gates.bottomRows(hidden));

  Matrix out(2 * hidden, batch);
  auto c = out.bottomRows(hidden);
  c = gates.middleRows(hidden, hidden).cwiseProduct(sv.bottomRows(hidden)) +
      gates.topRows(hidden).cwiseProduct(gates.middleRows(2 * hidden, hidden));
  Matrix tanh_c = tanh_of(c);
  out.topRows(hidden) = gates.bottomRows(hidden).cwiseProduct(tanh_c);

  const bool rg = needs(x) || needs(state) || needs(w) || needs(u) || needs(b);
  return push(std::move(out), rg,
              [x, state, w, u, b, hidden, gates = std::move(gates), tanh_c = std::move(tanh_c)](Tape& t,
                                                                                                std::size_t self) {
                const Matrix& g = t.adjoint_of(self);
                const Matrix& prev = t.value(state);
                const auto dh = g.topRows(hidden);
                const auto i_g = gates.topRows(hidden).array();
                const auto f_g = gates.middleRows(hidden, hidden).array();
                const auto c_g = gates.middleRows(2 * hidden, hidden).array();
                const auto o_g = gates.bottomRows(hidden).array();
                const auto tc = tanh_c.array();

                const Eigen::ArrayXXd dc =
                    g.bottomRows(hidden).array() + dh.array() * o_g * (1.0 - tc.square());
                Matrix dz(4 * hidden, g.cols());
                dz.topRows(hidden) = (dc * c_g * i_g * (1.0 - i_g)).matrix();
                dz.middleRows(hidden, hidden) = (dc * prev.bottomRows(hidden).array() * f_g * (1.0 - f_g)).matrix();
                dz.middleRows(2 * hidden, hidden) = (dc * i_g * (1.0 - c_g.square())).matrix();
                dz.bottomRows(hidden) = (dh.array() * tc * o_g * (1.0 - o_g)).matrix();

                if (Matrix* gw = t.adj(w)) gw->noalias() += dz * t.value(x).transpose();
                if (Matrix* gu = t.adj(u)) gu->noalias() += dz * prev.topRows(hidden).transpose();
                if (Matrix* gb = t.adj(b)) *gb += dz.rowwise().sum();
                if (Matrix* gx = t.adj(x)) gx->noalias() += t.value(w).transpose() * dz;
                if (Matrix* gs = t.adj(state)) {
                  gs->topRows(hidden).noalias() += t.value(u).transpose() * dz;
                  gs->bottomRows(hidden) += (dc * f_g).matrix();
                }
              });
}

void Tape::backward(Var loss) {
  if (nodes_.empty()) throw Error(ErrorCode::TapeEmpty, "backward on an empty tape");
  if (value(loss).size() != 1) throw Error(ErrorCode::ShapeMismatch, "loss must be 1x1");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[loss.id].requires_grad) return;
  nodes_[loss.id].grad = Matrix::Constant(1, 1, 1.0);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0 || !n.backprop) continue;
    n.backprop(*this, i);
  }
}

void Tape::accumulate_gradients(ParamStore& grads) const {
  for (const auto& n : nodes_) {
    if (n.param_index < 0 || n.grad.size() == 0) continue;
    ParamArray& a = grads[static_cast<std::size_t>(n.param_index)];
    if (a.rows != static_cast<std::size_t>(n.grad.rows()) || a.cols != static_cast<std::size_t>(n.grad.cols())) {
      throw Error(ErrorCode::ShapeMismatch, "gradient store does not match parameter " + a.name);
    }
    for (std::size_t r = 0; r < a.rows; ++r) {
      for (std::size_t c = 0; c < a.cols; ++c) {
        a.values[r * a.cols + c] += n.grad(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      }
    }
  }
}

}  // namespace deeptrade::nn
