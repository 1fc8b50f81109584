#include "deeptrade/nn/params.hpp"

#include <cmath>
#include <ostream>

#include "deeptrade/csv.hpp"
#include "deeptrade/error.hpp"

namespace deeptrade::nn {

std::size_t ParamStore::add(std::string name, std::size_t rows, std::size_t cols, double fill) {
  if (contains(name)) throw Error(ErrorCode::ShapeMismatch, "duplicate parameter " + name);
  arrays_.push_back({std::move(name), rows, cols, std::vector<double>(rows * cols, fill)});
  return arrays_.size() - 1;
}

std::size_t ParamStore::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    if (arrays_[i].name == name) return i;
  }
  throw Error(ErrorCode::ShapeMismatch, "no parameter named " + std::string(name));
}

bool ParamStore::contains(std::string_view name) const {
  for (const auto& a : arrays_) {
    if (a.name == name) return true;
  }
  return false;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& a : arrays_) n += a.size();
  return n;
}

ParamStore ParamStore::zeros_like() const {
  ParamStore out;
  for (const auto& a : arrays_) out.add(a.name, a.rows, a.cols, 0.0);
  return out;
}

bool ParamStore::same_shape(const ParamStore& other) const {
  if (arrays_.size() != other.arrays_.size()) return false;
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    const auto& a = arrays_[i];
    const auto& b = other.arrays_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols) return false;
  }
  return true;
}

bool ParamStore::all_finite() const {
  for (const auto& a : arrays_) {
    for (double v : a.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

void ParamStore::fill(double v) {
  for (auto& a : arrays_) std::fill(a.values.begin(), a.values.end(), v);
}

double& ParamStore::flat(std::size_t k) {
  for (auto& a : arrays_) {
    if (k < a.size()) return a.values[k];
    k -= a.size();
  }
  throw Error(ErrorCode::OutOfRange, "flat parameter index out of range");
}

double ParamStore::flat(std::size_t k) const { return const_cast<ParamStore*>(this)->flat(k); }

void write_params(std::ostream& os, const ParamStore& params, std::string_view tag) {
  for (const auto& a : params.arrays()) {
    if (!tag.empty()) os << tag << ',';
    os << "param," << a.name << ',' << a.rows << ',' << a.cols;
    for (double v : a.values) os << ',' << csv::format_double(v);
    os << '\n';
  }
}

void read_param_line(ParamStore& params, std::span<const std::string> fields) {
  if (fields.size() < 4 || fields[0] != "param") {
    throw Error(ErrorCode::MalformedRow, "expected param,<name>,<rows>,<cols>,...");
  }
  const auto rows = csv::parse_double(fields[2]);
  const auto cols = csv::parse_double(fields[3]);
  if (!rows || !cols || *rows < 0 || *cols < 0) throw Error(ErrorCode::MalformedRow, "bad shape for " + fields[1]);
  const auto r = static_cast<std::size_t>(*rows);
  const auto c = static_cast<std::size_t>(*cols);
  if (fields.size() != 4 + r * c) {
    throw Error(ErrorCode::ShapeMismatch, "parameter " + fields[1] + " has wrong value count");
  }
  const std::size_t idx = params.add(fields[1], r, c);
  auto& values = params[idx].values;
  for (std::size_t k = 0; k < r * c; ++k) {
    const auto v = csv::parse_double(fields[4 + k]);
    if (!v) throw Error(ErrorCode::MalformedRow, "bad value in parameter " + fields[1]);
    values[k] = *v;
  }
}

double global_norm(const ParamStore& grads) {
  double ss = 0.0;
  for (const auto& a : grads.arrays()) {
    for (double v : a.values) ss += v * v;
  }
  return std::sqrt(ss);
}

double clip_global_norm(ParamStore& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (std::size_t i = 0; i < grads.array_count(); ++i) {
      for (double& v : grads[i].values) v *= scale;
    }
  }
  return norm;
}

}  // namespace deeptrade::nn
