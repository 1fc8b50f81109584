#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace deeptrade::nn {

// One named parameter array, row-major.
struct ParamArray {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  friend bool operator==(const ParamArray&, const ParamArray&) = default;
};

// Ordered collection of named arrays. Shapes are fixed once added. Also used
// to hold gradients and optimizer moments aligned with a parameter store.
class ParamStore {
 public:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols, double fill = 0.0);

  std::size_t index_of(std::string_view name) const;  // throws Error{ShapeMismatch} if absent
  bool contains(std::string_view name) const;

  ParamArray& operator[](std::size_t i) { return arrays_[i]; }
  const ParamArray& operator[](std::size_t i) const { return arrays_[i]; }
  ParamArray& get(std::string_view name) { return arrays_[index_of(name)]; }
  const ParamArray& get(std::string_view name) const { return arrays_[index_of(name)]; }

  std::size_t array_count() const { return arrays_.size(); }
  std::size_t total_size() const;
  const std::vector<ParamArray>& arrays() const { return arrays_; }

  // Same names and shapes, all values zero.
  ParamStore zeros_like() const;
  bool same_shape(const ParamStore& other) const;
  bool all_finite() const;
  void fill(double v);

  // Flat view across arrays in order, for finite-difference checks.
  double& flat(std::size_t k);
  double flat(std::size_t k) const;

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  std::vector<ParamArray> arrays_;
};

// Text format, one array per line:
//   param,<name>,<rows>,<cols>,<v0>,<v1>,...   (row-major, shortest round-trip)
// Lines are prefixed by `tag,` when a tag is given.
void write_params(std::ostream& os, const ParamStore& params, std::string_view tag = {});
// Parses lines produced by write_params (already split on commas, tag removed).
void read_param_line(ParamStore& params, std::span<const std::string> fields);

double global_norm(const ParamStore& grads);
// Rescales grads in place so the global L2 norm is at most max_norm. Returns
// the norm before clipping.
double clip_global_norm(ParamStore& grads, double max_norm);

}  // namespace deeptrade::nn
