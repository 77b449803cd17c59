#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "kesa/common.hpp"

namespace kesa {

// Dense row-major tensor. Rank is dynamic but everything in this project is
// rank 1 or 2 plus size-1 scalars.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    std::size_t n = 1;
    for (std::size_t e : shape_) {
      if (e == 0) throw UsageError("Tensor: zero extent");
      n *= e;
    }
    data_.assign(n, real_t{0});
  }

  static Tensor zeros(std::initializer_list<std::size_t> shape) {
    return Tensor(std::vector<std::size_t>(shape));
  }

  static Tensor scalar(real_t v) {
    Tensor t = zeros({1});
    t.data_[0] = v;
    return t;
  }

  static Tensor row(std::vector<real_t> values) {
    Tensor t;
    t.shape_ = {values.size()};
    t.data_ = std::move(values);
    if (t.data_.empty()) throw UsageError("Tensor::row: empty");
    return t;
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<real_t> values) {
    if (values.size() != rows * cols) throw UsageError("Tensor::matrix: size mismatch");
    Tensor t;
    t.shape_ = {rows, cols};
    t.data_ = std::move(values);
    return t;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  real_t& operator[](std::size_t i) { return data_[i]; }
  real_t operator[](std::size_t i) const { return data_[i]; }

  real_t& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  real_t at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  std::span<real_t> flat() { return data_; }
  std::span<const real_t> flat() const { return data_; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void fill(real_t v) { data_.assign(data_.size(), v); }

  bool all_finite() const {
    for (real_t v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::string shape_str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape_.size(); ++i)
      s += (i ? "," : "") + std::to_string(shape_[i]);
    return s + ")";
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<real_t> data_;
};

// A named trainable tensor with its gradient accumulator.
struct Variable {
  std::string name;
  Tensor value;
  Tensor grad;

  Variable() = default;
  Variable(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(Tensor(value.shape())) {}

  void zero_grad() { grad.fill(0); }
};

}  // namespace kesa
