// Dense n-dimensional array with row-major storage.
#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "speechfcn/common.hpp"

namespace speechfcn {

template <class T>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(std::vector<long> shape) : shape_(std::move(shape)) {
    long n = 1;
    for (long e : shape_) {
      if (e <= 0) throw Error(ErrorKind::shape, "tensor extent must be positive");
      n *= e;
    }
    data_.assign(static_cast<std::size_t>(n), T(0));
  }

  TensorT(std::vector<long> shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    long n = 1;
    for (long e : shape_) n *= e;
    if (static_cast<std::size_t>(n) != data_.size())
      throw Error(ErrorKind::shape, "tensor data length does not match shape");
  }

  static TensorT full(std::vector<long> shape, T value) {
    TensorT t(std::move(shape));
    for (T& x : t.data_) x = value;
    return t;
  }

  int rank() const { return static_cast<int>(shape_.size()); }
  long extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  const std::vector<long>& shape() const { return shape_; }
  long size() const { return static_cast<long>(data_.size()); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](long i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](long i) const { return data_[static_cast<std::size_t>(i)]; }

  T& at(long i, long j) { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }
  const T& at(long i, long j) const { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }

  T& at(long i, long j, long k) {
    return data_[static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }
  const T& at(long i, long j, long k) const {
    return data_[static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }

  T& at(long i, long j, long k, long l) {
    return data_[static_cast<std::size_t>(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }
  const T& at(long i, long j, long k, long l) const {
    return data_[static_cast<std::size_t>(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }

  void fill(T value) {
    for (T& x : data_) x = value;
  }

  bool all_finite() const {
    for (const T& x : data_)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

  std::string shape_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

  template <class U>
  TensorT<U> cast() const {
    TensorT<U> out(shape_);
    for (long i = 0; i < size(); ++i) out[i] = static_cast<U>(data_[static_cast<std::size_t>(i)]);
    return out;
  }

 private:
  std::vector<long> shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;

// Mean over one axis; the result drops that axis.
template <class T>
TensorT<T> gap_over_axis(const TensorT<T>& x, int axis) {
  if (x.rank() == 0 || x.size() == 0) throw Error(ErrorKind::shape, "gap_over_axis: empty input");
  if (axis < 0 || axis >= x.rank()) throw Error(ErrorKind::shape, "gap_over_axis: axis out of range");
  long outer = 1, inner = 1;
  const long n = x.extent(axis);
  for (int a = 0; a < axis; ++a) outer *= x.extent(a);
  for (int a = axis + 1; a < x.rank(); ++a) inner *= x.extent(a);

  std::vector<long> out_shape;
  for (int a = 0; a < x.rank(); ++a)
    if (a != axis) out_shape.push_back(x.extent(a));
  if (out_shape.empty()) out_shape.push_back(1);
  TensorT<T> out(out_shape);

  for (long o = 0; o < outer; ++o)
    for (long i = 0; i < inner; ++i) {
      double acc = 0.0;
      for (long k = 0; k < n; ++k) acc += static_cast<double>(x[(o * n + k) * inner + i]);
      out[o * inner + i] = static_cast<T>(acc / static_cast<double>(n));
    }
  return out;
}

}  // namespace speechfcn
