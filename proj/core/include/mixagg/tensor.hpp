#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mixagg {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& dims);
std::size_t shape_numel(const Shape& dims);

/// Dense row-major tensor with value semantics.
///
/// A default-constructed tensor is "empty" (rank 0, no storage) and is used
/// as the not-yet-materialized gradient slot. Every other tensor has at
/// least one dimension and all dimensions are positive.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape dims);
  BasicTensor(Shape dims, std::vector<T> data);

  static BasicTensor full(Shape dims, T value);
  static BasicTensor matrix(std::initializer_list<std::initializer_list<T>> rows);
  static BasicTensor vector(std::initializer_list<T> values);
  static BasicTensor identity(std::size_t n);

  bool empty() const noexcept { return dims_.empty(); }
  const Shape& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }

  /// Rank-2 accessors; throw ShapeError on other ranks.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& operator()(std::size_t r, std::size_t c) { return data_[r * dims_[1] + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * dims_[1] + c]; }

  std::span<T> row(std::size_t r);
  std::span<const T> row(std::size_t r) const;

  BasicTensor reshaped(Shape dims) const;

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(dims_, std::move(out));
  }

  bool all_finite() const noexcept;

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  Shape dims_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

/// Plain (non-differentiable) kernels shared by the autograd ops.
namespace kernels {

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);
/// a^T * b
template <typename T>
BasicTensor<T> matmul_tn(const BasicTensor<T>& a, const BasicTensor<T>& b);
/// a * b^T
template <typename T>
BasicTensor<T> matmul_nt(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a);

}  // namespace kernels

}  // namespace mixagg
