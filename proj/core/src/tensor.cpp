#include "mixagg/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "mixagg/errors.hpp"
#include "mixagg/parallel.hpp"

namespace mixagg {

std::string to_string(const Shape& dims) {
  std::string out = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(dims[i]);
  }
  return out + ")";
}

std::size_t shape_numel(const Shape& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

namespace {

void validate_dims(const Shape& dims) {
  if (dims.empty()) throw ShapeError("tensor needs at least one dimension");
  for (auto d : dims) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + to_string(dims));
  }
}

}  // namespace

template <typename T>
BasicTensor<T>::BasicTensor(Shape dims) : dims_(std::move(dims)) {
  validate_dims(dims_);
  data_.assign(shape_numel(dims_), T{0});
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape dims, std::vector<T> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  validate_dims(dims_);
  if (shape_numel(dims_) != data_.size()) {
    throw ShapeError("tensor dims " + to_string(dims_) + " need " +
                     std::to_string(shape_numel(dims_)) + " values, got " +
                     std::to_string(data_.size()));
  }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(Shape dims, T value) {
  validate_dims(dims);
  std::vector<T> data(shape_numel(dims), value);
  return BasicTensor(std::move(dims), std::move(data));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::matrix(std::initializer_list<std::initializer_list<T>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<T> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return BasicTensor({r, c}, std::move(data));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::vector(std::initializer_list<T> values) {
  return BasicTensor({values.size()}, std::vector<T>(values));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::identity(std::size_t n) {
  BasicTensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) out(i, i) = T{1};
  return out;
}

template <typename T>
std::size_t BasicTensor<T>::dim(std::size_t axis) const {
  if (axis >= dims_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for dims " + to_string(dims_));
  }
  return dims_[axis];
}

template <typename T>
std::size_t BasicTensor<T>::rows() const {
  if (rank() != 2) throw ShapeError("expected a matrix, got dims " + to_string(dims_));
  return dims_[0];
}

template <typename T>
std::size_t BasicTensor<T>::cols() const {
  if (rank() != 2) throw ShapeError("expected a matrix, got dims " + to_string(dims_));
  return dims_[1];
}

template <typename T>
std::span<T> BasicTensor<T>::row(std::size_t r) {
  const std::size_t c = cols();
  return std::span<T>(data_).subspan(r * c, c);
}

template <typename T>
std::span<const T> BasicTensor<T>::row(std::size_t r) const {
  const std::size_t c = cols();
  return std::span<const T>(data_).subspan(r * c, c);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape dims) const {
  if (shape_numel(dims) != data_.size()) {
    throw ShapeError("cannot reshape " + to_string(dims_) + " to " + to_string(dims));
  }
  return BasicTensor(std::move(dims), data_);
}

template <typename T>
bool BasicTensor<T>::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template class BasicTensor<float>;
template class BasicTensor<double>;

namespace kernels {
namespace {

void require_matrix(const Shape& dims, const char* what) {
  if (dims.size() != 2) {
    throw ShapeError(std::string(what) + " expects a matrix, got dims " + to_string(dims));
  }
}

}  // namespace

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_matrix(a.dims(), "matmul");
  require_matrix(b.dims(), "matmul");
  const std::size_t m = a.rows(), k = a.cols(), p = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul inner dims disagree: " + to_string(a.dims()) + " x " +
                     to_string(b.dims()));
  }
  BasicTensor<T> out({m, p});
  const T* A = a.data().data();
  const T* B = b.data().data();
  T* C = out.data().data();
  parallel_for(m, k * p, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      T* crow = C + i * p;
      for (std::size_t kk = 0; kk < k; ++kk) {
        const T av = A[i * k + kk];
        const T* brow = B + kk * p;
        for (std::size_t j = 0; j < p; ++j) crow[j] += av * brow[j];
      }
    }
  });
  return out;
}

template <typename T>
BasicTensor<T> matmul_tn(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_matrix(a.dims(), "matmul_tn");
  require_matrix(b.dims(), "matmul_tn");
  const std::size_t k = a.rows(), m = a.cols(), p = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul_tn inner dims disagree: " + to_string(a.dims()) + "^T x " +
                     to_string(b.dims()));
  }
  BasicTensor<T> out({m, p});
  const T* A = a.data().data();
  const T* B = b.data().data();
  T* C = out.data().data();
  parallel_for(m, k * p, [&](std::size_t begin, std::size_t end) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T* brow = B + kk * p;
      for (std::size_t i = begin; i < end; ++i) {
        const T av = A[kk * m + i];
        T* crow = C + i * p;
        for (std::size_t j = 0; j < p; ++j) crow[j] += av * brow[j];
      }
    }
  });
  return out;
}

template <typename T>
BasicTensor<T> matmul_nt(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_matrix(a.dims(), "matmul_nt");
  require_matrix(b.dims(), "matmul_nt");
  const std::size_t m = a.rows(), k = a.cols(), p = b.rows();
  if (b.cols() != k) {
    throw ShapeError("matmul_nt inner dims disagree: " + to_string(a.dims()) + " x " +
                     to_string(b.dims()) + "^T");
  }
  BasicTensor<T> out({m, p});
  const T* A = a.data().data();
  const T* B = b.data().data();
  T* C = out.data().data();
  parallel_for(m, k * p, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const T* arow = A + i * k;
      for (std::size_t j = 0; j < p; ++j) {
        const T* brow = B + j * k;
        T acc{0};
        for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
        C[i * p + j] = acc;
      }
    }
  });
  return out;
}

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a) {
  require_matrix(a.dims(), "transpose");
  const std::size_t r = a.rows(), c = a.cols();
  BasicTensor<T> out({c, r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out(j, i) = a(i, j);
  }
  return out;
}

#define MIXAGG_INSTANTIATE_KERNELS(T)                                        \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);    \
  template BasicTensor<T> matmul_tn(const BasicTensor<T>&, const BasicTensor<T>&); \
  template BasicTensor<T> matmul_nt(const BasicTensor<T>&, const BasicTensor<T>&); \
  template BasicTensor<T> transpose(const BasicTensor<T>&);

MIXAGG_INSTANTIATE_KERNELS(float)
MIXAGG_INSTANTIATE_KERNELS(double)

#undef MIXAGG_INSTANTIATE_KERNELS

}  // namespace kernels
}  // namespace mixagg
