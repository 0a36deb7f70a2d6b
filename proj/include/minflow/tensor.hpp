#ifndef MINFLOW_TENSOR_HPP_
#define MINFLOW_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "minflow/error.hpp"

namespace minflow {

inline constexpr std::size_t kMaxRank = 2;

/// Dimensions of a dense tensor. Rank 0 (scalar), 1 (vector) or 2 (matrix).
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims) : Shape(std::vector<std::size_t>(dims)) {}
  explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.size() > kMaxRank) {
      throw Error(Errc::InvalidShape, "rank " + std::to_string(dims_.size()) + " exceeds 2");
    }
  }

  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }
  std::span<const std::size_t> dims() const noexcept { return dims_; }

  std::size_t numel() const noexcept {
    return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>{});
  }

  std::string to_string() const {
    std::string out = "[";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i > 0) out += ",";
      out += std::to_string(dims_[i]);
    }
    return out + "]";
  }

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<std::size_t> dims_;
};

/// Dense row-major array of doubles. Immutable once constructed.
class Tensor {
 public:
  Tensor() : values_(1, 0.0) {}

  Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_.numel()) {
      throw Error(Errc::ShapeMismatch, "shape " + shape_.to_string() + " needs " +
                                           std::to_string(shape_.numel()) + " values, got " +
                                           std::to_string(values_.size()));
    }
  }

  static Tensor scalar(double v) { return Tensor(Shape{}, {v}); }

  static Tensor vector(std::vector<double> values) {
    Shape s{values.size()};
    return Tensor(std::move(s), std::move(values));
  }

  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> values;
    values.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw Error(Errc::ShapeMismatch, "ragged matrix literal");
      values.insert(values.end(), row.begin(), row.end());
    }
    return Tensor(Shape{r, c}, std::move(values));
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor(Shape{rows, cols}, std::move(values));
  }

  static Tensor filled(const Shape& shape, double v) { return Tensor(shape, std::vector<double>(shape.numel(), v)); }
  static Tensor zeros(const Shape& shape) { return filled(shape, 0.0); }

  static Tensor identity(std::size_t n) {
    std::vector<double> values(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) values[i * n + i] = 1.0;
    return Tensor(Shape{n, n}, std::move(values));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.rank(); }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }

  double operator[](std::size_t flat) const { return values_.at(flat); }
  double at(std::size_t row, std::size_t col) const {
    if (rank() != 2 || row >= shape_[0] || col >= shape_[1]) throw Error(Errc::ShapeMismatch, "bad 2-d index");
    return values_[row * shape_[1] + col];
  }

  /// Value of a single-element tensor of any rank.
  double item() const {
    if (values_.size() != 1) throw Error(Errc::ShapeMismatch, "item() on tensor of shape " + shape_.to_string());
    return values_[0];
  }

  /// Copy with the same shape and one element replaced.
  Tensor with_value(std::size_t flat, double v) const {
    std::vector<double> copy = values_;
    copy.at(flat) = v;
    return Tensor(shape_, std::move(copy));
  }

  Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), values_); }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// Lower bound applied to log() inputs. Disabled clamping makes non-positive inputs a DomainError.
struct LogClamp {
  bool enabled = true;
  double floor = 1e-12;

  double apply(double x) const {
    if (enabled) return std::max(x, floor);
    if (!(x > 0.0)) throw Error(Errc::DomainError, "log of non-positive value " + std::to_string(x));
    return x;
  }
};

enum class UnaryKind { Sigmoid, Relu, Log, Neg };
enum class BinaryKind { Add, Sub, Mul };

/// Logistic function evaluated without overflow; result kept inside the open interval (0,1).
inline double stable_sigmoid(double x) {
  double y;
  if (x >= 0.0) {
    y = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    y = e / (1.0 + e);
  }
  constexpr double kBelowOne = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return std::clamp(y, std::numeric_limits<double>::denorm_min(), kBelowOne);
}

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::ShapeMismatch, what);
}

template <typename F>
Tensor map_values(const Tensor& a, F&& f) {
  std::vector<double> out(a.size());
  std::ranges::transform(a.values(), out.begin(), f);
  return Tensor(a.shape(), std::move(out));
}

template <typename F>
Tensor zip_values(const Tensor& a, const Tensor& b, F&& f, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": " + a.shape().to_string() + " vs " + b.shape().to_string());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i], b[i]);
  return Tensor(a.shape(), std::move(out));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Forward kernels
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require(a.rank() == 2 && b.rank() == 2, "matmul needs rank-2 operands, got " + a.shape().to_string() +
                                                      " and " + b.shape().to_string());
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  detail::require(b.shape()[0] == k, "matmul inner dims " + a.shape().to_string() + " x " + b.shape().to_string());
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
    }
  }
  return Tensor(Shape{m, n}, std::move(out));
}

inline Tensor add_row_broadcast(const Tensor& a, const Tensor& bias) {
  detail::require(a.rank() == 2 && bias.rank() == 1 && bias.shape()[0] == a.shape()[1],
                  "add_row_broadcast " + a.shape().to_string() + " + " + bias.shape().to_string());
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bias[j];
  return Tensor(a.shape(), std::move(out));
}

inline Tensor map_unary(UnaryKind kind, const Tensor& a, const LogClamp& clamp = {}) {
  switch (kind) {
    case UnaryKind::Sigmoid: return detail::map_values(a, stable_sigmoid);
    case UnaryKind::Relu: return detail::map_values(a, [](double x) { return x > 0.0 ? x : 0.0; });
    case UnaryKind::Log: return detail::map_values(a, [&](double x) { return std::log(clamp.apply(x)); });
    case UnaryKind::Neg: return detail::map_values(a, [](double x) { return -x; });
  }
  throw Error(Errc::InvalidArgument, "unknown unary kind");
}

/// Elementwise a (op) b. Shapes must match unless one side is a scalar.
inline Tensor binary_elementwise(BinaryKind kind, const Tensor& a, const Tensor& b) {
  auto op = [kind](double x, double y) {
    switch (kind) {
      case BinaryKind::Add: return x + y;
      case BinaryKind::Sub: return x - y;
      case BinaryKind::Mul: return x * y;
    }
    return 0.0;
  };
  if (a.rank() == 0 && b.rank() != 0) {
    const double s = a.item();
    return detail::map_values(b, [&](double y) { return op(s, y); });
  }
  if (b.rank() == 0 && a.rank() != 0) {
    const double s = b.item();
    return detail::map_values(a, [&](double x) { return op(x, s); });
  }
  return detail::zip_values(a, b, op, "binary_elementwise");
}

inline Tensor reduce_sum(const Tensor& a) {
  return Tensor::scalar(std::accumulate(a.values().begin(), a.values().end(), 0.0));
}

inline Tensor dot(const Tensor& a, const Tensor& b) {
  detail::require(a.rank() == 1 && b.rank() == 1 && a.size() == b.size(),
                  "dot " + a.shape().to_string() + " . " + b.shape().to_string());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return Tensor::scalar(acc);
}

// ---------------------------------------------------------------------------
// Kernels used by gradient nodes
// ---------------------------------------------------------------------------

inline Tensor transpose(const Tensor& a) {
  detail::require(a.rank() == 2, "transpose needs rank 2, got " + a.shape().to_string());
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
  return Tensor(Shape{n, m}, std::move(out));
}

/// Sum over rows: [m,n] -> [n].
inline Tensor column_sum(const Tensor& a) {
  detail::require(a.rank() == 2, "column_sum needs rank 2, got " + a.shape().to_string());
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += a[i * n + j];
  return Tensor(Shape{n}, std::move(out));
}

inline Tensor broadcast_to(const Tensor& s, const Shape& shape) {
  detail::require(s.rank() == 0, "broadcast source must be a scalar, got " + s.shape().to_string());
  return Tensor::filled(shape, s.item());
}

/// upstream * y * (1 - y), with y the sigmoid output.
inline Tensor sigmoid_grad(const Tensor& y, const Tensor& upstream) {
  return detail::zip_values(y, upstream, [](double yv, double g) { return g * yv * (1.0 - yv); }, "sigmoid_grad");
}

/// upstream where x > 0, else 0 (the derivative at 0 is taken as 0).
inline Tensor relu_grad(const Tensor& x, const Tensor& upstream) {
  return detail::zip_values(x, upstream, [](double xv, double g) { return xv > 0.0 ? g : 0.0; }, "relu_grad");
}

/// upstream / x with x clamped the same way the forward log clamps it.
inline Tensor log_grad(const Tensor& x, const Tensor& upstream, const LogClamp& clamp = {}) {
  return detail::zip_values(x, upstream, [&](double xv, double g) { return g / clamp.apply(xv); }, "log_grad");
}

}  // namespace minflow

#endif  // MINFLOW_TENSOR_HPP_
