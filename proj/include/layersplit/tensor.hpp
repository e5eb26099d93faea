#pragma once

// Dense n-order tensors (n = 2..4) stored column-major: axis 0 varies
// fastest. For an image the axes are (row, column[, channel]); for a video
// they are (row, column, channel, frame).
//
// Mode-k unfolding follows the usual fiber ordering: element (d_1..d_n) of
// the tensor lands at row d_k and column sum_{i != k} d_i * J_i with
// J_i = prod_{m < i, m != k} D_m. Under this ordering unfold(t, 0) is the
// storage buffer itself, so vec(unfold(t, 0)) == t.values().

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace layersplit {

using Index = Eigen::Index;
using Dims = std::vector<Index>;
using AxisList = std::vector<int>;

inline constexpr int kMinOrder = 2;
inline constexpr int kMaxOrder = 4;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string to_string(const Dims& dims) {
  std::ostringstream os;
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "x" : "") << dims[i];
  return os.str();
}

inline Index element_count(const Dims& dims) {
  Index n = 1;
  for (Index d : dims) n *= d;
  return n;
}

inline Dims column_major_strides(const Dims& dims) {
  Dims strides(dims.size());
  Index s = 1;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    strides[i] = s;
    s *= dims[i];
  }
  return strides;
}

inline void validate_dims(const Dims& dims) {
  const auto order = static_cast<int>(dims.size());
  if (order < kMinOrder || order > kMaxOrder)
    throw DimensionError("tensor order must be 2..4, got " + std::to_string(order));
  for (Index d : dims)
    if (d < 1) throw DimensionError("tensor extents must be positive: " + to_string(dims));
}

template <typename Scalar>
class DenseTensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  /// Zero-filled tensor.
  explicit DenseTensor(Dims dims, std::optional<int> channel_axis = std::nullopt)
      : dims_(std::move(dims)), channel_axis_(channel_axis) {
    validate_dims(dims_);
    validate_channel_axis();
    values_ = Vector::Zero(element_count(dims_));
  }

  DenseTensor(Dims dims, Vector values, std::optional<int> channel_axis = std::nullopt)
      : dims_(std::move(dims)), channel_axis_(channel_axis), values_(std::move(values)) {
    validate_dims(dims_);
    validate_channel_axis();
    if (values_.size() != element_count(dims_))
      throw DimensionError("value count " + std::to_string(values_.size()) +
                           " does not match dims " + to_string(dims_));
    if (!values_.allFinite()) throw std::invalid_argument("tensor values must be finite");
  }

  static DenseTensor Constant(Dims dims, Scalar value,
                              std::optional<int> channel_axis = std::nullopt) {
    DenseTensor t(std::move(dims), channel_axis);
    t.values_.setConstant(value);
    return t;
  }

  /// Same shape and channel axis, different values.
  DenseTensor with_values(Vector values) const {
    return DenseTensor(dims_, std::move(values), channel_axis_);
  }

  const Dims& dims() const { return dims_; }
  int order() const { return static_cast<int>(dims_.size()); }
  Index extent(int axis) const { return dims_.at(static_cast<std::size_t>(axis)); }
  Index size() const { return values_.size(); }
  std::optional<int> channel_axis() const { return channel_axis_; }

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

  Index linear_index(const std::vector<Index>& idx) const {
    if (idx.size() != dims_.size()) throw DimensionError("index arity mismatch");
    Index lin = 0, stride = 1;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (idx[i] < 0 || idx[i] >= dims_[i]) throw std::out_of_range("tensor index out of range");
      lin += idx[i] * stride;
      stride *= dims_[i];
    }
    return lin;
  }

  Scalar operator()(const std::vector<Index>& idx) const { return values_[linear_index(idx)]; }
  Scalar& operator()(const std::vector<Index>& idx) { return values_[linear_index(idx)]; }

  bool same_shape(const DenseTensor& other) const { return dims_ == other.dims_; }

  /// Axes that may carry a derivative: every axis except the channel axis.
  AxisList gradient_axes() const {
    AxisList axes;
    for (int k = 0; k < order(); ++k)
      if (!channel_axis_ || *channel_axis_ != k) axes.push_back(k);
    return axes;
  }

 private:
  void validate_channel_axis() const {
    if (channel_axis_ && (*channel_axis_ < 0 || *channel_axis_ >= order()))
      throw DimensionError("channel axis out of range");
  }

  Dims dims_;
  std::optional<int> channel_axis_;
  Vector values_;
};

using Tensor = DenseTensor<double>;

namespace detail {

inline void check_axis(const Dims& dims, int axis) {
  if (axis < 0 || axis >= static_cast<int>(dims.size()))
    throw std::out_of_range("axis " + std::to_string(axis) + " out of range for order " +
                            std::to_string(dims.size()));
}

template <typename Scalar>
void require_same_shape(const DenseTensor<Scalar>& a, const DenseTensor<Scalar>& b,
                        const char* what) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(what) + ": dims " + to_string(a.dims()) + " vs " +
                         to_string(b.dims()));
}

}  // namespace detail

/// Mode-k unfolding, D_k x prod_{i != k} D_i.
template <typename Scalar>
typename DenseTensor<Scalar>::Matrix unfold(const DenseTensor<Scalar>& t, int axis) {
  detail::check_axis(t.dims(), axis);
  const Dims& dims = t.dims();
  const Index rows = dims[static_cast<std::size_t>(axis)];
  const Index cols = t.size() / rows;
  typename DenseTensor<Scalar>::Matrix m(rows, cols);

  // Walk the storage in order, tracking the multi-index incrementally.
  std::vector<Index> idx(dims.size(), 0);
  for (Index lin = 0; lin < t.size(); ++lin) {
    Index col = 0, stride = 1;
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (static_cast<int>(i) == axis) continue;
      col += idx[i] * stride;
      stride *= dims[i];
    }
    m(idx[static_cast<std::size_t>(axis)], col) = t.values()[lin];
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (++idx[i] < dims[i]) break;
      idx[i] = 0;
    }
  }
  return m;
}

/// Inverse of unfold for the given target shape.
template <typename Derived>
DenseTensor<typename Derived::Scalar> fold(const Eigen::MatrixBase<Derived>& m, int axis,
                                           const Dims& dims,
                                           std::optional<int> channel_axis = std::nullopt) {
  using Scalar = typename Derived::Scalar;
  validate_dims(dims);
  detail::check_axis(dims, axis);
  if (m.rows() != dims[static_cast<std::size_t>(axis)] ||
      m.rows() * m.cols() != element_count(dims))
    throw DimensionError("fold: matrix shape does not match dims " + to_string(dims));

  typename DenseTensor<Scalar>::Vector values(element_count(dims));
  std::vector<Index> idx(dims.size(), 0);
  for (Index lin = 0; lin < values.size(); ++lin) {
    Index col = 0, stride = 1;
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (static_cast<int>(i) == axis) continue;
      col += idx[i] * stride;
      stride *= dims[i];
    }
    values[lin] = m(idx[static_cast<std::size_t>(axis)], col);
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (++idx[i] < dims[i]) break;
      idx[i] = 0;
    }
  }
  return DenseTensor<Scalar>(dims, std::move(values), channel_axis);
}

/// vec(unfold(t, k)).
template <typename Scalar>
typename DenseTensor<Scalar>::Vector vec(const DenseTensor<Scalar>& t, int axis = 0) {
  if (axis == 0) return t.values();
  auto m = unfold(t, axis);
  return Eigen::Map<const typename DenseTensor<Scalar>::Vector>(m.data(), m.size());
}

/// Inverse of vec: fold(reshape(a, k), k).
template <typename Derived>
DenseTensor<typename Derived::Scalar> unvec(const Eigen::MatrixBase<Derived>& a, int axis,
                                            const Dims& dims,
                                            std::optional<int> channel_axis = std::nullopt) {
  using Scalar = typename Derived::Scalar;
  validate_dims(dims);
  detail::check_axis(dims, axis);
  const Index rows = dims[static_cast<std::size_t>(axis)];
  if (a.size() != element_count(dims)) throw DimensionError("unvec: length mismatch");
  typename DenseTensor<Scalar>::Vector flat = a;
  Eigen::Map<const typename DenseTensor<Scalar>::Matrix> m(flat.data(), rows, flat.size() / rows);
  return fold(m, axis, dims, channel_axis);
}

// Reductions run sequentially in storage order so results are reproducible
// bit-for-bit regardless of vectorization settings.

template <typename Derived>
typename Derived::Scalar sum_of_squares(const Eigen::DenseBase<Derived>& a) {
  typename Derived::Scalar s{0};
  for (Index i = 0; i < a.size(); ++i) s += a.derived().coeff(i) * a.derived().coeff(i);
  return s;
}

template <typename Derived>
typename Derived::Scalar sum_of_abs(const Eigen::DenseBase<Derived>& a) {
  typename Derived::Scalar s{0};
  for (Index i = 0; i < a.size(); ++i) s += std::abs(a.derived().coeff(i));
  return s;
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar dot_sequential(const Eigen::DenseBase<DerivedA>& a,
                                         const Eigen::DenseBase<DerivedB>& b) {
  if (a.size() != b.size()) throw DimensionError("inner product length mismatch");
  typename DerivedA::Scalar s{0};
  for (Index i = 0; i < a.size(); ++i) s += a.derived().coeff(i) * b.derived().coeff(i);
  return s;
}

template <typename Scalar>
Scalar frobenius_norm(const DenseTensor<Scalar>& t) {
  return std::sqrt(sum_of_squares(t.values()));
}

template <typename Scalar>
Scalar l1_norm(const DenseTensor<Scalar>& t) {
  return sum_of_abs(t.values());
}

template <typename Scalar>
Scalar inner(const DenseTensor<Scalar>& a, const DenseTensor<Scalar>& b) {
  detail::require_same_shape(a, b, "inner");
  return dot_sequential(a.values(), b.values());
}

template <typename Scalar>
DenseTensor<Scalar> hadamard(const DenseTensor<Scalar>& a, const DenseTensor<Scalar>& b) {
  detail::require_same_shape(a, b, "hadamard");
  return a.with_values(a.values().cwiseProduct(b.values()));
}

}  // namespace layersplit
