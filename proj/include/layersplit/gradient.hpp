#pragma once

// Generalized tensor gradient: per-axis circular derivative responses and
// their adjoint. Responses for J axes are stacked axis-major into a single
// vector of length J * N, matching the layout of g, u, v, y1 and y2 in the
// solver.

#include "layersplit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace layersplit {

/// response[i] = sum_k taps[k] * x[(i + k - anchor) mod n] along one axis.
struct DerivativeFilter {
  std::vector<double> taps;
  int anchor = 0;

  /// Two-tap forward difference x[i+1] - x[i].
  static DerivativeFilter forward_difference() { return {{-1.0, 1.0}, 0}; }

  Index length() const { return static_cast<Index>(taps.size()); }

  void validate() const {
    if (taps.empty()) throw std::invalid_argument("derivative filter has no taps");
    if (anchor < 0 || anchor >= static_cast<int>(taps.size()))
      throw std::invalid_argument("derivative filter anchor out of range");
    double sum = 0.0, mag = 0.0;
    for (double t : taps) {
      sum += t;
      mag += std::abs(t);
    }
    if (std::abs(sum) > 1e-12 * std::max(1.0, mag))
      throw std::invalid_argument("derivative filter taps must sum to zero");
  }
};

namespace detail {

// Calls fn(start, stride, extent) once for every fiber along `axis`.
template <typename Fn>
void for_each_fiber(const Dims& dims, int axis, Fn&& fn) {
  const auto a = static_cast<std::size_t>(axis);
  Index inner = 1;
  for (std::size_t i = 0; i < a; ++i) inner *= dims[i];
  const Index n = dims[a];
  Index outer = 1;
  for (std::size_t i = a + 1; i < dims.size(); ++i) outer *= dims[i];
  for (Index o = 0; o < outer; ++o)
    for (Index i = 0; i < inner; ++i) fn(o * inner * n + i, inner, n);
}

inline void validate_axes(const Dims& dims, std::optional<int> channel_axis,
                          const AxisList& axes, const DerivativeFilter& filter) {
  if (axes.empty()) throw std::invalid_argument("gradient needs at least one axis");
  std::set<int> seen;
  for (int axis : axes) {
    check_axis(dims, axis);
    if (channel_axis && *channel_axis == axis)
      throw std::invalid_argument("axis " + std::to_string(axis) +
                                  " is the channel axis and carries no derivative");
    if (dims[static_cast<std::size_t>(axis)] < filter.length())
      throw std::invalid_argument("extent along axis " + std::to_string(axis) +
                                  " is shorter than the derivative filter");
    if (!seen.insert(axis).second) throw std::invalid_argument("gradient axes must be distinct");
  }
}

template <typename Scalar, typename In, typename Out>
void filter_axis(const Dims& dims, int axis, const DerivativeFilter& f, const In& in, Out& out,
                 bool adjoint, bool accumulate) {
  const auto len = static_cast<Index>(f.taps.size());
  std::vector<Scalar> fiber;
  for_each_fiber(dims, axis, [&](Index start, Index stride, Index n) {
    fiber.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) fiber[static_cast<std::size_t>(i)] = in[start + i * stride];
    for (Index i = 0; i < n; ++i) {
      Scalar acc{0};
      for (Index k = 0; k < len; ++k) {
        const Index shift = adjoint ? (f.anchor - k) : (k - f.anchor);
        const Index j = ((i + shift) % n + n) % n;
        acc += static_cast<Scalar>(f.taps[static_cast<std::size_t>(k)]) *
               fiber[static_cast<std::size_t>(j)];
      }
      if (accumulate)
        out[start + i * stride] += acc;
      else
        out[start + i * stride] = acc;
    }
  });
}

}  // namespace detail

/// The stacked operator F = [F_1; ...; F_J] for a fixed shape and axis set.
template <typename Scalar>
class GradientOperator {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  GradientOperator(Dims dims, AxisList axes,
                   DerivativeFilter filter = DerivativeFilter::forward_difference(),
                   std::optional<int> channel_axis = std::nullopt)
      : dims_(std::move(dims)), axes_(std::move(axes)), filter_(std::move(filter)) {
    validate_dims(dims_);
    filter_.validate();
    detail::validate_axes(dims_, channel_axis, axes_, filter_);
    n_ = element_count(dims_);
  }

  template <typename T>
  static GradientOperator for_tensor(const DenseTensor<T>& t, const AxisList& axes,
                                     DerivativeFilter filter = DerivativeFilter::forward_difference()) {
    return GradientOperator(t.dims(), axes, std::move(filter), t.channel_axis());
  }

  const Dims& dims() const { return dims_; }
  const AxisList& axes() const { return axes_; }
  const DerivativeFilter& filter() const { return filter_; }
  int num_axes() const { return static_cast<int>(axes_.size()); }
  Index tensor_size() const { return n_; }
  Index stacked_size() const { return n_ * num_axes(); }

  /// F x, stacked axis-major.
  Vector apply(const Vector& x) const {
    check_len(x, n_, "gradient input");
    Vector out(stacked_size());
    for (int j = 0; j < num_axes(); ++j) {
      auto seg = out.segment(j * n_, n_);
      detail::filter_axis<Scalar>(dims_, axes_[static_cast<std::size_t>(j)], filter_, x, seg,
                                  /*adjoint=*/false, /*accumulate=*/false);
    }
    return out;
  }

  /// F^T y for a stacked y.
  Vector adjoint(const Vector& y) const {
    check_len(y, stacked_size(), "gradient adjoint input");
    Vector out = Vector::Zero(n_);
    for (int j = 0; j < num_axes(); ++j) {
      const auto seg = y.segment(j * n_, n_);
      detail::filter_axis<Scalar>(dims_, axes_[static_cast<std::size_t>(j)], filter_, seg, out,
                                  /*adjoint=*/true, /*accumulate=*/true);
    }
    return out;
  }

 private:
  static void check_len(const Vector& v, Index expected, const char* what) {
    if (v.size() != expected)
      throw DimensionError(std::string(what) + ": length " + std::to_string(v.size()) +
                           ", expected " + std::to_string(expected));
  }

  Dims dims_;
  AxisList axes_;
  DerivativeFilter filter_;
  Index n_ = 0;
};

/// Ordered derivative responses of one tensor, one per gradient axis.
template <typename Scalar>
class GradientField {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  GradientField(std::vector<DenseTensor<Scalar>> responses, AxisList axes)
      : responses_(std::move(responses)), axes_(std::move(axes)) {
    if (responses_.size() != axes_.size())
      throw DimensionError("gradient field: one response per axis required");
    if (responses_.size() < 2 || responses_.size() > 3)
      throw DimensionError("gradient field must hold 2 or 3 responses");
    for (const auto& r : responses_)
      if (!r.same_shape(responses_.front()))
        throw DimensionError("gradient field responses must share dims");
  }

  /// Splits a stacked vector into per-axis responses shaped like `like`.
  static GradientField from_stacked(const Vector& stacked, const DenseTensor<Scalar>& like,
                                    const AxisList& axes) {
    const Index n = like.size();
    if (stacked.size() != n * static_cast<Index>(axes.size()))
      throw DimensionError("stacked gradient length mismatch");
    std::vector<DenseTensor<Scalar>> responses;
    for (std::size_t j = 0; j < axes.size(); ++j)
      responses.push_back(like.with_values(stacked.segment(static_cast<Index>(j) * n, n)));
    return GradientField(std::move(responses), axes);
  }

  int size() const { return static_cast<int>(responses_.size()); }
  const AxisList& axes() const { return axes_; }
  const DenseTensor<Scalar>& operator[](int j) const {
    return responses_.at(static_cast<std::size_t>(j));
  }
  const std::vector<DenseTensor<Scalar>>& responses() const { return responses_; }

  Vector stacked() const {
    const Index n = responses_.front().size();
    Vector out(n * size());
    for (int j = 0; j < size(); ++j) out.segment(j * n, n) = responses_[static_cast<std::size_t>(j)].values();
    return out;
  }

 private:
  std::vector<DenseTensor<Scalar>> responses_;
  AxisList axes_;
};

/// Circular derivative response of t along one axis.
template <typename Scalar>
DenseTensor<Scalar> derivative_response(const DenseTensor<Scalar>& t, int axis,
                                        const DerivativeFilter& filter =
                                            DerivativeFilter::forward_difference()) {
  filter.validate();
  detail::validate_axes(t.dims(), t.channel_axis(), {axis}, filter);
  typename DenseTensor<Scalar>::Vector out(t.size());
  detail::filter_axis<Scalar>(t.dims(), axis, filter, t.values(), out, false, false);
  return t.with_values(std::move(out));
}

template <typename Scalar>
GradientField<Scalar> gradient(const DenseTensor<Scalar>& t, const AxisList& axes,
                               const DerivativeFilter& filter =
                                   DerivativeFilter::forward_difference()) {
  const auto op = GradientOperator<Scalar>::for_tensor(t, axes, filter);
  return GradientField<Scalar>::from_stacked(op.apply(t.values()), t, axes);
}

/// F^T applied to a field: sum of circular correlations along each axis.
template <typename Scalar>
DenseTensor<Scalar> gradient_adjoint(const GradientField<Scalar>& field,
                                     const DerivativeFilter& filter =
                                         DerivativeFilter::forward_difference()) {
  const auto& like = field[0];
  const auto op = GradientOperator<Scalar>::for_tensor(like, field.axes(), filter);
  return like.with_values(op.adjoint(field.stacked()));
}

/// Gradient of the observation, computed once per solve.
template <typename Scalar>
GradientField<Scalar> observation_gradient(const DenseTensor<Scalar>& c, const AxisList& axes,
                                           const DerivativeFilter& filter =
                                               DerivativeFilter::forward_difference()) {
  return gradient(c, axes, filter);
}

}  // namespace layersplit
