#pragma once

// Closed-form solves of (F^T F + s I) x = b for circulant F. Both layer
// subproblems reduce to this system: s = 2/mu + 1 for the artifact layer and
// s = 1 for the intrinsic layer. Transforms run along gradient axes only; any
// other axis (the channel axis) is an independent batch.

#include "layersplit/gradient.hpp"
#include "layersplit/state.hpp"
#include "layersplit/tensor.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <deque>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace layersplit {

/// Full-grid eigenvalues of F^T F + shift * I.
template <typename Scalar>
class SpectralDenominator {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  SpectralDenominator(Dims dims, AxisList axes, Scalar shift, Vector values)
      : dims_(std::move(dims)), axes_(std::move(axes)), shift_(shift), values_(std::move(values)) {}

  const Dims& dims() const { return dims_; }
  const AxisList& axes() const { return axes_; }
  Scalar shift() const { return shift_; }
  /// Indexed like the tensor storage, frequency bin d_k along each axis k.
  const Vector& values() const { return values_; }

 private:
  Dims dims_;
  AxisList axes_;
  Scalar shift_;
  Vector values_;
};

/// |h(omega)|^2 for omega = 2 pi m / n, m = 0..n-1.
template <typename Scalar>
std::vector<Scalar> filter_power_spectrum(const DerivativeFilter& filter, Index n) {
  std::vector<Scalar> power(static_cast<std::size_t>(n));
  for (Index m = 0; m < n; ++m) {
    std::complex<double> h{0.0, 0.0};
    const double omega = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
    for (std::size_t k = 0; k < filter.taps.size(); ++k) {
      const double phase = omega * static_cast<double>(static_cast<int>(k) - filter.anchor);
      h += filter.taps[k] * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    power[static_cast<std::size_t>(m)] = static_cast<Scalar>(std::norm(h));
  }
  return power;
}

template <typename Scalar>
SpectralDenominator<Scalar> build_denominator(const Dims& dims, const AxisList& axes,
                                              const DerivativeFilter& filter, Scalar shift) {
  if (!(shift > Scalar(0))) throw std::invalid_argument("denominator shift must be positive");
  validate_dims(dims);
  filter.validate();
  detail::validate_axes(dims, std::nullopt, axes, filter);

  using Vector = typename SpectralDenominator<Scalar>::Vector;
  Vector values = Vector::Constant(element_count(dims), shift);
  const Dims strides = column_major_strides(dims);
  for (int axis : axes) {
    const auto a = static_cast<std::size_t>(axis);
    const auto power = filter_power_spectrum<Scalar>(filter, dims[a]);
    for (Index lin = 0; lin < values.size(); ++lin) {
      const Index m = (lin / strides[a]) % dims[a];
      values[lin] += power[static_cast<std::size_t>(m)];
    }
  }
  return SpectralDenominator<Scalar>(dims, axes, shift, std::move(values));
}

/// FFT-based solver for one shape and axis set. Holds FFT plans and scratch
/// space, so one instance must not be shared between threads.
template <typename Scalar>
class CirculantSolver {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Complex = std::complex<Scalar>;

  CirculantSolver(Dims dims, AxisList axes,
                  DerivativeFilter filter = DerivativeFilter::forward_difference())
      : dims_(std::move(dims)), axes_(std::move(axes)), filter_(std::move(filter)) {
    validate_dims(dims_);
    filter_.validate();
    detail::validate_axes(dims_, std::nullopt, axes_, filter_);
    work_.resize(static_cast<std::size_t>(element_count(dims_)));
  }

  const Dims& dims() const { return dims_; }
  const AxisList& axes() const { return axes_; }

  /// Cached denominator for `shift`; rebuilt only when the shift changes.
  const SpectralDenominator<Scalar>& denominator(Scalar shift) {
    for (const auto& d : cache_)
      if (d.shift() == shift) return d;
    if (cache_.size() >= kCacheSlots) cache_.pop_front();
    cache_.push_back(build_denominator<Scalar>(dims_, axes_, filter_, shift));
    return cache_.back();
  }

  Vector solve(const Vector& rhs, Scalar shift) { return solve(rhs, denominator(shift)); }

  Vector solve(const Vector& rhs, const SpectralDenominator<Scalar>& den) {
    if (rhs.size() != static_cast<Index>(work_.size()) || den.values().size() != rhs.size())
      throw DimensionError("circulant solve: length mismatch");
    if (!rhs.allFinite()) throw std::invalid_argument("circulant solve: non-finite right-hand side");
    for (Index i = 0; i < rhs.size(); ++i) work_[static_cast<std::size_t>(i)] = Complex(rhs[i], 0);
    for (int axis : axes_) transform_axis(axis, /*inverse=*/false);
    for (Index i = 0; i < rhs.size(); ++i) work_[static_cast<std::size_t>(i)] /= den.values()[i];
    for (int axis : axes_) transform_axis(axis, /*inverse=*/true);

    Vector out(rhs.size());
    Scalar residue{0};
    for (Index i = 0; i < rhs.size(); ++i) {
      out[i] = work_[static_cast<std::size_t>(i)].real();
      residue = std::max(residue, std::abs(work_[static_cast<std::size_t>(i)].imag()));
    }
    last_imaginary_residue_ = residue;
    return out;
  }

  /// Largest |imag| discarded by the most recent solve.
  Scalar last_imaginary_residue() const { return last_imaginary_residue_; }

 private:
  static constexpr std::size_t kCacheSlots = 4;

  void transform_axis(int axis, bool inverse) {
    detail::for_each_fiber(dims_, axis, [&](Index start, Index stride, Index n) {
      fiber_in_.resize(static_cast<std::size_t>(n));
      fiber_out_.resize(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i)
        fiber_in_[static_cast<std::size_t>(i)] = work_[static_cast<std::size_t>(start + i * stride)];
      if (inverse)
        fft_.inv(fiber_out_, fiber_in_);
      else
        fft_.fwd(fiber_out_, fiber_in_);
      for (Index i = 0; i < n; ++i)
        work_[static_cast<std::size_t>(start + i * stride)] = fiber_out_[static_cast<std::size_t>(i)];
    });
  }

  Dims dims_;
  AxisList axes_;
  DerivativeFilter filter_;
  Eigen::FFT<Scalar> fft_;
  std::vector<Complex> work_, fiber_in_, fiber_out_;
  std::deque<SpectralDenominator<Scalar>> cache_;
  Scalar last_imaginary_residue_{0};
};

/// Artifact-layer update: solves (F^T F + (2/mu + 1) I) l_A = m + F^T (v + y2/mu)
/// with m = vec(C + X/mu) - l_I.
template <typename Scalar>
DenseTensor<Scalar> solve_la(const Problem<Scalar>& p, const SolverState<Scalar>& s,
                             CirculantSolver<Scalar>& solver) {
  s.check_consistent(p);
  const Scalar mu = s.mu;
  const auto& c = p.observation.values();
  typename DenseTensor<Scalar>::Vector rhs =
      c + s.multiplier.values() / mu - s.intrinsic.values() + p.op.adjoint(s.v + s.y2 / mu);
  return p.observation.with_values(solver.solve(rhs, Scalar(2) / mu + Scalar(1)));
}

/// Intrinsic-layer update against the already-updated artifact layer in `s`:
/// solves (F^T F + I) l_I = w + F^T (u + y1/mu) with w = vec(C + X/mu) - l_A.
template <typename Scalar>
DenseTensor<Scalar> solve_li(const Problem<Scalar>& p, const SolverState<Scalar>& s,
                             CirculantSolver<Scalar>& solver) {
  s.check_consistent(p);
  const Scalar mu = s.mu;
  const auto& c = p.observation.values();
  typename DenseTensor<Scalar>::Vector rhs =
      c + s.multiplier.values() / mu - s.artifact.values() + p.op.adjoint(s.u + s.y1 / mu);
  return p.observation.with_values(solver.solve(rhs, Scalar(1)));
}

}  // namespace layersplit
