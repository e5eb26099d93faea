#pragma once

// Non-uniform soft thresholding and the closed-form u / v updates.

#include "layersplit/state.hpp"
#include "layersplit/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace layersplit {

/// Per-element non-negative thresholds.
template <typename Scalar>
class ThresholdField {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit ThresholdField(Vector weights) : weights_(std::move(weights)) {
    for (Index i = 0; i < weights_.size(); ++i)
      if (!(weights_[i] >= Scalar(0)) || !std::isfinite(weights_[i]))
        throw std::invalid_argument("shrinkage weights must be finite and non-negative");
  }

  static ThresholdField uniform(Index n, Scalar w) { return ThresholdField(Vector::Constant(n, w)); }

  const Vector& weights() const { return weights_; }
  Index size() const { return weights_.size(); }

 private:
  Vector weights_;
};

template <typename Scalar>
Scalar shrink(Scalar a, Scalar w) {
  const Scalar mag = std::abs(a) - w;
  if (!(mag > Scalar(0))) return Scalar(0);
  return a > Scalar(0) ? mag : -mag;
}

/// sgn(a) * max(|a| - w, 0), elementwise.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> shrink(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& a,
                                                const ThresholdField<Scalar>& w) {
  if (a.size() != w.size()) throw DimensionError("shrink: length mismatch");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(a.size());
  for (Index i = 0; i < a.size(); ++i) out[i] = shrink(a[i], w.weights()[i]);
  return out;
}

/// u = S_{(alpha + beta|v|)/mu}[(2 gamma (g - v) + mu F l_I - y1) / (2 gamma + mu)],
/// using v from the previous iteration.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> update_u(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& g,
                                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& grad_intrinsic,
                                                  const SolverState<Scalar>& s,
                                                  const SolverConfig& cfg) {
  const Index n = g.size();
  if (grad_intrinsic.size() != n || s.v.size() != n || s.y1.size() != n)
    throw DimensionError("update_u: length mismatch");
  const auto alpha = static_cast<Scalar>(cfg.effective_alpha());
  const auto beta = static_cast<Scalar>(cfg.beta);
  const auto two_gamma = static_cast<Scalar>(2.0 * cfg.gamma);
  const Scalar mu = s.mu;
  const Scalar denom = two_gamma + mu;

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar target = (two_gamma * (g[i] - s.v[i]) + mu * grad_intrinsic[i] - s.y1[i]) / denom;
    out[i] = shrink(target, (alpha + beta * std::abs(s.v[i])) / mu);
  }
  return out;
}

/// v = S_{beta|u|/mu}[(2 gamma (g - u) + mu F l_A - y2) / (2 gamma + mu)], where
/// `u` is the freshly updated u.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> update_v(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& g,
                                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& grad_artifact,
                                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& u,
                                                  const SolverState<Scalar>& s,
                                                  const SolverConfig& cfg) {
  const Index n = g.size();
  if (grad_artifact.size() != n || u.size() != n || s.y2.size() != n)
    throw DimensionError("update_v: length mismatch");
  const auto beta = static_cast<Scalar>(cfg.beta);
  const auto two_gamma = static_cast<Scalar>(2.0 * cfg.gamma);
  const Scalar mu = s.mu;
  const Scalar denom = two_gamma + mu;

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar target = (two_gamma * (g[i] - u[i]) + mu * grad_artifact[i] - s.y2[i]) / denom;
    out[i] = shrink(target, beta * std::abs(u[i]) / mu);
  }
  return out;
}

}  // namespace layersplit
