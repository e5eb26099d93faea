#pragma once

#include "layersplit/gradient.hpp"
#include "layersplit/tensor.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace layersplit {

/// Weights, penalty schedule and stopping rule for one decomposition.
///
/// `alpha` is expressed per 8-bit code value: tensors hold intensities in
/// [0, 1] and the sparsity threshold applied to them is
/// alpha / intensity_scale. beta and gamma multiply terms that are quadratic
/// in intensity, so they are scale-free. Running on unit-range data with this
/// convention produces exactly the iterates of running on 0..255 data with
/// the raw alpha, rescaled by 1/255.
struct SolverConfig {
  double alpha = 0.6;
  double beta = 30.0;
  double gamma = 6.0;
  double mu0 = 0.03;
  double rho = 1.35;
  double delta = 1e-7;
  int max_iters = 200;
  double intensity_scale = 255.0;
  /// Gradient axes; empty means every non-channel axis of the input.
  AxisList axes;
  /// Divergence guard: abort when the residual stays above
  /// divergence_factor * (its running minimum) for divergence_window
  /// consecutive iterations.
  double divergence_factor = 10.0;
  int divergence_window = 20;

  double effective_alpha() const { return alpha / intensity_scale; }

  void validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("solver config: " + msg); };
    if (!(alpha >= 0.0)) fail("alpha must be >= 0");
    if (!(beta >= 0.0)) fail("beta must be >= 0");
    if (!(gamma >= 0.0)) fail("gamma must be >= 0");
    if (!(mu0 > 0.0)) fail("mu0 must be > 0");
    if (!(rho > 1.0)) fail("rho must be > 1");
    if (!(delta > 0.0)) fail("delta must be > 0");
    if (max_iters < 1) fail("max_iters must be positive");
    if (!(intensity_scale > 0.0)) fail("intensity_scale must be > 0");
    if (!(divergence_factor > 1.0) || divergence_window < 1) fail("invalid divergence guard");
  }

  AxisList resolve_axes(const AxisList& tensor_default) const {
    return axes.empty() ? tensor_default : axes;
  }
};

/// The fixed data of one solve: C, its gradient operator F and g = F c.
template <typename Scalar>
struct Problem {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Problem(DenseTensor<Scalar> c, const AxisList& axes,
          DerivativeFilter filter = DerivativeFilter::forward_difference())
      : observation(std::move(c)),
        op(GradientOperator<Scalar>::for_tensor(observation, axes, std::move(filter))),
        g(op.apply(observation.values())),
        observation_norm(frobenius_norm(observation)) {}

  DenseTensor<Scalar> observation;
  GradientOperator<Scalar> op;
  Vector g;
  Scalar observation_norm;
};

/// Iterates of the alternating-direction loop. u, v, y1, y2 are stacked
/// gradient-domain vectors of length J * N.
template <typename Scalar>
struct SolverState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  DenseTensor<Scalar> intrinsic;   // L_I
  DenseTensor<Scalar> artifact;    // L_A
  DenseTensor<Scalar> multiplier;  // X, for C = L_I + L_A
  Vector u, v, y1, y2;
  Scalar mu;
  int iter = 0;
  std::vector<double> residual_history;

  /// All-zero start with penalty mu0.
  static SolverState initial(const Problem<Scalar>& p, Scalar mu0) {
    DenseTensor<Scalar> zero(p.observation.dims(), p.observation.channel_axis());
    const Index m = p.op.stacked_size();
    return SolverState{zero,          zero,          zero,         Vector::Zero(m),
                       Vector::Zero(m), Vector::Zero(m), Vector::Zero(m), mu0, 0, {}};
  }

  void check_consistent(const Problem<Scalar>& p) const {
    if (!intrinsic.same_shape(p.observation) || !artifact.same_shape(p.observation) ||
        !multiplier.same_shape(p.observation))
      throw DimensionError("solver state layers do not match the observation");
    const Index m = p.op.stacked_size();
    if (u.size() != m || v.size() != m || y1.size() != m || y2.size() != m)
      throw DimensionError("solver state gradient vectors have the wrong length");
    if (!(mu > Scalar(0))) throw std::invalid_argument("penalty mu must be positive");
  }
};

}  // namespace layersplit
