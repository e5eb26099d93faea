#pragma once

// Alternating-direction augmented Lagrangian loop separating an observation
// C into an intrinsic layer L_I and an artifact layer L_A:
//
//   min ||L_A||_F^2 + alpha ||F l_I||_1 + beta ||F l_I . F l_A||_1
//       + gamma ||g - F l_I - F l_A||_F^2   s.t.  C = L_I + L_A
//
// with u = F l_I and v = F l_A split out. Each iteration runs, in order:
// L_A solve, L_I solve, u shrink, v shrink (using the new u), multiplier
// ascent, and mu <- rho * mu. The loop stops once
// ||C - L_I - L_A||_F <= delta ||C||_F or max_iters is reached.

#include "layersplit/gradient.hpp"
#include "layersplit/shrinkage.hpp"
#include "layersplit/spectral.hpp"
#include "layersplit/state.hpp"
#include "layersplit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace layersplit {

class SolverDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trips when the residual stays above factor * (running minimum) for
/// `window` consecutive updates.
class DivergenceGuard {
 public:
  DivergenceGuard(double factor, int window) : factor_(factor), window_(window) {}

  /// Returns true when the run should be aborted.
  bool update(double r) {
    best_ = std::min(best_, r);
    above_ = r > factor_ * best_ ? above_ + 1 : 0;
    return above_ >= window_;
  }

  double best() const { return best_; }
  int streak() const { return above_; }

 private:
  double factor_;
  int window_;
  double best_ = std::numeric_limits<double>::infinity();
  int above_ = 0;
};

template <typename Scalar>
struct SolveResult {
  DenseTensor<Scalar> intrinsic;
  DenseTensor<Scalar> artifact;
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  std::vector<double> residual_history;
  std::vector<double> mu_history;
  // ||u - F l_I|| / sqrt(JN) and ||v - F l_A|| / sqrt(JN) after each iteration.
  // Logged only; the stopping rule ignores them.
  std::vector<double> intrinsic_split_gap;
  std::vector<double> artifact_split_gap;
  std::vector<double> objective_history;
};

/// Relative layer-sum residual ||C - L_I - L_A||_F / ||C||_F. When C is zero
/// the absolute norm is returned instead.
template <typename Scalar>
double residual(const DenseTensor<Scalar>& c, const DenseTensor<Scalar>& intrinsic,
                const DenseTensor<Scalar>& artifact) {
  detail::require_same_shape(c, intrinsic, "residual");
  detail::require_same_shape(c, artifact, "residual");
  const Scalar diff = std::sqrt(sum_of_squares(c.values() - intrinsic.values() - artifact.values()));
  const Scalar norm_c = frobenius_norm(c);
  return static_cast<double>(norm_c > Scalar(0) ? diff / norm_c : diff);
}

template <typename Scalar>
double residual(const SolverState<Scalar>& s, const DenseTensor<Scalar>& c) {
  return residual(c, s.intrinsic, s.artifact);
}

/// Relaxed objective evaluated at the state's layers (u and v are ignored).
template <typename Scalar>
double objective_value(const GradientOperator<Scalar>& op,
                       const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& g,
                       const SolverState<Scalar>& s, const SolverConfig& cfg) {
  if (g.size() != op.stacked_size()) throw DimensionError("objective: g has the wrong length");
  const auto fi = op.apply(s.intrinsic.values());
  const auto fa = op.apply(s.artifact.values());
  const double sparsity = static_cast<double>(sum_of_abs(fi));
  const double coupling = static_cast<double>(sum_of_abs(fi.cwiseProduct(fa)));
  const double fidelity = static_cast<double>(sum_of_squares(g - fi - fa));
  return static_cast<double>(sum_of_squares(s.artifact.values())) +
         cfg.effective_alpha() * sparsity + cfg.beta * coupling + cfg.gamma * fidelity;
}

template <typename Scalar>
double objective_value(const Problem<Scalar>& p, const SolverState<Scalar>& s,
                       const SolverConfig& cfg) {
  return objective_value(p.op, p.g, s, cfg);
}

/// Penalty used at iteration t (0-based): mu0 * rho^t.
inline double penalty_at(const SolverConfig& cfg, int t) { return cfg.mu0 * std::pow(cfg.rho, t); }

template <typename Scalar>
SolveResult<Scalar> solve(const DenseTensor<Scalar>& c, const SolverConfig& cfg) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  cfg.validate();
  const AxisList axes = cfg.resolve_axes(c.gradient_axes());

  const Problem<Scalar> p(c, axes);
  CirculantSolver<Scalar> solver(c.dims(), axes);
  auto s = SolverState<Scalar>::initial(p, static_cast<Scalar>(cfg.mu0));
  const Scalar root_jn = std::sqrt(static_cast<Scalar>(std::max<Index>(1, p.op.stacked_size())));

  SolveResult<Scalar> result{s.intrinsic, s.artifact, 0, 0.0, false, {}, {}, {}, {}, {}};
  DivergenceGuard guard(cfg.divergence_factor, cfg.divergence_window);

  for (int t = 0; t < cfg.max_iters; ++t) {
    s.mu = static_cast<Scalar>(penalty_at(cfg, t));
    const Scalar mu = s.mu;

    s.artifact = solve_la(p, s, solver);
    s.intrinsic = solve_li(p, s, solver);
    const Vector fi = p.op.apply(s.intrinsic.values());
    const Vector fa = p.op.apply(s.artifact.values());
    s.u = update_u(p.g, fi, s, cfg);
    s.v = update_v(p.g, fa, s.u, s, cfg);

    const Vector gap = c.values() - s.intrinsic.values() - s.artifact.values();
    s.multiplier.values() += mu * gap;
    s.y1 += mu * (s.u - fi);
    s.y2 += mu * (s.v - fa);
    s.iter = t + 1;

    const Scalar gap_norm = std::sqrt(sum_of_squares(gap));
    const double r = static_cast<double>(p.observation_norm > Scalar(0) ? gap_norm / p.observation_norm
                                                                        : gap_norm);
    s.residual_history.push_back(r);
    result.mu_history.push_back(static_cast<double>(mu));
    result.intrinsic_split_gap.push_back(static_cast<double>(std::sqrt(sum_of_squares(s.u - fi)) / root_jn));
    result.artifact_split_gap.push_back(static_cast<double>(std::sqrt(sum_of_squares(s.v - fa)) / root_jn));
    result.objective_history.push_back(objective_value(p, s, cfg));

    if (!std::isfinite(r)) throw SolverDiverged("residual became non-finite at iteration " + std::to_string(t + 1));
    if (r <= cfg.delta) {
      result.converged = true;
      break;
    }
    if (guard.update(r)) {
      std::ostringstream msg;
      msg << "solver diverged: residual " << r << " stayed above " << cfg.divergence_factor
          << "x its minimum " << guard.best() << " for " << guard.streak() << " iterations (iteration " << t + 1
          << ", mu " << static_cast<double>(mu) << ")";
      throw SolverDiverged(msg.str());
    }
  }

  result.intrinsic = s.intrinsic;
  result.artifact = s.artifact;
  result.iterations = s.iter;
  result.final_residual = s.residual_history.empty() ? 0.0 : s.residual_history.back();
  result.residual_history = std::move(s.residual_history);
  return result;
}

}  // namespace layersplit
