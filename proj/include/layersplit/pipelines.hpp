#pragma once

// End-to-end decomposition variants plus the helpers used to build test
// material: a block-DCT compression simulator and a simple pre-smoother.
//
// Tensor layouts used throughout:
//   gray image   {H, W}
//   color image  {H, W, 3}       channel axis 2
//   video        {H, W, C, T}    channel axis 2, C in {1, 3}

#include "layersplit/admm.hpp"
#include "layersplit/metrics.hpp"
#include "layersplit/tensor.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <string_view>

namespace layersplit {

enum class Variant { dslp, vdslp, tv, idslp, ivdslp };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

enum class DenoiserKind { bilateral, median };

std::string_view to_string(DenoiserKind k);
DenoiserKind parse_denoiser(std::string_view name);

struct DenoiserSpec {
  DenoiserKind kind = DenoiserKind::bilateral;
  /// Noise level in 8-bit code values (bilateral range sigma); for the median
  /// kind the window radius is ceil(strength / 25).
  double strength = 25.0;
};

struct PipelineSpec {
  Variant variant = Variant::dslp;
  SolverConfig solver;
  std::optional<DenoiserSpec> denoiser;

  /// Recommended settings: alpha 0.6 for plain variants, alpha 0.3 after a
  /// strength-25 bilateral pre-smoothing for the two-stage variants.
  static PipelineSpec defaults(Variant v);

  /// Solver settings actually used (tv zeroes beta and gamma; axes are
  /// spatial, or spatio-temporal for the video variants).
  SolverConfig effective_solver(const Tensor& input) const;

  void validate(const Tensor& input) const;
};

struct StageTimings {
  double denoise_seconds = 0.0;
  double solve_seconds = 0.0;
  double metrics_seconds = 0.0;
};

struct PipelineResult {
  Tensor intrinsic;
  /// input - intrinsic for the two-stage variants, the solver's L_A otherwise.
  Tensor artifact;
  SolveResult<double> solve;
  std::optional<MetricsReport> metrics;
  StageTimings timings;
};

PipelineResult run_pipeline(const Tensor& input, const PipelineSpec& spec,
                            const Tensor* reference = nullptr);

/// Standard JPEG quantization table scaled for `quality` (1..100), row-major
/// in natural (not zigzag) order.
Eigen::Matrix<double, 8, 8> quantization_table(int quality, bool chroma);

/// Orthonormal 8x8 DCT-II and its inverse.
Eigen::Matrix<double, 8, 8> dct8(const Eigen::Matrix<double, 8, 8>& block);
Eigen::Matrix<double, 8, 8> idct8(const Eigen::Matrix<double, 8, 8>& coeffs);

/// Decoded result of baseline-JPEG-style coding: 8x8 DCT, quantization with
/// the scaled standard tables, dequantization and inverse DCT, rounded to
/// 8-bit code values. Color input goes through full-range YCbCr without
/// chroma subsampling. Planes are edge-padded to a multiple of 8 and cropped
/// back.
Tensor synthesize_blocking(const Tensor& clean, int quality);

/// Edge-preserving pre-smoother applied per 2-D plane; strength 0 is the
/// identity.
Tensor placeholder_denoiser(const Tensor& input, const DenoiserSpec& spec);

/// 10x amplified artifact view around mid-gray, clamped to [0, 1].
Tensor amplify_artifact(const Tensor& artifact, double gain = 10.0);

}  // namespace layersplit
