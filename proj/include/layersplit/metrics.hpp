#pragma once

// Full-reference quality measures: gradient consistency (GC) and mean SSIM.

#include "layersplit/gradient.hpp"
#include "layersplit/tensor.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace layersplit {

/// GC(A, B) = sum_j ||grad_j A - grad_j B||_F^2 / prod D_i. Lower is better.
/// `axes` empty means every non-channel axis of the reference.
template <typename Scalar>
double gc(const DenseTensor<Scalar>& reference, const DenseTensor<Scalar>& recovered,
          const AxisList& axes = {}) {
  detail::require_same_shape(reference, recovered, "gc");
  const AxisList use = axes.empty() ? reference.gradient_axes() : axes;
  const auto op = GradientOperator<Scalar>::for_tensor(reference, use);
  const auto diff = op.apply(reference.values() - recovered.values());
  return static_cast<double>(sum_of_squares(diff)) / static_cast<double>(reference.size());
}

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

struct SsimValue {
  double value = 1.0;
  /// True when the image was smaller than the window and a single global
  /// window was used instead.
  bool global_fallback = false;
};

namespace detail {

inline std::vector<double> gaussian_taps(int window, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(window));
  const double c = 0.5 * (window - 1);
  double sum = 0.0;
  for (int i = 0; i < window; ++i) {
    const double d = i - c;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (double& x : w) x /= sum;
  return w;
}

// Separable 'valid' correlation of an H x W plane.
inline Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& x, const std::vector<double>& w) {
  const Index k = static_cast<Index>(w.size());
  const Index h = x.rows() - k + 1, wd = x.cols() - k + 1;
  Eigen::MatrixXd rows(h, x.cols());
  for (Index c = 0; c < x.cols(); ++c)
    for (Index r = 0; r < h; ++r) {
      double acc = 0.0;
      for (Index t = 0; t < k; ++t) acc += w[static_cast<std::size_t>(t)] * x(r + t, c);
      rows(r, c) = acc;
    }
  Eigen::MatrixXd out(h, wd);
  for (Index c = 0; c < wd; ++c)
    for (Index r = 0; r < h; ++r) {
      double acc = 0.0;
      for (Index t = 0; t < k; ++t) acc += w[static_cast<std::size_t>(t)] * rows(r, c + t);
      out(r, c) = acc;
    }
  return out;
}

inline double ssim_formula(double mx, double my, double vx, double vy, double cxy, double c1,
                           double c2) {
  return ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

}  // namespace detail

/// Mean SSIM of two planes with a Gaussian window over all fully-contained
/// window positions.
inline SsimValue ssim_plane(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                            const SsimOptions& opt = {}) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("ssim: plane size mismatch");
  const double c1 = std::pow(opt.k1 * opt.dynamic_range, 2);
  const double c2 = std::pow(opt.k2 * opt.dynamic_range, 2);

  if (a.rows() < opt.window || a.cols() < opt.window) {
    const double n = static_cast<double>(a.size());
    const double mx = a.sum() / n, my = b.sum() / n;
    const double vx = (a.array() - mx).square().sum() / n;
    const double vy = (b.array() - my).square().sum() / n;
    const double cxy = ((a.array() - mx) * (b.array() - my)).sum() / n;
    return {detail::ssim_formula(mx, my, vx, vy, cxy, c1, c2), true};
  }

  const auto w = detail::gaussian_taps(opt.window, opt.sigma);
  const Eigen::MatrixXd mx = detail::filter_valid(a, w);
  const Eigen::MatrixXd my = detail::filter_valid(b, w);
  const Eigen::MatrixXd xx = detail::filter_valid(a.cwiseProduct(a), w);
  const Eigen::MatrixXd yy = detail::filter_valid(b.cwiseProduct(b), w);
  const Eigen::MatrixXd xy = detail::filter_valid(a.cwiseProduct(b), w);

  double total = 0.0;
  for (Index c = 0; c < mx.cols(); ++c)
    for (Index r = 0; r < mx.rows(); ++r) {
      const double ux = mx(r, c), uy = my(r, c);
      total += detail::ssim_formula(ux, uy, xx(r, c) - ux * ux, yy(r, c) - uy * uy,
                                    xy(r, c) - ux * uy, c1, c2);
    }
  return {total / static_cast<double>(mx.size()), false};
}

/// Extracts every (axis0, axis1) plane of t; planes are ordered by storage.
template <typename Scalar>
std::vector<Eigen::MatrixXd> planes(const DenseTensor<Scalar>& t) {
  const Index h = t.extent(0), w = t.extent(1);
  const Index plane = h * w;
  std::vector<Eigen::MatrixXd> out;
  for (Index p = 0; p < t.size() / plane; ++p) {
    Eigen::MatrixXd m(h, w);
    for (Index c = 0; c < w; ++c)
      for (Index r = 0; r < h; ++r) m(r, c) = static_cast<double>(t.values()[p * plane + c * h + r]);
    out.push_back(std::move(m));
  }
  return out;
}

/// Mean SSIM over all 2-D planes (channels and frames averaged).
template <typename Scalar>
SsimValue ssim(const DenseTensor<Scalar>& reference, const DenseTensor<Scalar>& recovered,
               const SsimOptions& opt = {}) {
  detail::require_same_shape(reference, recovered, "ssim");
  const auto pa = planes(reference), pb = planes(recovered);
  SsimValue out{0.0, false};
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const auto v = ssim_plane(pa[i], pb[i], opt);
    out.value += v.value;
    out.global_fallback = out.global_fallback || v.global_fallback;
  }
  out.value /= static_cast<double>(pa.size());
  return out;
}

/// BT.601 luma of a 3-channel tensor; the channel axis is dropped. Returns
/// the input unchanged when it has no 3-channel axis.
template <typename Scalar>
DenseTensor<Scalar> luma(const DenseTensor<Scalar>& t) {
  if (!t.channel_axis() || t.extent(*t.channel_axis()) != 3) return t;
  const int ch = *t.channel_axis();
  Dims out_dims;
  for (int k = 0; k < t.order(); ++k)
    if (k != ch) out_dims.push_back(t.extent(k));
  if (out_dims.size() < 2) throw DimensionError("luma: too few axes");
  const Dims strides = column_major_strides(t.dims());
  const Index cs = strides[static_cast<std::size_t>(ch)];
  const Index block = cs * 3;
  typename DenseTensor<Scalar>::Vector v(t.size() / 3);
  Index o = 0;
  for (Index outer = 0; outer < t.size() / block; ++outer)
    for (Index i = 0; i < cs; ++i) {
      const Index base = outer * block + i;
      v[o++] = Scalar(0.299) * t.values()[base] + Scalar(0.587) * t.values()[base + cs] +
               Scalar(0.114) * t.values()[base + 2 * cs];
    }
  return DenseTensor<Scalar>(out_dims, std::move(v));
}

struct MetricsReport {
  /// Luma SSIM for 3-channel input, plain mean SSIM otherwise.
  double ssim = 1.0;
  /// SSIM averaged over every channel plane.
  double ssim_channel_mean = 1.0;
  std::vector<double> ssim_per_channel;
  bool ssim_global_fallback = false;
  /// GC on unit-range intensities.
  double gc = 0.0;
  /// The same GC on 0..255 code values (gc * 255^2).
  double gc_8bit = 0.0;
};

template <typename Scalar>
MetricsReport evaluate(const DenseTensor<Scalar>& reference, const DenseTensor<Scalar>& recovered,
                       const AxisList& axes = {}) {
  MetricsReport r;
  const auto all = ssim(reference, recovered);
  r.ssim_channel_mean = all.value;
  r.ssim_global_fallback = all.global_fallback;
  r.ssim = all.value;

  if (const auto ch = reference.channel_axis()) {
    const Index nc = reference.extent(*ch);
    const auto pa = planes(reference), pb = planes(recovered);
    // Plane p has channel (p mod nc) when the channel axis is axis 2.
    if (*ch == 2) {
      std::vector<double> sums(static_cast<std::size_t>(nc), 0.0);
      std::vector<int> counts(static_cast<std::size_t>(nc), 0);
      for (std::size_t p = 0; p < pa.size(); ++p) {
        const auto c = static_cast<std::size_t>(static_cast<Index>(p) % nc);
        sums[c] += ssim_plane(pa[p], pb[p]).value;
        ++counts[c];
      }
      for (std::size_t c = 0; c < sums.size(); ++c) r.ssim_per_channel.push_back(sums[c] / counts[c]);
    }
    if (nc == 3) {
      const auto l = ssim(luma(reference), luma(recovered));
      r.ssim = l.value;
      r.ssim_global_fallback = r.ssim_global_fallback || l.global_fallback;
    }
  }
  r.gc = gc(reference, recovered, axes);
  r.gc_8bit = r.gc * 255.0 * 255.0;
  return r;
}

/// Mean squared difference across 8x8 block boundaries divided by the mean
/// squared difference at interior positions, over rows and columns of every
/// plane (no wraparound). Values well above 1 indicate visible blocking.
template <typename Scalar>
double blocking_ratio(const DenseTensor<Scalar>& t, int block = 8) {
  double boundary = 0.0, interior = 0.0;
  long nb = 0, ni = 0;
  for (const auto& p : planes(t)) {
    for (Index c = 0; c + 1 < p.cols(); ++c)
      for (Index r = 0; r < p.rows(); ++r) {
        const double d = p(r, c + 1) - p(r, c);
        if ((c + 1) % block == 0) boundary += d * d, ++nb;
        else interior += d * d, ++ni;
      }
    for (Index c = 0; c < p.cols(); ++c)
      for (Index r = 0; r + 1 < p.rows(); ++r) {
        const double d = p(r + 1, c) - p(r, c);
        if ((r + 1) % block == 0) boundary += d * d, ++nb;
        else interior += d * d, ++ni;
      }
  }
  if (nb == 0 || ni == 0) return 1.0;
  boundary /= static_cast<double>(nb);
  interior /= static_cast<double>(ni);
  if (interior == 0.0) return boundary == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return boundary / interior;
}

}  // namespace layersplit
