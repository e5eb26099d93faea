#include "layersplit/pipelines.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace layersplit {

namespace {

using Block = Eigen::Matrix<double, 8, 8>;

constexpr std::array<int, 64> kLuminance = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr std::array<int, 64> kChrominance = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

const Block& dct_matrix() {
  static const Block m = [] {
    Block d;
    for (int k = 0; k < 8; ++k)
      for (int n = 0; n < 8; ++n) {
        const double scale = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
        d(k, n) = scale * std::cos(std::numbers::pi * (2 * n + 1) * k / 16.0);
      }
    return d;
  }();
  return m;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Calls fn(plane_offset, rows, cols) for every (axis0, axis1) plane.
template <typename Fn>
void for_each_plane(const Tensor& t, Fn&& fn) {
  const Index h = t.extent(0), w = t.extent(1), plane = h * w;
  for (Index p = 0; p < t.size() / plane; ++p) fn(p * plane, h, w);
}

Eigen::MatrixXd read_plane(const Tensor::Vector& v, Index offset, Index h, Index w) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data() + offset, h, w);
}

void write_plane(Tensor::Vector& v, Index offset, const Eigen::MatrixXd& m) {
  Eigen::Map<Eigen::MatrixXd>(v.data() + offset, m.rows(), m.cols()) = m;
}

// Quantize one plane of code values in place (level shift, DCT, quantize,
// dequantize, inverse DCT). The plane is edge-padded to a multiple of 8.
Eigen::MatrixXd code_plane(const Eigen::MatrixXd& plane, const Block& table) {
  const Index h = plane.rows(), w = plane.cols();
  const Index ph = (h + 7) / 8 * 8, pw = (w + 7) / 8 * 8;
  Eigen::MatrixXd padded(ph, pw);
  for (Index c = 0; c < pw; ++c)
    for (Index r = 0; r < ph; ++r) padded(r, c) = plane(std::min(r, h - 1), std::min(c, w - 1));

  for (Index br = 0; br < ph; br += 8)
    for (Index bc = 0; bc < pw; bc += 8) {
      const Block block = padded.block<8, 8>(br, bc).array() - 128.0;
      Block coeffs = dct8(block);
      for (int i = 0; i < 64; ++i) coeffs(i) = std::round(coeffs(i) / table(i)) * table(i);
      padded.block<8, 8>(br, bc) = idct8(coeffs).array() + 128.0;
    }
  return padded.topLeftCorner(h, w);
}

std::vector<std::pair<Index, Index>> sorted_window(int radius) {
  std::vector<std::pair<Index, Index>> offs;
  for (int dc = -radius; dc <= radius; ++dc)
    for (int dr = -radius; dr <= radius; ++dr) offs.emplace_back(dr, dc);
  return offs;
}

Eigen::MatrixXd median_plane(const Eigen::MatrixXd& in, int radius) {
  const Index h = in.rows(), w = in.cols();
  Eigen::MatrixXd out(h, w);
  const auto offs = sorted_window(radius);
  std::vector<double> window(offs.size());
  for (Index c = 0; c < w; ++c)
    for (Index r = 0; r < h; ++r) {
      for (std::size_t i = 0; i < offs.size(); ++i) {
        const Index rr = std::clamp<Index>(r + offs[i].first, 0, h - 1);
        const Index cc = std::clamp<Index>(c + offs[i].second, 0, w - 1);
        window[i] = in(rr, cc);
      }
      auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
      std::nth_element(window.begin(), mid, window.end());
      out(r, c) = *mid;
    }
  return out;
}

Eigen::MatrixXd bilateral_plane(const Eigen::MatrixXd& in, double range_sigma) {
  constexpr double kSpatialSigma = 1.5;
  constexpr int kRadius = 3;
  const Index h = in.rows(), w = in.cols();
  Eigen::MatrixXd out(h, w);
  const auto offs = sorted_window(kRadius);
  std::vector<double> spatial(offs.size());
  for (std::size_t i = 0; i < offs.size(); ++i) {
    const double d2 = static_cast<double>(offs[i].first * offs[i].first + offs[i].second * offs[i].second);
    spatial[i] = std::exp(-d2 / (2.0 * kSpatialSigma * kSpatialSigma));
  }
  const double inv_range = 1.0 / (2.0 * range_sigma * range_sigma);
  for (Index c = 0; c < w; ++c)
    for (Index r = 0; r < h; ++r) {
      const double center = in(r, c);
      double acc = 0.0, norm = 0.0;
      for (std::size_t i = 0; i < offs.size(); ++i) {
        const Index rr = std::clamp<Index>(r + offs[i].first, 0, h - 1);
        const Index cc = std::clamp<Index>(c + offs[i].second, 0, w - 1);
        const double v = in(rr, cc);
        const double wt = spatial[i] * std::exp(-(v - center) * (v - center) * inv_range);
        acc += wt * v;
        norm += wt;
      }
      out(r, c) = acc / norm;
    }
  return out;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::dslp: return "dslp";
    case Variant::vdslp: return "vdslp";
    case Variant::tv: return "tv";
    case Variant::idslp: return "idslp";
    case Variant::ivdslp: return "ivdslp";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::dslp, Variant::vdslp, Variant::tv, Variant::idslp, Variant::ivdslp})
    if (to_string(v) == name) return v;
  throw std::invalid_argument("unknown variant '" + std::string(name) + "'");
}

std::string_view to_string(DenoiserKind k) {
  return k == DenoiserKind::bilateral ? "bilateral" : "median";
}

DenoiserKind parse_denoiser(std::string_view name) {
  if (name == "bilateral") return DenoiserKind::bilateral;
  if (name == "median") return DenoiserKind::median;
  throw std::invalid_argument("unknown denoiser '" + std::string(name) + "'");
}

PipelineSpec PipelineSpec::defaults(Variant v) {
  PipelineSpec spec;
  spec.variant = v;
  if (v == Variant::idslp || v == Variant::ivdslp) {
    spec.solver.alpha = 0.3;
    spec.denoiser = DenoiserSpec{};
  }
  return spec;
}

SolverConfig PipelineSpec::effective_solver(const Tensor& input) const {
  SolverConfig cfg = solver;
  if (variant == Variant::tv) {
    cfg.beta = 0.0;
    cfg.gamma = 0.0;
  }
  if (cfg.axes.empty()) {
    if (variant == Variant::vdslp || variant == Variant::ivdslp)
      cfg.axes = {0, 1, 3};
    else
      cfg.axes = {0, 1};
  }
  (void)input;
  return cfg;
}

void PipelineSpec::validate(const Tensor& input) const {
  solver.validate();
  const bool video = variant == Variant::vdslp || variant == Variant::ivdslp;
  if (video && input.order() != 4)
    throw std::invalid_argument(std::string(to_string(variant)) +
                                " needs a 4-order {H, W, C, T} video tensor");
  if (video && !solver.axes.empty() && solver.axes.size() != 3)
    throw std::invalid_argument(std::string(to_string(variant)) + " needs three gradient axes");
  const bool two_stage = variant == Variant::idslp || variant == Variant::ivdslp;
  if (two_stage && !denoiser)
    throw std::invalid_argument(std::string(to_string(variant)) + " needs a denoiser");
  if (denoiser && !(denoiser->strength >= 0.0))
    throw std::invalid_argument("denoiser strength must be >= 0");
}

PipelineResult run_pipeline(const Tensor& input, const PipelineSpec& spec, const Tensor* reference) {
  spec.validate(input);
  if (reference && !reference->same_shape(input))
    throw DimensionError("reference dims " + to_string(reference->dims()) + " differ from input " +
                         to_string(input.dims()));

  StageTimings timings;
  const bool two_stage = spec.variant == Variant::idslp || spec.variant == Variant::ivdslp;

  auto t0 = std::chrono::steady_clock::now();
  const Tensor observed = two_stage ? placeholder_denoiser(input, *spec.denoiser) : input;
  timings.denoise_seconds = two_stage ? seconds_since(t0) : 0.0;

  t0 = std::chrono::steady_clock::now();
  auto solved = solve(observed, spec.effective_solver(input));
  timings.solve_seconds = seconds_since(t0);

  Tensor intrinsic = solved.intrinsic;
  Tensor artifact = two_stage ? input.with_values(input.values() - intrinsic.values()) : solved.artifact;

  std::optional<MetricsReport> metrics;
  if (reference) {
    t0 = std::chrono::steady_clock::now();
    metrics = evaluate(*reference, intrinsic, AxisList{0, 1});
    timings.metrics_seconds = seconds_since(t0);
  }
  return PipelineResult{std::move(intrinsic), std::move(artifact), std::move(solved), std::move(metrics),
                        timings};
}

Eigen::Matrix<double, 8, 8> quantization_table(int quality, bool chroma) {
  if (quality < 1 || quality > 100) throw std::invalid_argument("quality must be in [1, 100]");
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  const auto& base = chroma ? kChrominance : kLuminance;
  Block t;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      const int q = (base[static_cast<std::size_t>(r * 8 + c)] * scale + 50) / 100;
      t(r, c) = static_cast<double>(std::clamp(q, 1, 255));
    }
  return t;
}

Eigen::Matrix<double, 8, 8> dct8(const Eigen::Matrix<double, 8, 8>& block) {
  return dct_matrix() * block * dct_matrix().transpose();
}

Eigen::Matrix<double, 8, 8> idct8(const Eigen::Matrix<double, 8, 8>& coeffs) {
  return dct_matrix().transpose() * coeffs * dct_matrix();
}

Tensor synthesize_blocking(const Tensor& clean, int quality) {
  const Block luma_table = quantization_table(quality, false);
  const Block chroma_table = quantization_table(quality, true);
  Tensor out = clean;
  auto& v = out.values();
  const Index h = clean.extent(0), w = clean.extent(1), plane = h * w;

  const auto ch = clean.channel_axis();
  const Index channels = ch ? clean.extent(*ch) : 1;
  if (ch && *ch != 2) throw std::invalid_argument("synthesize_blocking expects the channel axis at 2");
  if (channels != 1 && channels != 3)
    throw std::invalid_argument("synthesize_blocking supports 1 or 3 channels");

  const Index groups = clean.size() / (plane * channels);
  for (Index gi = 0; gi < groups; ++gi) {
    const Index base = gi * plane * channels;
    if (channels == 1) {
      Eigen::MatrixXd y = read_plane(v, base, h, w) * 255.0;
      write_plane(v, base, code_plane(y, luma_table));
      continue;
    }
    const Eigen::MatrixXd r = read_plane(v, base, h, w) * 255.0;
    const Eigen::MatrixXd g = read_plane(v, base + plane, h, w) * 255.0;
    const Eigen::MatrixXd b = read_plane(v, base + 2 * plane, h, w) * 255.0;
    const Eigen::MatrixXd y = 0.299 * r + 0.587 * g + 0.114 * b;
    const Eigen::MatrixXd cb = (-0.168736 * r - 0.331264 * g + 0.5 * b).array() + 128.0;
    const Eigen::MatrixXd cr = (0.5 * r - 0.418688 * g - 0.081312 * b).array() + 128.0;
    const Eigen::MatrixXd yq = code_plane(y, luma_table);
    const Eigen::MatrixXd cbq = code_plane(cb, chroma_table).array() - 128.0;
    const Eigen::MatrixXd crq = code_plane(cr, chroma_table).array() - 128.0;
    write_plane(v, base, yq + 1.402 * crq);
    write_plane(v, base + plane, yq - 0.344136 * cbq - 0.714136 * crq);
    write_plane(v, base + 2 * plane, yq + 1.772 * cbq);
  }
  for (Index i = 0; i < v.size(); ++i) v[i] = std::clamp(std::round(v[i]), 0.0, 255.0) / 255.0;
  return out;
}

Tensor placeholder_denoiser(const Tensor& input, const DenoiserSpec& spec) {
  if (!(spec.strength >= 0.0)) throw std::invalid_argument("denoiser strength must be >= 0");
  if (spec.strength == 0.0) return input;
  Tensor out = input;
  for_each_plane(input, [&](Index offset, Index h, Index w) {
    const Eigen::MatrixXd p = read_plane(input.values(), offset, h, w);
    if (spec.kind == DenoiserKind::median) {
      const int radius = std::max(1, static_cast<int>(std::ceil(spec.strength / 25.0)));
      write_plane(out.values(), offset, median_plane(p, radius));
    } else {
      write_plane(out.values(), offset, bilateral_plane(p, spec.strength / 255.0));
    }
  });
  return out;
}

Tensor amplify_artifact(const Tensor& artifact, double gain) {
  Tensor::Vector v = (artifact.values() * gain).array() + 0.5;
  return artifact.with_values(v.cwiseMax(0.0).cwiseMin(1.0));
}

}  // namespace layersplit
