// layersplit command-line tool: deblock, synthesize, sweep, metrics.
//
// Exit status: 0 success (deblock: converged), 2 deblock reached max-iters
// without converging, 1 any error.

#include "layersplit/image_io.hpp"
#include "layersplit/manifest.hpp"
#include "layersplit/pipelines.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace layersplit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_solver_flags(CLI::App* cmd, SolverConfig& cfg) {
  cmd->add_option("--alpha", cfg.alpha, "gradient sparsity weight (8-bit code-value units)")->capture_default_str();
  cmd->add_option("--beta", cfg.beta, "gradient independence weight")->capture_default_str();
  cmd->add_option("--gamma", cfg.gamma, "gradient fidelity weight")->capture_default_str();
  cmd->add_option("--mu0", cfg.mu0, "initial penalty")->capture_default_str();
  cmd->add_option("--rho", cfg.rho, "penalty growth factor (> 1)")->capture_default_str();
  cmd->add_option("--delta", cfg.delta, "relative residual tolerance")->capture_default_str();
  cmd->add_option("--max-iters", cfg.max_iters, "iteration cap")->capture_default_str();
  cmd->add_option("--intensity-scale", cfg.intensity_scale, "code values per unit intensity for alpha")
      ->capture_default_str();
}

bool is_video(const Tensor& t) { return t.order() == 4; }

long write_layer(const fs::path& path, const Tensor& t, int depth) {
  if (is_video(t)) {
    long clamped = 0;
    fs::create_directories(path);
    for (Index k = 0; k < t.extent(3); ++k) {
      std::ostringstream name;
      name << "frame_" << std::setw(4) << std::setfill('0') << k << ".png";
      clamped += write_png(path / name.str(), frame(t, k), depth);
    }
    return clamped;
  }
  return write_png(path, t, depth);
}

std::string layer_name(const std::string& stem, const Tensor& t) {
  return is_video(t) ? stem : stem + ".png";
}

// ---- deblock ----

struct DeblockArgs {
  std::string input;
  std::string out_dir;
  std::string variant = "dslp";
  SolverConfig solver;
  std::string denoiser;
  double denoise_strength = 25.0;
  std::string reference;
  std::string metrics_json;
  std::string from_manifest;
  bool quiet = false;
};

int cmd_deblock(DeblockArgs a, const CLI::App& cmd) {
  RunManifest m;
  if (!a.from_manifest.empty()) {
    m = read_manifest(a.from_manifest);
    if (m.command != "deblock") throw UsageError("manifest was not produced by deblock");
    if (a.out_dir.empty()) throw UsageError("--out-dir is required");
    if (m.inputs.empty()) throw UsageError("manifest lists no inputs");
  } else {
    if (a.input.empty() || a.out_dir.empty()) throw UsageError("deblock needs an input and --out-dir");
    const Variant v = parse_variant(a.variant);
    m.spec = PipelineSpec::defaults(v);
    // Plain flags override the variant defaults only when given explicitly.
    auto given = [&](const char* name) { return cmd.count(name) > 0; };
    const SolverConfig& f = a.solver;
    SolverConfig& s = m.spec.solver;
    if (given("--alpha")) s.alpha = f.alpha;
    if (given("--beta")) s.beta = f.beta;
    if (given("--gamma")) s.gamma = f.gamma;
    if (given("--mu0")) s.mu0 = f.mu0;
    if (given("--rho")) s.rho = f.rho;
    if (given("--delta")) s.delta = f.delta;
    if (given("--max-iters")) s.max_iters = f.max_iters;
    if (given("--intensity-scale")) s.intensity_scale = f.intensity_scale;
    if (!a.denoiser.empty() || given("--denoise-strength")) {
      DenoiserSpec d = m.spec.denoiser.value_or(DenoiserSpec{});
      if (!a.denoiser.empty()) d.kind = parse_denoiser(a.denoiser);
      d.strength = a.denoise_strength;
      m.spec.denoiser = d;
    }
    if (v == Variant::tv) {
      s.beta = 0.0;
      s.gamma = 0.0;
    }
    m.inputs = {fs::absolute(a.input).string()};
    if (!a.reference.empty()) m.reference = fs::absolute(a.reference).string();
  }
  if (!a.metrics_json.empty() && !m.reference) throw UsageError("--metrics-json requires --reference");

  const fs::path out(a.out_dir);
  fs::create_directories(out);

  const Tensor input = read_input(m.inputs.front());
  std::optional<Tensor> reference;
  if (m.reference) reference = read_input(*m.reference);

  const PipelineResult r = run_pipeline(input, m.spec, reference ? &*reference : nullptr);
  m.spec.solver = m.spec.effective_solver(input);

  const std::string intrinsic_name = layer_name("intrinsic", input);
  const std::string artifact_name = layer_name("artifact", input);
  const std::string amplified_name = layer_name("artifact_x10", input);
  // The 8-bit intrinsic file cannot hold overshoot outside [0, 1]; whatever is
  // clamped off moves into the stored artifact so the two files still sum to
  // the input.
  const Eigen::VectorXd clamped = r.intrinsic.values().cwiseMax(0.0).cwiseMin(1.0);
  const long overshoot = (clamped - r.intrinsic.values()).cwiseAbs().cwiseSign().sum();
  write_layer(out / intrinsic_name, r.intrinsic.with_values(clamped), 8);
  const Tensor stored_artifact = r.artifact.with_values(
      (r.artifact.values() + r.intrinsic.values() - clamped).array() + 0.5);
  const long clipped = write_layer(out / artifact_name, stored_artifact, 16);
  write_layer(out / amplified_name, amplify_artifact(r.artifact), 8);
  if (overshoot > 0)
    std::cerr << "note: " << overshoot << " intrinsic samples fell outside [0, 1]; the excess is stored in "
              << artifact_name << "\n";
  if (clipped > 0)
    std::cerr << "warning: " << clipped << " artifact samples exceeded +-0.5 and were clipped in "
              << artifact_name << "\n";

  m.outputs = {{"intrinsic", intrinsic_name},
               {"artifact", artifact_name},
               {"artifact_offset", "0.5"},
               {"artifact_x10", amplified_name}};
  m.timings_seconds = {{"denoise", r.timings.denoise_seconds},
                       {"solve", r.timings.solve_seconds},
                       {"metrics", r.timings.metrics_seconds}};
  m.summary = RunSummary{r.solve.iterations, r.solve.converged, r.solve.final_residual};

  if (r.metrics) {
    const fs::path mpath = a.metrics_json.empty() ? out / "metrics.json" : fs::path(a.metrics_json);
    write_json(mpath, metrics_json(*r.metrics, *m.summary));
    m.outputs["metrics"] = mpath.string();
  }
  write_json(out / "manifest.json", to_json(m));

  if (!a.quiet) {
    std::cout << to_string(m.spec.variant) << ": " << r.solve.iterations << " iterations, residual "
              << r.solve.final_residual << (r.solve.converged ? " (converged)" : " (not converged)") << "\n";
    if (r.metrics) std::cout << "ssim " << r.metrics->ssim << "  gc " << r.metrics->gc << "\n";
  }
  return r.solve.converged ? kExitOk : kExitNotConverged;
}

// ---- synthesize ----

int cmd_synthesize(const std::string& input, const std::string& output, int quality) {
  const Tensor clean = read_input(input);
  const Tensor blocked = synthesize_blocking(clean, quality);
  const fs::path out(output);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  if (is_video(blocked)) {
    write_frames(out, blocked, 8);
  } else {
    write_png(out, blocked, 8);
  }
  RunManifest m;
  m.command = "synthesize";
  m.inputs = {fs::absolute(input).string()};
  m.quality = quality;
  m.outputs = {{"blocked", out.filename().string()}};
  fs::path mpath = out;
  mpath += ".manifest.json";
  write_json(mpath, to_json(m));
  return kExitOk;
}

// ---- sweep ----

struct SweepArgs {
  std::string input;
  std::string reference;
  int quality = 0;
  std::string param = "alpha";
  std::vector<double> values;
  std::string variant = "dslp";
  SolverConfig solver;
  std::string csv;
  std::string json;
};

unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LAYERSPLIT_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap < 1) throw UsageError("LAYERSPLIT_THREADS must be a positive integer");
      n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    } catch (const std::logic_error&) {
      throw UsageError("LAYERSPLIT_THREADS must be a positive integer");
    }
  }
  return std::min<unsigned>(n, static_cast<unsigned>(std::max<std::size_t>(1, jobs)));
}

int cmd_sweep(SweepArgs a, const CLI::App& cmd) {
  if (a.values.empty()) throw UsageError("sweep needs a non-empty --values list");
  if (a.reference.empty()) throw UsageError("sweep needs --reference");
  if (a.param != "alpha" && a.param != "beta" && a.param != "gamma")
    throw UsageError("--param must be alpha, beta, or gamma");
  if (a.input.empty() == (a.quality == 0)) throw UsageError("give exactly one of --input or --quality");

  const Tensor reference = read_input(a.reference);
  const Tensor observed = a.input.empty() ? synthesize_blocking(reference, a.quality) : read_input(a.input);
  PipelineSpec base = PipelineSpec::defaults(parse_variant(a.variant));
  for (const char* flag : {"--mu0", "--rho", "--delta", "--max-iters", "--intensity-scale", "--alpha", "--beta", "--gamma"}) {
    if (cmd.count(flag) == 0) continue;
    const std::string f(flag);
    if (f == "--mu0") base.solver.mu0 = a.solver.mu0;
    if (f == "--rho") base.solver.rho = a.solver.rho;
    if (f == "--delta") base.solver.delta = a.solver.delta;
    if (f == "--max-iters") base.solver.max_iters = a.solver.max_iters;
    if (f == "--intensity-scale") base.solver.intensity_scale = a.solver.intensity_scale;
    if (f == "--alpha") base.solver.alpha = a.solver.alpha;
    if (f == "--beta") base.solver.beta = a.solver.beta;
    if (f == "--gamma") base.solver.gamma = a.solver.gamma;
  }

  struct Row {
    double value = 0.0;
    double ssim = 0.0, gc = 0.0, residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string error;
  };
  std::vector<Row> rows(a.values.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      PipelineSpec spec = base;
      double& target = a.param == "alpha" ? spec.solver.alpha : a.param == "beta" ? spec.solver.beta : spec.solver.gamma;
      target = a.values[i];
      rows[i].value = a.values[i];
      try {
        const auto r = run_pipeline(observed, spec, &reference);
        rows[i].ssim = r.metrics->ssim;
        rows[i].gc = r.metrics->gc;
        rows[i].iterations = r.solve.iterations;
        rows[i].residual = r.solve.final_residual;
        rows[i].converged = r.solve.converged;
      } catch (const std::exception& e) {
        rows[i].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned workers = worker_count(rows.size());
  for (unsigned k = 1; k < workers; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  const MetricsReport baseline = evaluate(reference, observed, AxisList{0, 1});
  std::ostringstream csv;
  csv << std::setprecision(10) << a.param << ",ssim,gc,iterations,final_residual,converged\n";
  nlohmann::json j{{"param", a.param},
                   {"variant", a.variant},
                   {"solver", to_json(base.solver)},
                   {"baseline", {{"ssim", baseline.ssim}, {"gc", baseline.gc}}},
                   {"rows", nlohmann::json::array()}};
  bool failed = false;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      std::cerr << a.param << "=" << r.value << ": " << r.error << "\n";
      failed = true;
      continue;
    }
    csv << r.value << "," << r.ssim << "," << r.gc << "," << r.iterations << "," << r.residual << ","
        << (r.converged ? 1 : 0) << "\n";
    j["rows"].push_back({{a.param, r.value},
                         {"ssim", r.ssim},
                         {"gc", r.gc},
                         {"iterations", r.iterations},
                         {"final_residual", r.residual},
                         {"converged", r.converged}});
  }
  if (!a.csv.empty()) {
    std::ofstream(a.csv) << csv.str();
  } else if (a.json.empty()) {
    std::cout << csv.str();
  }
  if (!a.json.empty()) write_json(a.json, j);
  return failed ? kExitError : kExitOk;
}

// ---- metrics ----

int cmd_metrics(const std::string& reference, const std::string& image, const std::string& json_out) {
  const Tensor ref = read_input(reference);
  const Tensor img = read_input(image);
  const MetricsReport r = evaluate(ref, img, AxisList{0, 1});
  nlohmann::json j{{"ssim", r.ssim},
                   {"gc", r.gc},
                   {"ssim_channel_mean", r.ssim_channel_mean},
                   {"ssim_per_channel", r.ssim_per_channel},
                   {"ssim_global_fallback", r.ssim_global_fallback},
                   {"gc_8bit", r.gc_8bit},
                   {"blocking_ratio", blocking_ratio(img)},
                   {"value_scale", "unit"}};
  if (json_out.empty())
    std::cout << j.dump(2) << "\n";
  else
    write_json(json_out, j);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Split compressed images and videos into intrinsic and artifact layers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  DeblockArgs deblock;
  auto* d = app.add_subcommand("deblock", "decompose an image, PNG frame directory, or manifest");
  d->add_option("input", deblock.input, "image file or frame directory");
  d->add_option("--out-dir,-o", deblock.out_dir, "output directory");
  d->add_option("--variant", deblock.variant, "dslp | vdslp | tv | idslp | ivdslp")->capture_default_str();
  add_solver_flags(d, deblock.solver);
  d->add_option("--denoiser", deblock.denoiser, "pre-smoother for idslp/ivdslp: bilateral | median");
  d->add_option("--denoise-strength", deblock.denoise_strength, "pre-smoother strength (8-bit units)")
      ->capture_default_str();
  d->add_option("--reference", deblock.reference, "clean reference for metrics");
  d->add_option("--metrics-json", deblock.metrics_json, "metrics output path (needs --reference)");
  d->add_option("--from-manifest", deblock.from_manifest, "re-run the settings recorded in a manifest");
  d->add_flag("--quiet,-q", deblock.quiet);

  std::string syn_in, syn_out;
  int quality = 0;
  auto* s = app.add_subcommand("synthesize", "simulate block-DCT compression of a clean image");
  s->add_option("input", syn_in, "clean image or frame directory")->required();
  s->add_option("--output,-o", syn_out, "output PNG (or directory for video)")->required();
  s->add_option("--quality,-Q", quality, "quality 1..100 (10 and 20 are the usual test regimes)")->required();

  SweepArgs sweep;
  auto* w = app.add_subcommand("sweep", "parameter sweep reporting SSIM and GC per value");
  w->add_option("--reference", sweep.reference, "clean reference image");
  w->add_option("--input", sweep.input, "compressed input");
  w->add_option("--quality", sweep.quality, "synthesize the input from the reference at this quality");
  w->add_option("--param", sweep.param, "alpha | beta | gamma")->capture_default_str();
  w->add_option("--values", sweep.values, "values to sweep")
      ->delimiter(',')
      ->check([](const std::string& v) { return v.empty() ? std::string("empty value in --values") : std::string(); });
  w->add_option("--variant", sweep.variant)->capture_default_str();
  add_solver_flags(w, sweep.solver);
  w->add_option("--csv", sweep.csv, "write CSV here (stdout otherwise)");
  w->add_option("--json", sweep.json, "write JSON here");

  std::string met_ref, met_img, met_json;
  auto* mt = app.add_subcommand("metrics", "SSIM and GC of an image against a reference");
  mt->add_option("--reference", met_ref)->required();
  mt->add_option("image", met_img)->required();
  mt->add_option("--json", met_json, "write JSON here (stdout otherwise)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*d) return cmd_deblock(deblock, *d);
    if (*s) return cmd_synthesize(syn_in, syn_out, quality);
    if (*w) return cmd_sweep(sweep, *w);
    if (*mt) return cmd_metrics(met_ref, met_img, met_json);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kExitError;
}
