#include "layersplit/manifest.hpp"

#include <fstream>
#include <stdexcept>

namespace layersplit {

using nlohmann::json;

json to_json(const SolverConfig& c) {
  return json{{"alpha", c.alpha},
              {"beta", c.beta},
              {"gamma", c.gamma},
              {"mu0", c.mu0},
              {"rho", c.rho},
              {"delta", c.delta},
              {"max_iters", c.max_iters},
              {"intensity_scale", c.intensity_scale},
              {"axes", c.axes},
              {"divergence_factor", c.divergence_factor},
              {"divergence_window", c.divergence_window}};
}

SolverConfig solver_config_from_json(const json& j) {
  SolverConfig c;
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.gamma = j.value("gamma", c.gamma);
  c.mu0 = j.value("mu0", c.mu0);
  c.rho = j.value("rho", c.rho);
  c.delta = j.value("delta", c.delta);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.intensity_scale = j.value("intensity_scale", c.intensity_scale);
  c.axes = j.value("axes", c.axes);
  c.divergence_factor = j.value("divergence_factor", c.divergence_factor);
  c.divergence_window = j.value("divergence_window", c.divergence_window);
  c.validate();
  return c;
}

json to_json(const RunManifest& m) {
  json j{{"manifest_version", kManifestVersion},
         {"tool_version", kToolVersion},
         {"command", m.command},
         {"inputs", m.inputs},
         {"variant", std::string(to_string(m.spec.variant))},
         {"solver", to_json(m.spec.solver)},
         {"value_scale", "unit"},
         {"outputs", m.outputs},
         {"timings_seconds", m.timings_seconds},
         {"determinism", m.determinism}};
  j["reference"] = m.reference ? json(*m.reference) : json(nullptr);
  if (m.spec.denoiser)
    j["denoiser"] = {{"kind", std::string(to_string(m.spec.denoiser->kind))},
                     {"strength", m.spec.denoiser->strength}};
  else
    j["denoiser"] = nullptr;
  if (m.quality) j["quality"] = *m.quality;
  if (m.summary)
    j["result"] = {{"iterations", m.summary->iterations},
                   {"converged", m.summary->converged},
                   {"final_residual", m.summary->final_residual}};
  return j;
}

RunManifest manifest_from_json(const json& j) {
  try {
    RunManifest m;
    m.command = j.value("command", m.command);
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    if (j.contains("reference") && !j["reference"].is_null()) m.reference = j["reference"].get<std::string>();
    m.spec.variant = parse_variant(j.value("variant", std::string("dslp")));
    if (j.contains("solver")) m.spec.solver = solver_config_from_json(j["solver"]);
    if (j.contains("denoiser") && !j["denoiser"].is_null()) {
      const auto& d = j["denoiser"];
      m.spec.denoiser = DenoiserSpec{parse_denoiser(d.at("kind").get<std::string>()), d.at("strength").get<double>()};
    }
    if (j.contains("quality")) m.quality = j["quality"].get<int>();
    if (j.contains("outputs")) m.outputs = j["outputs"].get<std::map<std::string, std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed manifest: ") + e.what());
  }
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return manifest_from_json(j);
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

json metrics_json(const MetricsReport& r, const RunSummary& s) {
  return json{{"ssim", r.ssim},
              {"gc", r.gc},
              {"iterations", s.iterations},
              {"final_residual", s.final_residual},
              {"converged", s.converged},
              {"ssim_channel_mean", r.ssim_channel_mean},
              {"ssim_per_channel", r.ssim_per_channel},
              {"ssim_global_fallback", r.ssim_global_fallback},
              {"gc_8bit", r.gc_8bit},
              {"value_scale", "unit"}};
}

}  // namespace layersplit
