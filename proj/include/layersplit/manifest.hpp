#pragma once

// Run manifests and metrics reports as JSON. Schemas: docs/schemas/.

#include "layersplit/metrics.hpp"
#include "layersplit/pipelines.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace layersplit {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kManifestVersion = 1;

struct RunSummary {
  int iterations = 0;
  bool converged = false;
  double final_residual = 0.0;
};

struct RunManifest {
  std::string command = "deblock";
  std::vector<std::string> inputs;
  std::optional<std::string> reference;
  PipelineSpec spec;
  /// Only used by `synthesize`.
  std::optional<int> quality;
  std::map<std::string, std::string> outputs;
  std::map<std::string, double> timings_seconds;
  std::optional<RunSummary> summary;
  std::string determinism =
      "no randomness; identical inputs and settings give byte-identical outputs on the same build";
};

nlohmann::json to_json(const SolverConfig& cfg);
SolverConfig solver_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

RunManifest read_manifest(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// {ssim, gc, iterations, final_residual, ...} for the metrics JSON file.
nlohmann::json metrics_json(const MetricsReport& report, const RunSummary& summary);

}  // namespace layersplit
