#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "tvspec/metrics.hpp"
#include "tvspec/rof.hpp"
#include "tvspec/spectral.hpp"

namespace tvspec {

struct DatasetConfig {
  int crop_size = 64;
  double augment_fraction = 0.25;  // share of entries cut at 2x size and box-downsampled
  int augment_factor = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Everything a run needs. Loaded in three layers: built-in defaults, then a
/// JSON file, then command-line flags.
struct PipelineConfig {
  DecompositionConfig decomposition;
  SsimConfig ssim;
  DatasetConfig dataset;
  int threads = 1;

  void validate() const;
};

// Strict JSON mapping: unknown keys throw std::invalid_argument naming the
// offending path. Missing keys keep the current value.
void merge_json(SolverConfig& cfg, const nlohmann::json& j);
void merge_json(DecompositionConfig& cfg, const nlohmann::json& j);
void merge_json(SsimConfig& cfg, const nlohmann::json& j);
void merge_json(DatasetConfig& cfg, const nlohmann::json& j);
void merge_json(PipelineConfig& cfg, const nlohmann::json& j);

void to_json(nlohmann::json& j, const SolverConfig& c);
void to_json(nlohmann::json& j, const BandSchedule& s);
void to_json(nlohmann::json& j, const DecompositionConfig& c);
void to_json(nlohmann::json& j, const DatasetConfig& c);
void to_json(nlohmann::json& j, const PipelineConfig& c);

DecompositionConfig decomposition_from_json(const nlohmann::json& j);

/// Defaults overlaid with the file. Throws std::runtime_error when the file is
/// unreadable or not JSON, std::invalid_argument on schema errors.
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace tvspec
