#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tvspec/config.hpp"
#include "tvspec/image.hpp"
#include "tvspec/shapes.hpp"

namespace tvspec {

inline constexpr int kManifestVersion = 1;

/// Where an entry was cut from the source luma image: a size x size window at
/// (x, y), then box-downsampled by `downsample`.
struct CropSpec {
  int x = 0;
  int y = 0;
  int size = 64;
  int downsample = 1;
};

/// Seeded crop choice for one entry. Augmented crops (2x size, box
/// downsampled) are drawn with probability cfg.augment_fraction when the
/// source is large enough. Throws std::invalid_argument if the source is
/// smaller than a plain crop.
CropSpec choose_crop(int width, int height, const DatasetConfig& cfg, std::uint64_t seed);

/// Mean over non-overlapping factor x factor blocks.
ImageGrid box_downsample(const ImageGrid& u, int factor);

ImageGrid apply_crop(const ImageGrid& luma, const CropSpec& c);

struct Standardization {
  double mean = 0.0;
  double std = 1.0;
};

/// Pooled mean and population standard deviation over every pixel of every
/// grid. A zero deviation is replaced by 1.
Standardization compute_standardization(const std::vector<ImageGrid>& grids);
ImageGrid standardize(const ImageGrid& u, const Standardization& s);

/// Luma + crop + standardization of raw image bytes (PNG or PGM/PPM).
ImageGrid preprocess(std::span<const std::uint8_t> bytes, const CropSpec& crop,
                     const Standardization& stats);

/// Per-entry seed derived from the dataset seed.
std::uint64_t entry_seed(std::uint64_t dataset_seed, std::size_t index);

/// A dataset input: an image file or a synthetic scene.
struct DatasetSource {
  std::string path;            // image file, empty for scenes
  std::optional<Scene> scene;  // synthetic scene rendered at crop size
};

struct EntryRecord {
  std::size_t id = 0;
  DatasetSource source;
  CropSpec crop;
  std::uint64_t seed = 0;
  std::string input_file;  // relative to the dataset directory
  std::string bands_file;
  int bands = 0;
  int height = 0;
  int width = 0;
  int iterations = 0;
  int nonconverged_steps = 0;
  double max_gap = 0.0;
  std::vector<std::string> warnings;
};

struct DatasetManifest {
  int format_version = kManifestVersion;
  DatasetConfig dataset;
  DecompositionConfig decomposition;
  Standardization standardization;
  bool synthetic_unstandardized = true;  // scenes keep their own contrast
  std::vector<EntryRecord> entries;
};

void to_json(nlohmann::json& j, const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

DatasetManifest read_manifest(const std::filesystem::path& dataset_dir);
void write_manifest(const std::filesystem::path& dataset_dir, const DatasetManifest& m);

inline constexpr const char* kManifestName = "manifest.json";

struct GenerateOptions {
  int threads = 1;
  /// Resolves relative source paths at regeneration time; empty = as recorded.
  std::filesystem::path source_root;
};

/// Builds a ground-truth dataset in `out_dir`: per entry the standardized
/// input grid and its band stack as BandTensorFiles, plus manifest.json.
/// Image entries share one dataset-level standardization; scene entries are
/// rendered at crop size and stored as is. Solver warnings are recorded per
/// entry.
DatasetManifest generate_ground_truth(const std::vector<DatasetSource>& sources,
                                      const PipelineConfig& cfg,
                                      const std::filesystem::path& out_dir,
                                      const GenerateOptions& opt = {});

/// Recomputes every entry of an existing manifest into `out_dir` using only
/// the manifest and the sources.
DatasetManifest regenerate(const DatasetManifest& manifest, const std::filesystem::path& out_dir,
                           const GenerateOptions& opt = {});

/// Checks that every referenced tensor exists and has the declared shape.
/// Returns one message per problem.
std::vector<std::string> verify_dataset(const std::filesystem::path& dataset_dir);

/// `count` seeded random scenes for the synthetic training subset.
std::vector<DatasetSource> synthetic_sources(const SceneGeneratorConfig& cfg, std::size_t count,
                                             std::uint64_t seed);

/// Sorted list of *.png/*.pgm/*.ppm files in a directory.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace tvspec
