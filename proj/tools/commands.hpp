#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tvspec/config.hpp"
#include "tvspec/image.hpp"
#include "tvspec/invariance.hpp"

namespace tvspec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Bad arguments detected after parsing (maps to kExitUsage).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace fs = std::filesystem;

// How an input file becomes a grid. .tvt inputs (one plane) are taken as is;
// images go through luma, optional crop and normalisation.
struct InputOptions {
  std::string crop;                    // "x,y,w,h", empty = whole image
  std::string normalize = "standardize";  // standardize | none
  std::optional<double> mean;          // fixed statistics instead of the image's own
  std::optional<double> std;
};

ImageGrid load_input(const fs::path& path, const InputOptions& opt, nlohmann::json* record = nullptr);

struct DecomposeArgs {
  fs::path input;
  fs::path out_dir;
  InputOptions in;
  bool svg = true;
};
void cmd_decompose(const DecomposeArgs& a, const PipelineConfig& cfg, std::ostream& log);

struct FilterArgs {
  fs::path input;
  fs::path out_dir;
  InputOptions in;
  std::optional<int> band;  // 1-based band of the schedule
  double t_min = 0.0;
  double t_max = 0.0;
  double residual_weight = 0.0;
};
void cmd_filter(const FilterArgs& a, const PipelineConfig& cfg, std::ostream& log);

struct SpectrumArgs {
  fs::path input;
  fs::path csv;
  fs::path svg;  // empty = none
  InputOptions in;
};
void cmd_spectrum(const SpectrumArgs& a, const PipelineConfig& cfg, std::ostream& log);

struct GenDatasetArgs {
  fs::path images;       // directory of source images, may be empty
  std::size_t count = 0;  // image entries, 0 = one per image
  std::size_t synthetic = 0;
  fs::path out_dir;
  fs::path regenerate;   // existing dataset to rebuild into out_dir
  fs::path source_root;
};
void cmd_gen_dataset(const GenDatasetArgs& a, const PipelineConfig& cfg, std::ostream& log);

struct EvalArgs {
  fs::path gt;
  fs::path pred;
  std::string suffix = "pred";
  fs::path csv;
  fs::path json;
  bool allow_missing = false;
};
void cmd_eval(const EvalArgs& a, const PipelineConfig& cfg, std::ostream& log);

struct InvarianceArgs {
  std::vector<fs::path> inputs;
  fs::path dataset;
  std::size_t limit = 0;
  fs::path precomputed;
  std::string suffix = "pred";
  fs::path export_dir;
  fs::path csv;
  fs::path json;
  InvarianceSettings settings;
  bool settings_given = false;  // any of dx/dy/fill/angle passed explicitly
  InputOptions in;
};
void cmd_invariance(const InvarianceArgs& a, const PipelineConfig& cfg, std::ostream& log);

struct BenchArgs {
  std::vector<int> sizes{64, 128, 256, 512, 1024};
  int repeats = 1;
  fs::path image;  // empty = synthetic texture
  fs::path csv;
  fs::path json;
};

struct BenchRow {
  int size = 0;
  double seconds = 0.0;  // mean over repeats
  long long iterations = 0;
  int nonconverged_steps = 0;
};

std::vector<BenchRow> run_bench(const BenchArgs& a, const PipelineConfig& cfg, std::ostream& log);
void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows);
void cmd_bench(const BenchArgs& a, const PipelineConfig& cfg, std::ostream& log);

/// Deterministic multi-octave value-noise texture, standardized.
ImageGrid bench_texture(int size, std::uint64_t seed);

/// Bilinear resampling to width x height (pixel-centre aligned).
ImageGrid resample(const ImageGrid& u, int width, int height);

}  // namespace tvspec::cli
