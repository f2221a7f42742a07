#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tvspec/metrics.hpp"
#include "tvspec/spectral.hpp"

namespace tvspec {

/// Maps an image to a fixed-schedule band stack whose sum is the image.
class Decomposer {
 public:
  virtual ~Decomposer() = default;
  virtual BandSet decompose(const ImageGrid& f) const = 0;
  virtual const BandSchedule& schedule() const = 0;
  virtual std::string name() const = 0;
};

/// The reference pipeline: TV flow, transform and band extraction.
class ModelDrivenDecomposer final : public Decomposer {
 public:
  explicit ModelDrivenDecomposer(DecompositionConfig cfg = {});
  BandSet decompose(const ImageGrid& f) const override;
  const BandSchedule& schedule() const override { return cfg_.schedule; }
  std::string name() const override { return "model-driven"; }
  const DecompositionConfig& config() const { return cfg_; }

 private:
  DecompositionConfig cfg_;
};

/// Content hash of a grid after rounding to float32 (what tensor files hold).
std::uint64_t grid_fingerprint(const ImageGrid& u);

/// Serves band stacks produced elsewhere, looked up by input content. A stack
/// one band short of the schedule gets the remainder input - sum as its last
/// band.
class PrecomputedDecomposer final : public Decomposer {
 public:
  PrecomputedDecomposer(BandSchedule schedule, std::string name = "precomputed");

  void add(const ImageGrid& input, std::vector<ImageGrid> bands);

  /// Pairs every <stem>.input.tvt in `dir` with <stem>.<pred_suffix>.tvt.
  /// Returns the number of pairs loaded.
  std::size_t load_directory(const std::filesystem::path& dir,
                             const std::string& pred_suffix = "pred");

  /// Throws std::out_of_range for an input it has no bands for.
  BandSet decompose(const ImageGrid& f) const override;
  const BandSchedule& schedule() const override { return schedule_; }
  std::string name() const override { return name_; }
  std::size_t size() const { return table_.size(); }

 private:
  BandSchedule schedule_;
  std::string name_;
  std::map<std::uint64_t, std::vector<ImageGrid>> table_;
};

enum class InvarianceProperty { OneHomogeneity, Translation, Rotation };
std::string to_string(InvarianceProperty p);

enum class ShiftFill { Replicate, Circular };
std::string to_string(ShiftFill f);
ShiftFill shift_fill_from_string(const std::string& s);

/// Integer translation: out(x, y) = u(x - dx, y - dy); vacated pixels copy the
/// nearest edge pixel (Replicate) or wrap around (Circular).
ImageGrid translate(const ImageGrid& u, int dx, int dy, ShiftFill fill);

struct PairScore {
  std::string label;  // e.g. "band 3 vs 2 x band 2"
  BandScore score;
};

struct InvarianceReport {
  InvarianceProperty property = InvarianceProperty::OneHomogeneity;
  std::string parameters;  // factor 2 / shift (8, 0) replicate / 90 deg
  std::vector<PairScore> pairs;
  BandScore average;
};

/// Decomposes f and 2f and compares the shifted bands: band 1 + band 2 of 2f
/// against 2 x band 1, band k of 2f against 2 x band k-1 for k = 3 .. K-1, and
/// the last band of 2f against 2 x (band K-1 + band K). Needs a dyadic
/// schedule with K >= 3.
InvarianceReport test_homogeneity(const Decomposer& d, const ImageGrid& f,
                                  const SsimConfig& ssim = {});

/// Compares decompose(translate(f)) with translate(decompose(f)) band-wise on
/// the region that drops a strip of |dx| (|dy|) pixels at both ends.
InvarianceReport test_translation(const Decomposer& d, const ImageGrid& f, int dx, int dy,
                                  ShiftFill fill = ShiftFill::Replicate,
                                  const SsimConfig& ssim = {});

/// Compares decompose(rotate(f)) with rotate(decompose(f)) for a right-angle
/// rotation of `degrees` (90, 180 or 270, counter-clockwise).
InvarianceReport test_rotation(const Decomposer& d, const ImageGrid& f, int degrees,
                               const SsimConfig& ssim = {});

struct InvarianceSettings {
  int dx = 8;
  int dy = 0;
  ShiftFill fill = ShiftFill::Replicate;
  int degrees = 90;
};

/// The transformed inputs the three tests feed to a decomposer, keyed
/// original / scaled / shifted / rotated.
std::vector<std::pair<std::string, ImageGrid>> invariance_inputs(const ImageGrid& f,
                                                                 const InvarianceSettings& s);

/// Per-property means over a suite of images.
class InvarianceSummary {
 public:
  void add(const InvarianceReport& r);
  BandScore mean(InvarianceProperty p) const;
  int count(InvarianceProperty p) const;

  /// Header "metric,one-homogeneity,translation invariance,rotation invariance"
  /// then SSIM, PSNR and sLMSE rows; properties never added read n/a.
  void write_table_csv(std::ostream& os) const;

 private:
  std::map<InvarianceProperty, std::vector<BandScore>> scores_;
};

void to_json(nlohmann::json& j, const InvarianceReport& r);

}  // namespace tvspec
