#pragma once

#include <iosfwd>
#include <limits>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tvspec/image.hpp"

namespace tvspec {

// All metrics take (estimate, reference). The reference fixes the dynamic
// range and the sLMSE normaliser.

inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

double mse(const ImageGrid& b, const ImageGrid& ref);

/// max - min of the grid.
double dynamic_range(const ImageGrid& u);

/// 10 log10(max_i^2 / MSE), or kPsnrIdentical when the grids are equal.
double psnr(const ImageGrid& b, const ImageGrid& ref, double max_i);

struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 0.0;  // <= 0: taken from the reference
  double range_floor = 0.0;    // lower bound on the reference range
  bool global = false;         // one window covering the whole image

  void validate() const;
};

/// Gaussian-windowed SSIM averaged over the valid window positions.
double ssim(const ImageGrid& b, const ImageGrid& ref, const SsimConfig& cfg = {});

inline constexpr int kLmsePatch = 16;
inline constexpr int kLmseStride = 8;

/// Sum over k x k patches at the given stride of the squared patch error.
/// Patch origins run 0, stride, ... while origin + stride < extent, so the
/// last patch is clipped when the extent is not aligned.
double lmse(const ImageGrid& b, const ImageGrid& ref, int patch = kLmsePatch,
            int stride = kLmseStride);

/// 1 - LMSE(b, ref) / LMSE(0, ref). A zero reference scores 1 if b is zero too
/// and 0 otherwise.
double slmse(const ImageGrid& b, const ImageGrid& ref);

struct BandScore {
  double ssim = 1.0;
  double psnr = kPsnrIdentical;
  double slmse = 1.0;
  double max_i = 0.0;  // MAX_I used for psnr
};

struct MetricsReport {
  std::vector<BandScore> per_band;
  BandScore average;
  int images = 1;

  /// Header plus SSIM, PSNR and sLMSE rows: Average, Band 1 .. Band K-1,
  /// residual Band.
  void write_table_csv(std::ostream& os) const;
};

/// Range used for MAX_I and the SSIM constants: the reference's dynamic
/// range, at least `floor`, falling back to the estimate's range and then to 1
/// for flat bands.
double band_peak(const ImageGrid& b, const ImageGrid& ref, double floor = 0.0);

/// One 8-bit grey level of the image a band stack decomposes: range(f)/255.
/// Bands flatter than this are scored against that level rather than their
/// own (noise-sized) range.
double grey_level(const ImageGrid& f);
SsimConfig with_grey_level_floor(SsimConfig cfg, const ImageGrid& f);

BandScore score_band(const ImageGrid& b, const ImageGrid& ref, const SsimConfig& cfg = {});

/// Scores a predicted band stack against ground truth. The averages are plain
/// means over bands, except PSNR which averages the finite entries only.
MetricsReport score_bands(const std::vector<ImageGrid>& pred, const std::vector<ImageGrid>& gt,
                          const SsimConfig& cfg = {});

/// Dataset-level means of per-image reports (same band count each).
class MetricsAccumulator {
 public:
  void add(const MetricsReport& r);
  int count() const { return n_; }
  MetricsReport result() const;

 private:
  struct Sum {
    double ssim = 0.0, psnr = 0.0, slmse = 0.0, max_i = 0.0;
    int finite_psnr = 0;
  };
  void add_to(Sum& s, const BandScore& b);
  static BandScore mean_of(const Sum& s, int n);

  std::vector<Sum> bands_;
  Sum average_;
  int n_ = 0;
};

/// Mean over `scores` with the PSNR convention of score_bands.
BandScore average_scores(const std::vector<BandScore>& scores);

void to_json(nlohmann::json& j, const BandScore& s);
void from_json(const nlohmann::json& j, BandScore& s);
void to_json(nlohmann::json& j, const MetricsReport& r);
void to_json(nlohmann::json& j, const SsimConfig& c);

}  // namespace tvspec
