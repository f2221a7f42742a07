#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "tvspec/image.hpp"
#include "tvspec/rof.hpp"

namespace tvspec {

/// phi_i = t_i * u_tt(t_i), i = 1 .. N-1, discretised as
/// i * (u_{i+1} - 2 u_i + u_{i-1}) / dt so that the inverse transform telescopes.
struct SpectralResponse {
  std::vector<ImageGrid> phis;  // phis[k] is phi at fine index k+1
  double dt = 0.0;

  int count() const { return static_cast<int>(phis.size()); }
  double scale(int index) const { return index * dt; }  // t_i for fine index i
};

struct SpectrumCurve {
  std::vector<double> scales;
  std::vector<double> values;

  /// CSV with header "t,S".
  void write_csv(std::ostream& os) const;
  /// Standalone SVG line plot.
  void write_svg(std::ostream& os) const;
};

/// Band boundaries on the fine time grid. Band k covers fine indices
/// (upper[k-1], upper[k]] with upper[-1] = 0; the last entry must be N-1.
struct BandSchedule {
  std::vector<int> upper;

  int band_count() const { return static_cast<int>(upper.size()); }
  int first_index(int band) const { return band == 0 ? 1 : upper[band - 1] + 1; }
  int last_index(int band) const { return upper[band]; }

  /// Throws std::invalid_argument unless the schedule covers 1 .. n_steps-1.
  void validate(int n_steps) const;

  /// Boundaries double: upper[k] = 2 upper[k-1] for every band but the last,
  /// so doubling all scales shifts each band onto the next one.
  bool is_dyadic() const;

  /// Groups fine bands of `steps_per_fine_band` steps: group g ends at fine
  /// band fine_upper[g] (1-based). The last group absorbs all remaining steps.
  static BandSchedule from_fine_bands(int n_steps, int steps_per_fine_band,
                                      const std::vector<int>& fine_upper);

  /// Default six-band schedule with geometric boundaries at fine indices
  /// 4, 8, 16, 32, 64 and a final band running to N-1.
  static BandSchedule default_dyadic(int n_steps);

  friend bool operator==(const BandSchedule&, const BandSchedule&) = default;
};

struct BandSet {
  std::vector<ImageGrid> bands;
  BandSchedule schedule;
  bool includes_residual = true;

  int count() const { return static_cast<int>(bands.size()); }
  ImageGrid sum() const;
};

struct FilterSpec {
  std::vector<double> h;  // H(t_i) per fine index i = 1 .. N-1
  double residual_weight = 1.0;
};

SpectralResponse tv_transform(const FlowTrajectory& traj);
SpectrumCurve spectrum(const SpectralResponse& resp);

/// f_r = u_N - N (u_N - u_{N-1}).
ImageGrid residual(const FlowTrajectory& traj);

BandSet extract_bands(const SpectralResponse& resp, const ImageGrid& fr,
                      const BandSchedule& schedule);

ImageGrid apply_filter(const SpectralResponse& resp, const ImageGrid& fr, const FilterSpec& spec);

/// Ideal pass filter: h_i = 1 for t_min <= t_i < t_max, else 0.
FilterSpec band_pass_filter(const SpectralResponse& resp, double t_min, double t_max,
                            double residual_weight);

/// Refined location of the dominant spectrum peak: S-weighted centroid of the
/// scales within +-radius samples of the argmax.
double peak_scale(const SpectrumCurve& curve, int radius = 2);

/// Band holding scale t under the schedule (the last band for t past its start).
int band_of_scale(const BandSchedule& schedule, double dt, double t);

struct DecompositionConfig {
  SolverConfig solver;
  double dt = 0.22;
  int n_steps = 100;
  BandSchedule schedule = BandSchedule::default_dyadic(100);

  void validate() const;
};

struct Decomposition {
  BandSet bands;
  SpectrumCurve spectrum;
  ImageGrid residual;
  int total_iterations = 0;
  int nonconverged_steps = 0;
  double max_gap = 0.0;
};

/// Streaming pipeline: TV flow, transform, spectrum and bands without keeping
/// the trajectory. Per-pixel band sums run sequentially in time, so the
/// result is bit-identical to extract_bands(tv_transform(flow_evolve(...))).
/// When `filter` is given, the filtered image is also accumulated.
Decomposition decompose(const ImageGrid& f, const DecompositionConfig& cfg,
                        const FilterSpec* filter = nullptr,
                        ImageGrid* filtered = nullptr);

}  // namespace tvspec
