#include "tvspec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace tvspec {

namespace {

inline double phi_sample(int index, double prev, double cur, double next, double dt) {
  return index * ((next - 2.0 * cur) + prev) / dt;
}

void phi_into(int index, const ImageGrid& prev, const ImageGrid& cur, const ImageGrid& next,
              double dt, ImageGrid& out) {
  auto a = prev.data();
  auto b = cur.data();
  auto c = next.data();
  auto o = out.data();
  for (std::size_t p = 0; p < o.size(); ++p) o[p] = phi_sample(index, a[p], b[p], c[p], dt);
}

void residual_into(int n, const ImageGrid& prev, const ImageGrid& last, ImageGrid& out) {
  auto a = prev.data();
  auto b = last.data();
  auto o = out.data();
  for (std::size_t p = 0; p < o.size(); ++p) o[p] = b[p] - n * (b[p] - a[p]);
}

// Accumulates phi_i * dt into bands in increasing i, then adds the residual.
class BandAccumulator {
 public:
  BandAccumulator(const BandSchedule& schedule, int width, int height, double dt)
      : schedule_(schedule), dt_(dt) {
    bands_.assign(schedule.band_count(), ImageGrid(width, height));
  }

  void add(int index, const ImageGrid& phi) {
    while (current_ < schedule_.band_count() && index > schedule_.last_index(current_)) ++current_;
    if (current_ >= schedule_.band_count()) throw std::logic_error("phi index beyond schedule");
    auto o = bands_[current_].data();
    auto d = phi.data();
    for (std::size_t p = 0; p < o.size(); ++p) o[p] += d[p] * dt_;
  }

  BandSet finish(const ImageGrid& fr) {
    bands_.back() += fr;
    return BandSet{std::move(bands_), schedule_, true};
  }

 private:
  BandSchedule schedule_;
  double dt_;
  int current_ = 0;
  std::vector<ImageGrid> bands_;
};

}  // namespace

void SpectrumCurve::write_csv(std::ostream& os) const {
  os << "t,S\n";
  os.precision(17);
  for (std::size_t i = 0; i < scales.size(); ++i) os << scales[i] << ',' << values[i] << '\n';
}

void SpectrumCurve::write_svg(std::ostream& os) const {
  constexpr double W = 640.0, H = 360.0, M = 40.0;
  const double tmax = scales.empty() ? 1.0 : scales.back();
  double smax = 0.0;
  for (double v : values) smax = std::max(smax, v);
  if (smax <= 0.0) smax = 1.0;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M
     << "\" stroke=\"black\"/>\n<line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M
     << "\" y2=\"" << H - M << "\" stroke=\"black\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const double x = M + (W - 2 * M) * scales[i] / tmax;
    const double y = H - M - (H - 2 * M) * values[i] / smax;
    os << x << ',' << y << ' ';
  }
  os << "\"/>\n<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" font-size=\"12\">t (max "
     << tmax << ")</text>\n<text x=\"4\" y=\"" << M - 10 << "\" font-size=\"12\">S(t) (max "
     << smax << ")</text>\n</svg>\n";
}

void BandSchedule::validate(int n_steps) const {
  if (upper.empty()) throw std::invalid_argument("BandSchedule: no bands");
  int prev = 0;
  for (int e : upper) {
    if (e <= prev) {
      throw std::invalid_argument("BandSchedule: boundaries must be strictly increasing and >= 1");
    }
    prev = e;
  }
  if (upper.back() != n_steps - 1) {
    throw std::invalid_argument("BandSchedule: last boundary " + std::to_string(upper.back()) +
                                " must equal N-1 = " + std::to_string(n_steps - 1));
  }
}

bool BandSchedule::is_dyadic() const {
  if (upper.size() < 3) return false;
  // the final band is open-ended
  for (std::size_t k = 1; k + 1 < upper.size(); ++k) {
    if (upper[k] != 2 * upper[k - 1]) return false;
  }
  return true;
}

BandSchedule BandSchedule::from_fine_bands(int n_steps, int steps_per_fine_band,
                                           const std::vector<int>& fine_upper) {
  if (steps_per_fine_band < 1) throw std::invalid_argument("steps_per_fine_band must be >= 1");
  BandSchedule s;
  for (std::size_t g = 0; g + 1 < fine_upper.size(); ++g) {
    s.upper.push_back(fine_upper[g] * steps_per_fine_band);
  }
  s.upper.push_back(n_steps - 1);
  s.validate(n_steps);
  return s;
}

BandSchedule BandSchedule::default_dyadic(int n_steps) {
  BandSchedule s;
  for (int e = 4; e < n_steps - 1 && s.upper.size() < 5; e *= 2) s.upper.push_back(e);
  s.upper.push_back(n_steps - 1);
  return s;
}

ImageGrid BandSet::sum() const {
  if (bands.empty()) throw std::invalid_argument("BandSet::sum: empty band set");
  ImageGrid total = bands.front();
  for (std::size_t k = 1; k < bands.size(); ++k) total += bands[k];
  return total;
}

SpectralResponse tv_transform(const FlowTrajectory& traj) {
  const int n = traj.n_steps();
  if (n < 2) throw std::invalid_argument("tv_transform: trajectory needs N >= 2 steps");
  SpectralResponse resp;
  resp.dt = traj.dt;
  resp.phis.reserve(n - 1);
  for (int i = 1; i < n; ++i) {
    ImageGrid phi(traj.states[i].width(), traj.states[i].height());
    phi_into(i, traj.states[i - 1], traj.states[i], traj.states[i + 1], traj.dt, phi);
    resp.phis.push_back(std::move(phi));
  }
  return resp;
}

SpectrumCurve spectrum(const SpectralResponse& resp) {
  SpectrumCurve c;
  c.scales.reserve(resp.phis.size());
  c.values.reserve(resp.phis.size());
  for (int k = 0; k < resp.count(); ++k) {
    c.scales.push_back(resp.scale(k + 1));
    c.values.push_back(norm_l1(resp.phis[k]));
  }
  return c;
}

ImageGrid residual(const FlowTrajectory& traj) {
  const int n = traj.n_steps();
  if (n < 1) throw std::invalid_argument("residual: trajectory needs N >= 1 steps");
  ImageGrid out(traj.states[n].width(), traj.states[n].height());
  residual_into(n, traj.states[n - 1], traj.states[n], out);
  return out;
}

BandSet extract_bands(const SpectralResponse& resp, const ImageGrid& fr,
                      const BandSchedule& schedule) {
  schedule.validate(resp.count() + 1);
  for (const auto& phi : resp.phis) {
    if (!phi.same_shape(fr)) throw std::invalid_argument("extract_bands: dimension mismatch");
  }
  BandAccumulator acc(schedule, fr.width(), fr.height(), resp.dt);
  for (int k = 0; k < resp.count(); ++k) acc.add(k + 1, resp.phis[k]);
  return acc.finish(fr);
}

ImageGrid apply_filter(const SpectralResponse& resp, const ImageGrid& fr, const FilterSpec& spec) {
  if (static_cast<int>(spec.h.size()) != resp.count()) {
    throw std::invalid_argument("apply_filter: filter length " + std::to_string(spec.h.size()) +
                                " does not match response length " +
                                std::to_string(resp.count()));
  }
  ImageGrid out(fr.width(), fr.height());
  auto o = out.data();
  for (int k = 0; k < resp.count(); ++k) {
    if (!resp.phis[k].same_shape(fr)) throw std::invalid_argument("apply_filter: dimension mismatch");
    const double w = spec.h[k] * resp.dt;
    if (w == 0.0) continue;
    auto d = resp.phis[k].data();
    for (std::size_t p = 0; p < o.size(); ++p) o[p] += d[p] * w;
  }
  if (spec.residual_weight != 0.0) {
    auto r = fr.data();
    for (std::size_t p = 0; p < o.size(); ++p) o[p] += spec.residual_weight * r[p];
  }
  return out;
}

FilterSpec band_pass_filter(const SpectralResponse& resp, double t_min, double t_max,
                            double residual_weight) {
  FilterSpec spec;
  spec.residual_weight = residual_weight;
  spec.h.resize(resp.count());
  for (int k = 0; k < resp.count(); ++k) {
    const double t = resp.scale(k + 1);
    spec.h[k] = (t >= t_min && t < t_max) ? 1.0 : 0.0;
  }
  return spec;
}

double peak_scale(const SpectrumCurve& curve, int radius) {
  if (curve.values.empty()) throw std::invalid_argument("peak_scale: empty spectrum");
  const auto it = std::max_element(curve.values.begin(), curve.values.end());
  const int peak = static_cast<int>(it - curve.values.begin());
  const int lo = std::max(0, peak - radius);
  const int hi = std::min(static_cast<int>(curve.values.size()) - 1, peak + radius);
  double num = 0.0;
  double den = 0.0;
  for (int i = lo; i <= hi; ++i) {
    num += curve.values[i] * curve.scales[i];
    den += curve.values[i];
  }
  return den > 0.0 ? num / den : curve.scales[peak];
}

int band_of_scale(const BandSchedule& schedule, double dt, double t) {
  // discrete band k spans roughly ((first - 1/2) dt, (last + 1/2) dt]
  for (int k = 0; k < schedule.band_count(); ++k) {
    if (t <= (schedule.last_index(k) + 0.5) * dt) return k;
  }
  return schedule.band_count() - 1;
}

void DecompositionConfig::validate() const {
  solver.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("DecompositionConfig: dt must be positive");
  if (n_steps < 2) throw std::invalid_argument("DecompositionConfig: n_steps must be >= 2");
  schedule.validate(n_steps);
}

Decomposition decompose(const ImageGrid& f, const DecompositionConfig& cfg,
                        const FilterSpec* filter, ImageGrid* filtered) {
  cfg.validate();
  if (filter && static_cast<int>(filter->h.size()) != cfg.n_steps - 1) {
    throw std::invalid_argument("decompose: filter length must be N-1");
  }

  struct Streamer final : FlowObserver {
    const DecompositionConfig& cfg;
    const FilterSpec* filter;
    BandAccumulator acc;
    ImageGrid prev, cur, phi, filtered;
    Decomposition out;

    Streamer(const DecompositionConfig& c, const FilterSpec* fs, int w, int h)
        : cfg(c), filter(fs), acc(c.schedule, w, h, c.dt), phi(w, h) {
      if (fs) filtered = ImageGrid(w, h);
    }

    void on_state(int index, const ImageGrid& state, const StepRecord& rec) override {
      if (index > 0) {
        out.total_iterations += rec.iterations;
        if (!rec.converged) ++out.nonconverged_steps;
        out.max_gap = std::max(out.max_gap, rec.gap);
      }
      if (index >= 2) {
        const int i = index - 1;
        phi_into(i, prev, cur, state, cfg.dt, phi);
        acc.add(i, phi);
        out.spectrum.scales.push_back(i * cfg.dt);
        out.spectrum.values.push_back(norm_l1(phi));
        if (filter) {
          const double w = filter->h[i - 1] * cfg.dt;
          if (w != 0.0) {
            auto o = filtered.data();
            auto d = phi.data();
            for (std::size_t p = 0; p < o.size(); ++p) o[p] += d[p] * w;
          }
        }
      }
      prev = std::move(cur);
      cur = state;
    }
  } streamer(cfg, filter, f.width(), f.height());

  flow_stream(f, cfg.dt, cfg.n_steps, cfg.solver, streamer);

  ImageGrid fr(f.width(), f.height());
  residual_into(cfg.n_steps, streamer.prev, streamer.cur, fr);
  Decomposition out = std::move(streamer.out);
  out.bands = streamer.acc.finish(fr);
  if (filter && filtered) {
    if (filter->residual_weight != 0.0) {
      auto o = streamer.filtered.data();
      auto r = fr.data();
      for (std::size_t p = 0; p < o.size(); ++p) o[p] += filter->residual_weight * r[p];
    }
    *filtered = std::move(streamer.filtered);
  }
  out.residual = std::move(fr);
  return out;
}

}  // namespace tvspec
