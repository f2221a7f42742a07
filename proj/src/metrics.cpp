#include "tvspec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace tvspec {

namespace {

void require_same(const ImageGrid& a, const ImageGrid& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                " vs " + std::to_string(b.width()) + "x" +
                                std::to_string(b.height()) + ")");
  }
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(size);
  const double c = 0.5 * (size - 1);
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - c;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += k[i];
  }
  for (double& v : k) v /= total;
  return k;
}

// Separable valid-mode correlation with a 1-D kernel along both axes.
std::vector<double> filter_valid(std::span<const double> src, int w, int h,
                                 const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1;
  const int oh = h - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

double ssim_formula(double mx, double my, double vx, double vy, double cxy, double c1,
                    double c2) {
  return ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
         ((mx * mx + my * my + c1) * (vx + vy + c2));
}

}  // namespace

double mse(const ImageGrid& b, const ImageGrid& ref) {
  require_same(b, ref, "mse");
  auto db = b.data();
  auto dr = ref.data();
  double s = 0.0;
  for (std::size_t i = 0; i < db.size(); ++i) {
    const double d = db[i] - dr[i];
    s += d * d;
  }
  return s / static_cast<double>(db.size());
}

double dynamic_range(const ImageGrid& u) { return max_value(u) - min_value(u); }

double psnr(const ImageGrid& b, const ImageGrid& ref, double max_i) {
  require_same(b, ref, "psnr");
  if (!(max_i > 0.0)) throw std::invalid_argument("psnr: max_i must be positive");
  const double e = mse(b, ref);
  if (e == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(max_i * max_i / e);
}

void SsimConfig::validate() const {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("ssim: window must be odd");
  if (!(sigma > 0.0)) throw std::invalid_argument("ssim: sigma must be positive");
  if (!(k1 > 0.0) || !(k2 > 0.0)) throw std::invalid_argument("ssim: k1, k2 must be positive");
  if (!(range_floor >= 0.0)) throw std::invalid_argument("ssim: range_floor must be >= 0");
}

double ssim(const ImageGrid& b, const ImageGrid& ref, const SsimConfig& cfg) {
  require_same(b, ref, "ssim");
  cfg.validate();
  const double range =
      cfg.dynamic_range > 0.0 ? cfg.dynamic_range : band_peak(b, ref, cfg.range_floor);
  const double c1 = (cfg.k1 * range) * (cfg.k1 * range);
  const double c2 = (cfg.k2 * range) * (cfg.k2 * range);

  if (cfg.global) {
    const double mx = mean(b), my = mean(ref);
    double vx = 0.0, vy = 0.0, cxy = 0.0;
    auto db = b.data();
    auto dr = ref.data();
    for (std::size_t i = 0; i < db.size(); ++i) {
      vx += (db[i] - mx) * (db[i] - mx);
      vy += (dr[i] - my) * (dr[i] - my);
      cxy += (db[i] - mx) * (dr[i] - my);
    }
    const double n = static_cast<double>(db.size());
    return ssim_formula(mx, my, vx / n, vy / n, cxy / n, c1, c2);
  }

  const int w = b.width(), h = b.height();
  if (w < cfg.window || h < cfg.window) {
    throw std::invalid_argument("ssim: image smaller than the " + std::to_string(cfg.window) +
                                "x" + std::to_string(cfg.window) + " window");
  }
  const auto k = gaussian_kernel(cfg.window, cfg.sigma);
  auto db = b.data();
  auto dr = ref.data();
  std::vector<double> xx(db.size()), yy(db.size()), xy(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) {
    xx[i] = db[i] * db[i];
    yy[i] = dr[i] * dr[i];
    xy[i] = db[i] * dr[i];
  }
  const auto mx = filter_valid(db, w, h, k);
  const auto my = filter_valid(dr, w, h, k);
  const auto sxx = filter_valid(xx, w, h, k);
  const auto syy = filter_valid(yy, w, h, k);
  const auto sxy = filter_valid(xy, w, h, k);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    total += ssim_formula(mx[i], my[i], sxx[i] - mx[i] * mx[i], syy[i] - my[i] * my[i],
                          sxy[i] - mx[i] * my[i], c1, c2);
  }
  return total / static_cast<double>(mx.size());
}

double lmse(const ImageGrid& b, const ImageGrid& ref, int patch, int stride) {
  require_same(b, ref, "lmse");
  if (patch < 1 || stride < 1) throw std::invalid_argument("lmse: patch and stride must be >= 1");
  const int w = b.width(), h = b.height();
  if (w < patch || h < patch) {
    throw std::invalid_argument("lmse: image " + std::to_string(w) + "x" + std::to_string(h) +
                                " smaller than one " + std::to_string(patch) + "px patch");
  }
  double total = 0.0;
  for (int y0 = 0; y0 == 0 || y0 + stride < h; y0 += stride) {
    for (int x0 = 0; x0 == 0 || x0 + stride < w; x0 += stride) {
      const int y1 = std::min(h, y0 + patch), x1 = std::min(w, x0 + patch);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          const double d = b.at(x, y) - ref.at(x, y);
          total += d * d;
        }
    }
  }
  return total;
}

double slmse(const ImageGrid& b, const ImageGrid& ref) {
  const double num = lmse(b, ref);
  const double den = lmse(ImageGrid(ref.width(), ref.height()), ref);
  if (den == 0.0) return num == 0.0 ? 1.0 : 0.0;
  return 1.0 - num / den;
}

double band_peak(const ImageGrid& b, const ImageGrid& ref, double floor) {
  double r = std::max(dynamic_range(ref), floor);
  if (!(r > 0.0)) r = dynamic_range(b);
  if (!(r > 0.0)) r = 1.0;
  return r;
}

double grey_level(const ImageGrid& f) { return dynamic_range(f) / 255.0; }

SsimConfig with_grey_level_floor(SsimConfig cfg, const ImageGrid& f) {
  cfg.range_floor = grey_level(f);
  return cfg;
}

BandScore score_band(const ImageGrid& b, const ImageGrid& ref, const SsimConfig& cfg) {
  BandScore s;
  s.max_i = cfg.dynamic_range > 0.0 ? cfg.dynamic_range : band_peak(b, ref, cfg.range_floor);
  s.psnr = psnr(b, ref, s.max_i);
  s.ssim = ssim(b, ref, cfg);
  s.slmse = slmse(b, ref);
  return s;
}

BandScore average_scores(const std::vector<BandScore>& scores) {
  BandScore avg;
  if (scores.empty()) return avg;
  double ss = 0.0, sl = 0.0, sp = 0.0, mi = 0.0;
  int finite = 0;
  for (const auto& s : scores) {
    ss += s.ssim;
    sl += s.slmse;
    mi += s.max_i;
    if (std::isfinite(s.psnr)) {
      sp += s.psnr;
      ++finite;
    }
  }
  const double n = static_cast<double>(scores.size());
  avg.ssim = ss / n;
  avg.slmse = sl / n;
  avg.max_i = mi / n;
  avg.psnr = finite ? sp / finite : kPsnrIdentical;
  return avg;
}

MetricsReport score_bands(const std::vector<ImageGrid>& pred, const std::vector<ImageGrid>& gt,
                          const SsimConfig& cfg) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("score_bands: " + std::to_string(pred.size()) +
                                " predicted bands vs " + std::to_string(gt.size()) +
                                " ground-truth bands");
  }
  if (gt.empty()) throw std::invalid_argument("score_bands: no bands");
  MetricsReport r;
  for (std::size_t k = 0; k < gt.size(); ++k) r.per_band.push_back(score_band(pred[k], gt[k], cfg));
  r.average = average_scores(r.per_band);
  return r;
}

void MetricsAccumulator::add_to(Sum& s, const BandScore& b) {
  s.ssim += b.ssim;
  s.slmse += b.slmse;
  s.max_i += b.max_i;
  if (std::isfinite(b.psnr)) {
    s.psnr += b.psnr;
    ++s.finite_psnr;
  }
}

BandScore MetricsAccumulator::mean_of(const Sum& s, int n) {
  BandScore b;
  b.ssim = s.ssim / n;
  b.slmse = s.slmse / n;
  b.max_i = s.max_i / n;
  b.psnr = s.finite_psnr ? s.psnr / s.finite_psnr : kPsnrIdentical;
  return b;
}

void MetricsAccumulator::add(const MetricsReport& r) {
  if (n_ == 0) {
    bands_.assign(r.per_band.size(), Sum{});
  } else if (r.per_band.size() != bands_.size()) {
    throw std::invalid_argument("MetricsAccumulator: band count changed");
  }
  for (std::size_t k = 0; k < bands_.size(); ++k) add_to(bands_[k], r.per_band[k]);
  add_to(average_, r.average);
  ++n_;
}

MetricsReport MetricsAccumulator::result() const {
  MetricsReport r;
  r.images = n_;
  if (n_ == 0) return r;
  for (const auto& s : bands_) r.per_band.push_back(mean_of(s, n_));
  r.average = mean_of(average_, n_);
  return r;
}

namespace {

void write_value(std::ostream& os, double v, int precision) {
  if (std::isinf(v)) {
    os << (v > 0 ? "inf" : "-inf");
    return;
  }
  const auto old = os.precision(precision);
  os << std::fixed << v;
  os.unsetf(std::ios::floatfield);
  os.precision(old);
}

nlohmann::json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

double number_from(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.get<double>();
}

}  // namespace

void MetricsReport::write_table_csv(std::ostream& os) const {
  os << "metric,Average";
  for (std::size_t k = 0; k < per_band.size(); ++k) {
    if (k + 1 == per_band.size()) {
      os << ",residual Band";
    } else {
      os << ",Band " << k + 1;
    }
  }
  os << '\n';
  struct Row {
    const char* name;
    double BandScore::*field;
    int precision;
  };
  const Row rows[] = {{"SSIM", &BandScore::ssim, 4},
                      {"PSNR", &BandScore::psnr, 3},
                      {"sLMSE", &BandScore::slmse, 3}};
  for (const auto& row : rows) {
    os << row.name << ',';
    write_value(os, average.*row.field, row.precision);
    for (const auto& b : per_band) {
      os << ',';
      write_value(os, b.*row.field, row.precision);
    }
    os << '\n';
  }
}

void to_json(nlohmann::json& j, const BandScore& s) {
  j = nlohmann::json{{"ssim", s.ssim},
                     {"psnr", number_or_string(s.psnr)},
                     {"slmse", s.slmse},
                     {"max_i", s.max_i}};
}

void from_json(const nlohmann::json& j, BandScore& s) {
  s.ssim = j.at("ssim").get<double>();
  s.psnr = number_from(j.at("psnr"));
  s.slmse = j.at("slmse").get<double>();
  s.max_i = j.value("max_i", 0.0);
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
  j = nlohmann::json{{"images", r.images}, {"per_band", r.per_band}, {"average", r.average}};
}

void to_json(nlohmann::json& j, const SsimConfig& c) {
  j = nlohmann::json{{"window", c.window}, {"sigma", c.sigma},   {"k1", c.k1},
                     {"k2", c.k2},         {"dynamic_range", c.dynamic_range}, {"range_floor", c.range_floor},
                     {"global", c.global}};
}

}  // namespace tvspec
