#include "tvspec/invariance.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tvspec/tensor_file.hpp"

namespace tvspec {

namespace fs = std::filesystem;

ModelDrivenDecomposer::ModelDrivenDecomposer(DecompositionConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
}

BandSet ModelDrivenDecomposer::decompose(const ImageGrid& f) const {
  return tvspec::decompose(f, cfg_).bands;
}

std::uint64_t grid_fingerprint(const ImageGrid& u) {
  // FNV-1a over dims and float32 bit patterns
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<std::uint32_t>(u.width()));
  mix(static_cast<std::uint32_t>(u.height()));
  for (double v : u.data()) {
    float f = static_cast<float>(v);
    if (f == 0.0f) f = 0.0f;  // fold -0
    mix(std::bit_cast<std::uint32_t>(f));
  }
  return h;
}

PrecomputedDecomposer::PrecomputedDecomposer(BandSchedule schedule, std::string name)
    : schedule_(std::move(schedule)), name_(std::move(name)) {}

void PrecomputedDecomposer::add(const ImageGrid& input, std::vector<ImageGrid> bands) {
  const int k = schedule_.band_count();
  if (static_cast<int>(bands.size()) == k - 1) {
    ImageGrid rest = input;
    for (const auto& b : bands) rest -= b;
    bands.push_back(std::move(rest));
  }
  if (static_cast<int>(bands.size()) != k) {
    throw std::invalid_argument("precomputed bands: got " + std::to_string(bands.size()) +
                                ", schedule has " + std::to_string(k));
  }
  for (const auto& b : bands)
    if (!b.same_shape(input)) throw std::invalid_argument("precomputed bands: shape mismatch");
  table_[grid_fingerprint(input)] = std::move(bands);
}

std::size_t PrecomputedDecomposer::load_directory(const fs::path& dir, const std::string& pred_suffix) {
  if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
  std::size_t n = 0;
  std::vector<fs::path> inputs;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    const std::string tail = ".input.tvt";
    if (name.size() > tail.size() && name.compare(name.size() - tail.size(), tail.size(), tail) == 0) {
      inputs.push_back(e.path());
    }
  }
  std::sort(inputs.begin(), inputs.end());
  for (const auto& in : inputs) {
    const std::string name = in.filename().string();
    const std::string stem = name.substr(0, name.size() - std::string(".input.tvt").size());
    const fs::path pred = dir / (stem + "." + pred_suffix + ".tvt");
    if (!fs::exists(pred)) continue;
    const BandTensor ti = read_band_tensor(in);
    if (ti.bands != 1) throw std::runtime_error(in.string() + ": input tensor must have one plane");
    add(ti.plane(0), read_band_tensor(pred).planes());
    ++n;
  }
  return n;
}

BandSet PrecomputedDecomposer::decompose(const ImageGrid& f) const {
  auto it = table_.find(grid_fingerprint(f));
  if (it == table_.end()) {
    throw std::out_of_range(name_ + ": no precomputed bands for this " +
                            std::to_string(f.width()) + "x" + std::to_string(f.height()) +
                            " input");
  }
  BandSet s;
  s.bands = it->second;
  s.schedule = schedule_;
  return s;
}

std::string to_string(InvarianceProperty p) {
  switch (p) {
    case InvarianceProperty::OneHomogeneity:
      return "one-homogeneity";
    case InvarianceProperty::Translation:
      return "translation invariance";
    case InvarianceProperty::Rotation:
      return "rotation invariance";
  }
  return "unknown";
}

std::string to_string(ShiftFill f) { return f == ShiftFill::Circular ? "circular" : "replicate"; }

ShiftFill shift_fill_from_string(const std::string& s) {
  if (s == "replicate") return ShiftFill::Replicate;
  if (s == "circular") return ShiftFill::Circular;
  throw std::invalid_argument("unknown shift fill: " + s);
}

ImageGrid translate(const ImageGrid& u, int dx, int dy, ShiftFill fill) {
  const int w = u.width(), h = u.height();
  ImageGrid out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int sx = x - dx, sy = y - dy;
      if (fill == ShiftFill::Circular) {
        sx = ((sx % w) + w) % w;
        sy = ((sy % h) + h) % h;
      } else {
        sx = std::clamp(sx, 0, w - 1);
        sy = std::clamp(sy, 0, h - 1);
      }
      out.at(x, y) = u.at(sx, sy);
    }
  return out;
}

namespace {

InvarianceReport finish(InvarianceReport r) {
  std::vector<BandScore> s;
  for (const auto& p : r.pairs) s.push_back(p.score);
  r.average = average_scores(s);
  return r;
}

void check_bands(const BandSet& b, const Decomposer& d, const ImageGrid& f) {
  if (b.count() != d.schedule().band_count()) {
    throw std::runtime_error(d.name() + " returned " + std::to_string(b.count()) + " bands, expected " +
                             std::to_string(d.schedule().band_count()));
  }
  for (const auto& g : b.bands)
    if (!g.same_shape(f)) throw std::runtime_error(d.name() + " returned bands of the wrong shape");
}

}  // namespace

InvarianceReport test_homogeneity(const Decomposer& d, const ImageGrid& f, const SsimConfig& ssim_in) {
  const SsimConfig ssim = ssim_in.range_floor > 0.0 ? ssim_in : with_grey_level_floor(ssim_in, f);
  const BandSchedule& sched = d.schedule();
  if (!sched.is_dyadic()) {
    throw std::invalid_argument("test_homogeneity needs a dyadic band schedule (upper[k] = 2 upper[k-1])");
  }
  const int k = sched.band_count();
  const BandSet b = d.decompose(f);
  const BandSet b2 = d.decompose(2.0 * f);
  check_bands(b, d, f);
  check_bands(b2, d, f);
  InvarianceReport r;
  r.property = InvarianceProperty::OneHomogeneity;
  r.parameters = "factor 2";
  r.pairs.push_back({"band 1+2 of 2f vs 2 x band 1",
                     score_band(b2.bands[0] + b2.bands[1], 2.0 * b.bands[0], ssim)});
  for (int i = 2; i + 1 < k; ++i) {
    r.pairs.push_back({"band " + std::to_string(i + 1) + " of 2f vs 2 x band " + std::to_string(i),
                       score_band(b2.bands[i], 2.0 * b.bands[i - 1], ssim)});
  }
  r.pairs.push_back({"band " + std::to_string(k) + " of 2f vs 2 x bands " + std::to_string(k - 1) +
                         "+" + std::to_string(k),
                     score_band(b2.bands[k - 1], 2.0 * (b.bands[k - 2] + b.bands[k - 1]), ssim)});
  return finish(std::move(r));
}

InvarianceReport test_translation(const Decomposer& d, const ImageGrid& f, int dx, int dy,
                                  ShiftFill fill, const SsimConfig& ssim_in) {
  const SsimConfig ssim = ssim_in.range_floor > 0.0 ? ssim_in : with_grey_level_floor(ssim_in, f);
  const int w = f.width(), h = f.height();
  if (std::abs(dx) > w / 4 || std::abs(dy) > h / 4) {
    throw std::invalid_argument("test_translation: shift exceeds a quarter of the image");
  }
  const int mx = std::abs(dx), my = std::abs(dy);
  const BandSet b = d.decompose(f);
  const BandSet bt = d.decompose(translate(f, dx, dy, fill));
  check_bands(b, d, f);
  check_bands(bt, d, f);
  InvarianceReport r;
  r.property = InvarianceProperty::Translation;
  r.parameters = "shift (" + std::to_string(dx) + ", " + std::to_string(dy) + ") " + to_string(fill);
  for (int i = 0; i < b.count(); ++i) {
    const ImageGrid est = crop(bt.bands[i], mx, my, w - 2 * mx, h - 2 * my);
    const ImageGrid ref = crop(translate(b.bands[i], dx, dy, fill), mx, my, w - 2 * mx, h - 2 * my);
    r.pairs.push_back({"band " + std::to_string(i + 1), score_band(est, ref, ssim)});
  }
  return finish(std::move(r));
}

InvarianceReport test_rotation(const Decomposer& d, const ImageGrid& f, int degrees,
                               const SsimConfig& ssim_in) {
  const SsimConfig ssim = ssim_in.range_floor > 0.0 ? ssim_in : with_grey_level_floor(ssim_in, f);
  if (degrees != 90 && degrees != 180 && degrees != 270) {
    throw std::invalid_argument("test_rotation: angle must be 90, 180 or 270 degrees");
  }
  if (degrees != 180 && f.width() != f.height()) {
    throw std::invalid_argument("test_rotation: 90/270 degree rotations need a square image");
  }
  const int turns = degrees / 90;
  const BandSet b = d.decompose(f);
  const ImageGrid fr = rotate90(f, turns);
  const BandSet br = d.decompose(fr);
  check_bands(b, d, f);
  check_bands(br, d, fr);
  InvarianceReport r;
  r.property = InvarianceProperty::Rotation;
  r.parameters = std::to_string(degrees) + " deg";
  for (int i = 0; i < b.count(); ++i) {
    r.pairs.push_back(
        {"band " + std::to_string(i + 1), score_band(br.bands[i], rotate90(b.bands[i], turns), ssim)});
  }
  return finish(std::move(r));
}

std::vector<std::pair<std::string, ImageGrid>> invariance_inputs(const ImageGrid& f,
                                                                 const InvarianceSettings& s) {
  return {{"original", f},
          {"scaled", 2.0 * f},
          {"shifted", translate(f, s.dx, s.dy, s.fill)},
          {"rotated", rotate90(f, s.degrees / 90)}};
}

void InvarianceSummary::add(const InvarianceReport& r) { scores_[r.property].push_back(r.average); }

BandScore InvarianceSummary::mean(InvarianceProperty p) const {
  auto it = scores_.find(p);
  return it == scores_.end() ? BandScore{} : average_scores(it->second);
}

int InvarianceSummary::count(InvarianceProperty p) const {
  auto it = scores_.find(p);
  return it == scores_.end() ? 0 : static_cast<int>(it->second.size());
}

void InvarianceSummary::write_table_csv(std::ostream& os) const {
  const InvarianceProperty props[] = {InvarianceProperty::OneHomogeneity,
                                      InvarianceProperty::Translation, InvarianceProperty::Rotation};
  os << "metric";
  for (auto p : props) os << ',' << to_string(p);
  os << '\n';
  auto cell = [&](InvarianceProperty p, double v, int prec) {
    if (count(p) == 0) {
      os << "n/a";
    } else if (std::isinf(v)) {
      os << "inf";
    } else {
      const auto old = os.precision(prec);
      os << std::fixed << v;
      os.unsetf(std::ios::floatfield);
      os.precision(old);
    }
  };
  os << "SSIM";
  for (auto p : props) {
    os << ',';
    cell(p, mean(p).ssim, 4);
  }
  os << "\nPSNR";
  for (auto p : props) {
    os << ',';
    cell(p, mean(p).psnr, 3);
  }
  os << "\nsLMSE";
  for (auto p : props) {
    os << ',';
    cell(p, mean(p).slmse, 3);
  }
  os << '\n';
}

void to_json(nlohmann::json& j, const InvarianceReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.pairs) pairs.push_back({{"label", p.label}, {"score", p.score}});
  j = nlohmann::json{{"property", to_string(r.property)},
                     {"parameters", r.parameters},
                     {"pairs", pairs},
                     {"average", r.average}};
}

}  // namespace tvspec
