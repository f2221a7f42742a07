#include "tvspec/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "tvspec/image_io.hpp"
#include "tvspec/parallel.hpp"
#include "tvspec/spectral.hpp"
#include "tvspec/tensor_file.hpp"

namespace tvspec {

using nlohmann::json;
namespace fs = std::filesystem;

CropSpec choose_crop(int width, int height, const DatasetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (width < cfg.crop_size || height < cfg.crop_size) {
    throw std::invalid_argument("image " + std::to_string(width) + "x" + std::to_string(height) +
                                " is smaller than the " + std::to_string(cfg.crop_size) +
                                "px crop");
  }
  SeededUniform rng(seed);
  const double draw = rng.next_double();
  CropSpec c;
  const int big = cfg.crop_size * cfg.augment_factor;
  if (cfg.augment_factor > 1 && draw < cfg.augment_fraction && width >= big && height >= big) {
    c.size = big;
    c.downsample = cfg.augment_factor;
  } else {
    c.size = cfg.crop_size;
    c.downsample = 1;
  }
  c.x = rng.uniform_int(0, width - c.size);
  c.y = rng.uniform_int(0, height - c.size);
  return c;
}

ImageGrid box_downsample(const ImageGrid& u, int factor) {
  if (factor < 1) throw std::invalid_argument("box_downsample: factor must be >= 1");
  if (factor == 1) return u;
  if (u.width() % factor || u.height() % factor) {
    throw std::invalid_argument("box_downsample: dimensions not divisible by the factor");
  }
  const int w = u.width() / factor, h = u.height() / factor;
  ImageGrid out(w, h);
  const double inv = 1.0 / (factor * factor);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int dy = 0; dy < factor; ++dy)
        for (int dx = 0; dx < factor; ++dx) s += u.at(x * factor + dx, y * factor + dy);
      out.at(x, y) = s * inv;
    }
  return out;
}

ImageGrid apply_crop(const ImageGrid& luma, const CropSpec& c) {
  return box_downsample(crop(luma, c.x, c.y, c.size, c.size), c.downsample);
}

Standardization compute_standardization(const std::vector<ImageGrid>& grids) {
  Standardization s;
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& g : grids) {
    for (double v : g.data()) total += v;
    n += g.size();
  }
  if (n == 0) return s;
  s.mean = total / static_cast<double>(n);
  double var = 0.0;
  for (const auto& g : grids)
    for (double v : g.data()) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(n));
  if (!(s.std > 0.0)) s.std = 1.0;
  return s;
}

ImageGrid standardize(const ImageGrid& u, const Standardization& s) {
  ImageGrid out = u;
  const double inv = 1.0 / s.std;
  for (double& v : out.data()) v = (v - s.mean) * inv;
  return out;
}

ImageGrid preprocess(std::span<const std::uint8_t> bytes, const CropSpec& crop,
                     const Standardization& stats) {
  return standardize(apply_crop(to_luma(decode_image(bytes)), crop), stats);
}

std::uint64_t entry_seed(std::uint64_t dataset_seed, std::size_t index) {
  SeededUniform mix(dataset_seed ^ (0xd1b54a32d192ed03ULL * (index + 1)));
  return mix.next_u64();
}

namespace {

std::string entry_name(std::size_t id, const char* suffix) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", id);
  return std::string("entries/") + buf + suffix;
}

fs::path resolve(const std::string& p, const fs::path& root) {
  fs::path path(p);
  if (root.empty() || path.is_absolute()) return path;
  return root / path;
}

ImageGrid source_luma(const DatasetSource& s, const fs::path& root) {
  return to_luma(read_image_file(resolve(s.path, root)));
}

// Decomposes one prepared input and writes both tensor files.
void compute_entry(EntryRecord& rec, const ImageGrid& input, const DecompositionConfig& dc,
                   const fs::path& out_dir) {
  const Decomposition d = decompose(input, dc);
  rec.input_file = entry_name(rec.id, ".input.tvt");
  rec.bands_file = entry_name(rec.id, ".bands.tvt");
  write_band_tensor(out_dir / rec.input_file, BandTensor::from_grids({input}));
  write_band_tensor(out_dir / rec.bands_file, BandTensor::from_grids(d.bands.bands));
  rec.bands = d.bands.count();
  rec.width = input.width();
  rec.height = input.height();
  rec.iterations = d.total_iterations;
  rec.nonconverged_steps = d.nonconverged_steps;
  rec.max_gap = d.max_gap;
  rec.warnings.clear();
  if (d.nonconverged_steps > 0) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "%d of %d prox solves stopped at max_iters (largest relative gap %.3g)",
                  d.nonconverged_steps, dc.n_steps, d.max_gap);
    rec.warnings.emplace_back(buf);
  }
}

DatasetManifest build(DatasetManifest m, const std::vector<ImageGrid>& raws,
                      const fs::path& out_dir, int threads) {
  fs::create_directories(out_dir / "entries");
  parallel_for(m.entries.size(), threads, [&](std::size_t i) {
    EntryRecord& rec = m.entries[i];
    const ImageGrid input = rec.source.scene ? raws[i] : standardize(raws[i], m.standardization);
    compute_entry(rec, input, m.decomposition, out_dir);
  });
  write_manifest(out_dir, m);
  return m;
}

}  // namespace

DatasetManifest generate_ground_truth(const std::vector<DatasetSource>& sources,
                                      const PipelineConfig& cfg, const fs::path& out_dir,
                                      const GenerateOptions& opt) {
  cfg.validate();
  if (sources.empty()) throw std::invalid_argument("generate_ground_truth: no sources");
  DatasetManifest m;
  m.dataset = cfg.dataset;
  m.decomposition = cfg.decomposition;
  std::vector<ImageGrid> raws(sources.size());
  m.entries.resize(sources.size());
  parallel_for(sources.size(), opt.threads, [&](std::size_t i) {
    EntryRecord& rec = m.entries[i];
    rec.id = i;
    rec.source = sources[i];
    rec.seed = entry_seed(cfg.dataset.seed, i);
    if (rec.source.scene) {
      raws[i] = render_scene(*rec.source.scene);
      rec.crop = CropSpec{0, 0, raws[i].width(), 1};
    } else {
      const ImageGrid luma = source_luma(rec.source, opt.source_root);
      rec.crop = choose_crop(luma.width(), luma.height(), cfg.dataset, rec.seed);
      raws[i] = apply_crop(luma, rec.crop);
    }
  });
  std::vector<ImageGrid> natural;
  for (std::size_t i = 0; i < raws.size(); ++i)
    if (!m.entries[i].source.scene) natural.push_back(raws[i]);
  m.standardization = compute_standardization(natural);
  return build(std::move(m), raws, out_dir, opt.threads);
}

DatasetManifest regenerate(const DatasetManifest& manifest, const fs::path& out_dir,
                           const GenerateOptions& opt) {
  manifest.decomposition.validate();
  std::vector<ImageGrid> raws(manifest.entries.size());
  parallel_for(raws.size(), opt.threads, [&](std::size_t i) {
    const EntryRecord& rec = manifest.entries[i];
    raws[i] = rec.source.scene ? render_scene(*rec.source.scene)
                               : apply_crop(source_luma(rec.source, opt.source_root), rec.crop);
  });
  return build(manifest, raws, out_dir, opt.threads);
}

std::vector<std::string> verify_dataset(const fs::path& dataset_dir) {
  std::vector<std::string> problems;
  const DatasetManifest m = read_manifest(dataset_dir);
  for (const auto& e : m.entries) {
    auto check = [&](const std::string& rel, int bands) {
      const fs::path p = dataset_dir / rel;
      if (!fs::exists(p)) {
        problems.push_back(rel + ": missing");
        return;
      }
      try {
        const BandTensor t = read_band_tensor(p);
        if (t.bands != bands || t.height != e.height || t.width != e.width) {
          problems.push_back(rel + ": shape " + std::to_string(t.bands) + "x" +
                             std::to_string(t.height) + "x" + std::to_string(t.width) +
                             " differs from the manifest");
        }
      } catch (const std::exception& ex) {
        problems.push_back(ex.what());
      }
    };
    check(e.input_file, 1);
    check(e.bands_file, e.bands);
  }
  return problems;
}

std::vector<DatasetSource> synthetic_sources(const SceneGeneratorConfig& cfg, std::size_t count,
                                             std::uint64_t seed) {
  std::vector<DatasetSource> out;
  for (std::size_t i = 0; i < count; ++i) {
    DatasetSource s;
    s.scene = random_scene(cfg, entry_seed(seed, i));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---- manifest JSON ----

void to_json(json& j, const DatasetManifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    json src;
    if (e.source.scene) {
      src = json{{"kind", "scene"}, {"scene", *e.source.scene}};
    } else {
      src = json{{"kind", "image"}, {"path", e.source.path}};
    }
    entries.push_back(json{{"id", e.id},
                           {"source", src},
                           {"crop", {{"x", e.crop.x}, {"y", e.crop.y}, {"size", e.crop.size}}},
                           {"downsample", e.crop.downsample},
                           {"seed", e.seed},
                           {"input", e.input_file},
                           {"bands", e.bands_file},
                           {"shape", {e.bands, e.height, e.width}},
                           {"iterations", e.iterations},
                           {"nonconverged_steps", e.nonconverged_steps},
                           {"max_gap", e.max_gap},
                           {"warnings", e.warnings}});
  }
  j = json{{"format", "tvspec-dataset"},
           {"format_version", m.format_version},
           {"preprocessing",
            {{"luma", "bt601"},
             {"dataset", m.dataset},
             {"standardization", {{"mean", m.standardization.mean}, {"std", m.standardization.std}}},
             {"synthetic_unstandardized", m.synthetic_unstandardized}}},
           {"decomposition", m.decomposition},
           {"tensor", {{"magic", "TVSB"}, {"version", kTensorVersion}, {"dtype", "float32"}}},
           {"entries", entries}};
}

DatasetManifest manifest_from_json(const json& j) {
  try {
    DatasetManifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kManifestVersion) {
      throw std::runtime_error("unsupported manifest format_version " +
                               std::to_string(m.format_version));
    }
    const json& pre = j.at("preprocessing");
    merge_json(m.dataset, pre.at("dataset"));
    m.standardization.mean = pre.at("standardization").at("mean").get<double>();
    m.standardization.std = pre.at("standardization").at("std").get<double>();
    m.synthetic_unstandardized = pre.value("synthetic_unstandardized", true);
    m.decomposition = decomposition_from_json(j.at("decomposition"));
    for (const json& e : j.at("entries")) {
      EntryRecord r;
      r.id = e.at("id").get<std::size_t>();
      const json& src = e.at("source");
      if (src.at("kind").get<std::string>() == "scene") {
        r.source.scene = src.at("scene").get<Scene>();
      } else {
        r.source.path = src.at("path").get<std::string>();
      }
      r.crop.x = e.at("crop").at("x").get<int>();
      r.crop.y = e.at("crop").at("y").get<int>();
      r.crop.size = e.at("crop").at("size").get<int>();
      r.crop.downsample = e.at("downsample").get<int>();
      r.seed = e.at("seed").get<std::uint64_t>();
      r.input_file = e.at("input").get<std::string>();
      r.bands_file = e.at("bands").get<std::string>();
      r.bands = e.at("shape").at(0).get<int>();
      r.height = e.at("shape").at(1).get<int>();
      r.width = e.at("shape").at(2).get<int>();
      r.iterations = e.value("iterations", 0);
      r.nonconverged_steps = e.value("nonconverged_steps", 0);
      r.max_gap = e.value("max_gap", 0.0);
      r.warnings = e.value("warnings", std::vector<std::string>{});
      m.entries.push_back(std::move(r));
    }
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed manifest: ") + e.what());
  }
}

DatasetManifest read_manifest(const fs::path& dataset_dir) {
  const fs::path p = dataset_dir / kManifestName;
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(p.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

void write_manifest(const fs::path& dataset_dir, const DatasetManifest& m) {
  fs::create_directories(dataset_dir);
  const fs::path p = dataset_dir / kManifestName;
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << json(m).dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace tvspec
