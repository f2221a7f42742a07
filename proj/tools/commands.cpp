#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "tvspec/dataset.hpp"
#include "tvspec/image_io.hpp"
#include "tvspec/metrics.hpp"
#include "tvspec/parallel.hpp"
#include "tvspec/spectral.hpp"
#include "tvspec/tensor_file.hpp"

namespace tvspec::cli {

using nlohmann::json;

namespace {

bool has_suffix(const std::string& s, const std::string& tail) {
  return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

void write_json(const fs::path& p, const json& j) {
  auto os = open_out(p);
  os << j.dump(2) << '\n';
}

std::vector<int> parse_ints(const std::string& s, const char* what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": '" + tok + "' is not an integer");
    }
  }
  return out;
}

json stats_json(const Decomposition& d, int n_steps) {
  return {{"total_iterations", d.total_iterations},
          {"nonconverged_steps", d.nonconverged_steps},
          {"prox_solves", n_steps},
          {"max_relative_gap", d.max_gap}};
}

void warn_nonconverged(const Decomposition& d, int n_steps, std::ostream& log) {
  if (d.nonconverged_steps > 0) {
    log << "warning: " << d.nonconverged_steps << " of " << n_steps
        << " prox solves hit max_iters (largest relative gap " << d.max_gap << ")\n";
  }
}

}  // namespace

ImageGrid load_input(const fs::path& path, const InputOptions& opt, json* record) {
  if (!fs::exists(path)) throw std::runtime_error("input not found: " + path.string());
  json rec{{"path", path.string()}};
  ImageGrid g;
  if (path.extension() == ".tvt") {
    const BandTensor t = read_band_tensor(path);
    if (t.bands != 1) {
      throw std::runtime_error(path.string() + ": input tensor must hold one plane, has " +
                               std::to_string(t.bands));
    }
    g = t.plane(0);
    rec["kind"] = "tensor";
  } else {
    g = to_luma(read_image_file(path));
    rec["kind"] = "image";
    rec["luma"] = "BT.601";
  }
  if (!opt.crop.empty()) {
    const auto c = parse_ints(opt.crop, "--crop");
    if (c.size() != 4) throw UsageError("--crop expects x,y,w,h");
    if (c[0] < 0 || c[1] < 0 || c[2] < 1 || c[3] < 1 || c[0] + c[2] > g.width() ||
        c[1] + c[3] > g.height()) {
      throw UsageError("--crop " + opt.crop + " does not fit the " + std::to_string(g.width()) +
                       "x" + std::to_string(g.height()) + " input");
    }
    g = crop(g, c[0], c[1], c[2], c[3]);
    rec["crop"] = c;
  }
  if (rec["kind"] == "image") {
    if (opt.normalize == "standardize") {
      Standardization s = compute_standardization({g});
      if (opt.mean) s.mean = *opt.mean;
      if (opt.std) s.std = *opt.std;
      if (!(s.std > 0.0)) throw UsageError("--std must be positive");
      g = standardize(g, s);
      rec["normalize"] = {{"mode", "standardize"}, {"mean", s.mean}, {"std", s.std}};
    } else if (opt.normalize == "none") {
      rec["normalize"] = {{"mode", "none"}};
    } else {
      throw UsageError("--normalize must be standardize or none");
    }
  }
  rec["width"] = g.width();
  rec["height"] = g.height();
  if (record) *record = std::move(rec);
  return g;
}

void cmd_decompose(const DecomposeArgs& a, const PipelineConfig& cfg, std::ostream& log) {
  json input;
  const ImageGrid f = load_input(a.input, a.in, &input);
  const auto& dc = cfg.decomposition;
  const Decomposition d = decompose(f, dc);
  warn_nonconverged(d, dc.n_steps, log);
  fs::create_directories(a.out_dir);

  json bands = json::array();
  for (int k = 0; k < d.bands.count(); ++k) {
    const ImageGrid& b = d.bands.bands[k];
    const DisplayScaling s = minmax_scaling(b);
    char name[32];
    std::snprintf(name, sizeof name, "band_%d.png", k + 1);
    write_png(a.out_dir / name, b, s);
    bands.push_back({{"band", k + 1},
                     {"png", name},
                     {"first_index", d.bands.schedule.first_index(k)},
                     {"last_index", d.bands.schedule.last_index(k)},
                     {"min", min_value(b)},
                     {"max", max_value(b)},
                     {"png_scaling", {{"offset", s.offset}, {"scale", s.scale}}}});
  }
  write_band_tensor(a.out_dir / "bands.tvt", BandTensor::from_grids(d.bands.bands));
  write_band_tensor(a.out_dir / "input.tvt", BandTensor::from_grids({f}));
  {
    auto os = open_out(a.out_dir / "spectrum.csv");
    d.spectrum.write_csv(os);
  }
  json files{{"bands", "bands.tvt"}, {"input", "input.tvt"}, {"spectrum_csv", "spectrum.csv"}};
  if (a.svg) {
    auto os = open_out(a.out_dir / "spectrum.svg");
    d.spectrum.write_svg(os);
    files["spectrum_svg"] = "spectrum.svg";
  }
  const ImageGrid recon = d.bands.sum();
  json m{{"tool", "tvspec decompose"},
         {"input", input},
         {"decomposition", dc},
         {"files", files},
         {"bands", bands},
         {"peak_scale", peak_scale(d.spectrum)},
         {"reconstruction_relative_l2", relative_l2(recon, f)},
         {"solver", stats_json(d, dc.n_steps)}};
  write_json(a.out_dir / "manifest.json", m);
  log << "wrote " << d.bands.count() << " bands to " << a.out_dir.string() << '\n';
}

void cmd_filter(const FilterArgs& a, const PipelineConfig& cfg, std::ostream& log) {
  json input;
  const ImageGrid f = load_input(a.input, a.in, &input);
  const auto& dc = cfg.decomposition;
  FilterSpec spec;
  spec.h.assign(dc.n_steps - 1, 0.0);
  json filter;
  if (a.band) {
    const int k = *a.band - 1;
    if (k < 0 || k >= dc.schedule.band_count()) {
      throw UsageError("--band must lie in 1.." + std::to_string(dc.schedule.band_count()));
    }
    for (int i = dc.schedule.first_index(k); i <= dc.schedule.last_index(k); ++i) spec.h[i - 1] = 1.0;
    spec.residual_weight = k + 1 == dc.schedule.band_count() ? 1.0 : 0.0;
    filter = {{"band", *a.band}};
  } else {
    if (!(a.t_max > a.t_min)) throw UsageError("filter needs --band or --tmin < --tmax");
    for (int i = 1; i < dc.n_steps; ++i) {
      const double t = i * dc.dt;
      spec.h[i - 1] = (t >= a.t_min && t < a.t_max) ? 1.0 : 0.0;
    }
    spec.residual_weight = a.residual_weight;
    filter = {{"t_min", a.t_min}, {"t_max", a.t_max}};
  }
  filter["residual_weight"] = spec.residual_weight;
  ImageGrid out;
  const Decomposition d = decompose(f, dc, &spec, &out);
  warn_nonconverged(d, dc.n_steps, log);
  fs::create_directories(a.out_dir);
  const DisplayScaling s = minmax_scaling(out);
  write_png(a.out_dir / "filtered.png", out, s);
  write_band_tensor(a.out_dir / "filtered.tvt", BandTensor::from_grids({out}));
  json m{{"tool", "tvspec filter"},
         {"input", input},
         {"decomposition", dc},
         {"filter", filter},
         {"files", {{"png", "filtered.png"}, {"tensor", "filtered.tvt"}}},
         {"png_scaling", {{"offset", s.offset}, {"scale", s.scale}}},
         {"solver", stats_json(d, dc.n_steps)}};
  write_json(a.out_dir / "manifest.json", m);
  log << "wrote " << (a.out_dir / "filtered.png").string() << '\n';
}

void cmd_spectrum(const SpectrumArgs& a, const PipelineConfig& cfg, std::ostream& log) {
  const ImageGrid f = load_input(a.input, a.in);
  const Decomposition d = decompose(f, cfg.decomposition);
  warn_nonconverged(d, cfg.decomposition.n_steps, log);
  {
    auto os = open_out(a.csv);
    d.spectrum.write_csv(os);
  }
  if (!a.svg.empty()) {
    auto os = open_out(a.svg);
    d.spectrum.write_svg(os);
  }
  log << "peak scale " << peak_scale(d.spectrum) << '\n';
}

void cmd_gen_dataset(const GenDatasetArgs& a, const PipelineConfig& cfg, std::ostream& log) {
  GenerateOptions opt;
  opt.threads = cfg.threads;
  opt.source_root = a.source_root;
  DatasetManifest m;
  if (!a.regenerate.empty()) {
    m = regenerate(read_manifest(a.regenerate), a.out_dir, opt);
  } else {
    std::vector<DatasetSource> sources;
    if (!a.images.empty()) {
      const auto files = list_images(a.images);
      if (files.empty()) throw std::runtime_error("no PNG/PGM/PPM images in " + a.images.string());
      const std::size_t n = a.count ? a.count : files.size();
      for (std::size_t i = 0; i < n; ++i) sources.push_back({files[i % files.size()].string(), {}});
    }
    if (a.synthetic) {
      SceneGeneratorConfig sc;
      sc.width = sc.height = cfg.dataset.crop_size;
      auto syn = synthetic_sources(sc, a.synthetic, cfg.dataset.seed);
      sources.insert(sources.end(), syn.begin(), syn.end());
    }
    if (sources.empty()) throw UsageError("gen-dataset needs --images and/or --synthetic");
    m = generate_ground_truth(sources, cfg, a.out_dir, opt);
  }
  std::size_t warned = 0;
  for (const auto& e : m.entries) warned += e.warnings.empty() ? 0 : 1;
  log << "wrote " << m.entries.size() << " entries to " << a.out_dir.string();
  if (warned) log << " (" << warned << " with solver warnings)";
  log << '\n';
  const auto problems = verify_dataset(a.out_dir);
  for (const auto& p : problems) log << "error: " << p << '\n';
  if (!problems.empty()) throw std::runtime_error("dataset verification failed");
}

namespace {

std::string entry_stem(const EntryRecord& e) {
  std::string name = fs::path(e.bands_file).filename().string();
  return name.substr(0, name.find('.'));
}

fs::path find_prediction(const fs::path& dir, const std::string& stem, const std::string& suffix) {
  const std::string name = stem + "." + suffix + ".tvt";
  for (const fs::path& p : {dir / name, dir / "entries" / name})
    if (fs::exists(p)) return p;
  return {};
}

}  // namespace

void cmd_eval(const EvalArgs& a, const PipelineConfig& cfg, std::ostream& log) {
  const DatasetManifest m = read_manifest(a.gt);
  MetricsAccumulator acc;
  json per_image = json::array();
  std::size_t missing = 0;
  for (const auto& e : m.entries) {
    const std::string stem = entry_stem(e);
    const fs::path pred = find_prediction(a.pred, stem, a.suffix);
    if (pred.empty()) {
      if (!a.allow_missing) {
        throw std::runtime_error("no prediction " + stem + "." + a.suffix + ".tvt in " +
                                 a.pred.string());
      }
      ++missing;
      continue;
    }
    const ImageGrid input = read_band_tensor(a.gt / e.input_file).plane(0);
    const auto gt = read_band_tensor(a.gt / e.bands_file).planes();
    auto p = read_band_tensor(pred).planes();
    if (p.size() + 1 == gt.size()) {
      ImageGrid rest = input;
      for (const auto& b : p) rest -= b;
      p.push_back(std::move(rest));
    }
    if (p.size() != gt.size()) {
      throw std::runtime_error(pred.string() + ": " + std::to_string(p.size()) +
                               " bands, ground truth has " + std::to_string(gt.size()));
    }
    if (!p.front().same_shape(gt.front())) throw std::runtime_error(pred.string() + ": shape mismatch");
    const MetricsReport r = score_bands(p, gt, with_grey_level_floor(cfg.ssim, input));
    acc.add(r);
    per_image.push_back({{"entry", stem}, {"report", r}});
  }
  if (acc.count() == 0) throw std::runtime_error("no predictions matched the ground truth entries");
  const MetricsReport total = acc.result();
  if (!a.csv.empty()) {
    auto os = open_out(a.csv);
    total.write_table_csv(os);
  } else {
    total.write_table_csv(log);
  }
  if (!a.json.empty()) {
    write_json(a.json, {{"tool", "tvspec eval"},
                        {"ground_truth", a.gt.string()},
                        {"predictions", a.pred.string()},
                        {"ssim", cfg.ssim},
                        {"images", acc.count()},
                        {"missing", missing},
                        {"average", total},
                        {"per_image", per_image}});
  }
  log << "scored " << acc.count() << " images";
  if (missing) log << " (" << missing << " without predictions)";
  log << '\n';
}

namespace {

struct NamedInput {
  std::string name;
  ImageGrid f;
};

ImageGrid round_to_float(ImageGrid u) {
  for (double& v : u.data()) v = static_cast<double>(static_cast<float>(v));
  return u;
}

json settings_json(const InvarianceSettings& s) {
  return {{"dx", s.dx}, {"dy", s.dy}, {"fill", to_string(s.fill)}, {"angle", s.degrees}};
}

InvarianceSettings settings_from_json(const json& j) {
  InvarianceSettings s;
  s.dx = j.at("dx").get<int>();
  s.dy = j.at("dy").get<int>();
  s.fill = shift_fill_from_string(j.at("fill").get<std::string>());
  s.degrees = j.at("angle").get<int>();
  return s;
}

constexpr const char* kExportIndex = "invariance_inputs.json";

}  // namespace

void cmd_invariance(const InvarianceArgs& a, const PipelineConfig& cfg, std::ostream& log) {
  InvarianceSettings st = a.settings;
  std::vector<NamedInput> inputs;

  if (!a.precomputed.empty()) {
    const fs::path index = a.precomputed / kExportIndex;
    if (fs::exists(index)) {
      std::ifstream is(index);
      const json j = json::parse(is);
      if (!a.settings_given) st = settings_from_json(j.at("settings"));
      for (const auto& name : j.at("images")) {
        const std::string n = name.get<std::string>();
        inputs.push_back({n, read_band_tensor(a.precomputed / (n + "-original.input.tvt")).plane(0)});
      }
    } else {
      for (const auto& e : fs::directory_iterator(a.precomputed)) {
        const std::string fn = e.path().filename().string();
        if (has_suffix(fn, "-original.input.tvt")) {
          inputs.push_back({fn.substr(0, fn.size() - std::string("-original.input.tvt").size()),
                            read_band_tensor(e.path()).plane(0)});
        }
      }
      std::sort(inputs.begin(), inputs.end(),
                [](const NamedInput& x, const NamedInput& y) { return x.name < y.name; });
    }
  } else {
    if (!a.dataset.empty()) {
      const DatasetManifest m = read_manifest(a.dataset);
      for (const auto& e : m.entries) {
        if (a.limit && inputs.size() >= a.limit) break;
        inputs.push_back({entry_stem(e), read_band_tensor(a.dataset / e.input_file).plane(0)});
      }
    }
    for (const auto& p : a.inputs) {
      std::string stem = p.filename().string();
      stem = stem.substr(0, stem.find('.'));
      inputs.push_back({stem, load_input(p, a.in)});
    }
  }
  if (inputs.empty()) throw UsageError("invariance needs --input, --dataset or --precomputed inputs");
  if (st.degrees != 90 && st.degrees != 180 && st.degrees != 270) {
    throw UsageError("--angle must be 90, 180 or 270");
  }

  if (!a.export_dir.empty()) {
    fs::create_directories(a.export_dir);
    json names = json::array();
    for (auto& in : inputs) {
      const ImageGrid f = round_to_float(in.f);
      for (const auto& [variant, g] : invariance_inputs(f, st)) {
        write_band_tensor(a.export_dir / (in.name + "-" + variant + ".input.tvt"),
                          BandTensor::from_grids({g}));
      }
      names.push_back(in.name);
    }
    write_json(a.export_dir / kExportIndex,
               {{"settings", settings_json(st)},
                {"images", names},
                {"prediction_suffix", a.suffix},
                {"bands", cfg.decomposition.schedule.band_count()}});
    log << "exported " << inputs.size() << " x 4 inputs to " << a.export_dir.string() << '\n';
    return;
  }

  std::unique_ptr<Decomposer> dec;
  if (!a.precomputed.empty()) {
    auto p = std::make_unique<PrecomputedDecomposer>(cfg.decomposition.schedule, "precomputed");
    const std::size_t n = p->load_directory(a.precomputed, a.suffix);
    if (n == 0) {
      throw std::runtime_error("no <name>." + a.suffix + ".tvt predictions in " +
                               a.precomputed.string());
    }
    dec = std::move(p);
  } else {
    dec = std::make_unique<ModelDrivenDecomposer>(cfg.decomposition);
  }

  std::vector<std::vector<InvarianceReport>> reports(inputs.size());
  parallel_for(inputs.size(), cfg.threads, [&](std::size_t i) {
    const ImageGrid f = a.precomputed.empty() ? inputs[i].f : round_to_float(inputs[i].f);
    reports[i] = {test_homogeneity(*dec, f, cfg.ssim),
                  test_translation(*dec, f, st.dx, st.dy, st.fill, cfg.ssim),
                  test_rotation(*dec, f, st.degrees, cfg.ssim)};
  });
  InvarianceSummary summary;
  json per_image = json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (const auto& r : reports[i]) summary.add(r);
    per_image.push_back({{"image", inputs[i].name}, {"reports", reports[i]}});
  }
  if (!a.csv.empty()) {
    auto os = open_out(a.csv);
    summary.write_table_csv(os);
  } else {
    summary.write_table_csv(log);
  }
  if (!a.json.empty()) {
    json means = json::object();
    for (auto p : {InvarianceProperty::OneHomogeneity, InvarianceProperty::Translation,
                   InvarianceProperty::Rotation}) {
      means[to_string(p)] = summary.mean(p);
    }
    write_json(a.json, {{"tool", "tvspec invariance"},
                        {"decomposer", dec->name()},
                        {"settings", settings_json(st)},
                        {"ssim", cfg.ssim},
                        {"images", inputs.size()},
                        {"mean", means},
                        {"per_image", per_image}});
  }
  log << "tested " << inputs.size() << " images with the " << dec->name() << " decomposer\n";
}

ImageGrid resample(const ImageGrid& u, int width, int height) {
  ImageGrid out(width, height);
  const double sx = static_cast<double>(u.width()) / width;
  const double sy = static_cast<double>(u.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, u.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, u.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, u.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, u.width() - 1);
      const double wx = fx - x0;
      out.at(x, y) = (1 - wy) * ((1 - wx) * u.at(x0, y0) + wx * u.at(x1, y0)) +
                     wy * ((1 - wx) * u.at(x0, y1) + wx * u.at(x1, y1));
    }
  }
  return out;
}

ImageGrid bench_texture(int size, std::uint64_t seed) {
  // octaves at fixed pixel periods, so larger images hold more structures
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
  ImageGrid out(size, size);
  double amp = 1.0;
  for (int period : {32, 16, 8, 4}) {
    const int n = size / period + 2;
    ImageGrid lattice(n, n);
    for (double& v : lattice.data()) v = amp * uniform();
    out += crop(resample(lattice, n * period, n * period), 0, 0, size, size);
    amp *= 0.6;
  }
  return standardize(out, compute_standardization({out}));
}

std::vector<BenchRow> run_bench(const BenchArgs& a, const PipelineConfig& cfg, std::ostream& log) {
  if (a.sizes.empty()) throw UsageError("bench needs at least one size");
  if (a.repeats < 1) throw UsageError("--repeats must be >= 1");
  ImageGrid source;
  if (!a.image.empty()) source = to_luma(read_image_file(a.image));
  std::vector<BenchRow> rows;
  for (int s : a.sizes) {
    if (s < 16) throw UsageError("bench sizes must be >= 16");
    const ImageGrid f = a.image.empty()
                            ? bench_texture(s, cfg.dataset.seed)
                            : [&] {
                                const ImageGrid r = resample(source, s, s);
                                return standardize(r, compute_standardization({r}));
                              }();
    BenchRow row;
    row.size = s;
    double total = 0.0;
    for (int k = 0; k < a.repeats; ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      const Decomposition d = decompose(f, cfg.decomposition);
      total += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      row.iterations = d.total_iterations;
      row.nonconverged_steps = d.nonconverged_steps;
    }
    row.seconds = total / a.repeats;
    log << s << "x" << s << ": " << row.seconds << " s, " << row.iterations << " iterations\n";
    rows.push_back(row);
  }
  return rows;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "method";
  for (const auto& r : rows) os << ',' << static_cast<long long>(r.size) * r.size;
  os << "\nModel Driven on CPU";
  char buf[32];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.4f", r.seconds);
    os << ',' << buf;
  }
  os << '\n';
}

void cmd_bench(const BenchArgs& a, const PipelineConfig& cfg, std::ostream& log) {
  const auto rows = run_bench(a, cfg, log);
  if (!a.csv.empty()) {
    auto os = open_out(a.csv);
    write_bench_csv(os, rows);
  } else {
    write_bench_csv(log, rows);
  }
  if (!a.json.empty()) {
    json r = json::array();
    for (const auto& row : rows) {
      r.push_back({{"size", row.size},
                   {"pixels", static_cast<long long>(row.size) * row.size},
                   {"seconds", row.seconds},
                   {"iterations", row.iterations},
                   {"nonconverged_steps", row.nonconverged_steps}});
    }
    write_json(a.json, {{"tool", "tvspec bench"},
                        {"decomposition", cfg.decomposition},
                        {"repeats", a.repeats},
                        {"threads", 1},
                        {"input", a.image.empty() ? std::string("synthetic texture") : a.image.string()},
                        {"rows", r}});
  }
}

}  // namespace tvspec::cli
