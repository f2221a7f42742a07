#include "cli.hpp"

#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"

namespace tvspec::cli {

using nlohmann::json;

namespace {

// Options shared by every subcommand. Flags given on the command line are
// layered over the config file, which is layered over the defaults.
struct GlobalOptions {
  std::string config;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<int> steps;
  std::optional<std::string> method;
  std::optional<double> gap_tol;
  std::optional<int> max_iters;
  bool dump_config = false;
};

PipelineConfig effective_config(const GlobalOptions& g) {
  PipelineConfig cfg = g.config.empty() ? PipelineConfig{} : load_config(g.config);
  json flags = json::object();
  json dec = json::object();
  json solver = json::object();
  if (g.dt) dec["dt"] = *g.dt;
  if (g.steps) dec["n_steps"] = *g.steps;
  if (g.method) solver["method"] = *g.method;
  if (g.gap_tol) solver["gap_tol"] = *g.gap_tol;
  if (g.max_iters) solver["max_iters"] = *g.max_iters;
  if (!solver.empty()) dec["solver"] = solver;
  if (!dec.empty()) flags["decomposition"] = dec;
  if (g.threads) flags["threads"] = *g.threads;
  if (g.seed) flags["dataset"] = {{"seed", *g.seed}};
  merge_json(cfg, flags);
  cfg.validate();
  return cfg;
}

void add_input_options(CLI::App* c, InputOptions& in) {
  c->add_option("--crop", in.crop, "Crop x,y,w,h applied after luma conversion");
  c->add_option("--normalize", in.normalize, "Image normalisation: standardize or none")
      ->capture_default_str();
  c->add_option("--mean", in.mean, "Fixed mean for standardize (default: the image's own)");
  c->add_option("--std", in.std, "Fixed standard deviation for standardize");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral total-variation decomposition", "tvspec"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  app.set_version_flag("--version", "tvspec 1.0");

  GlobalOptions g;
  app.add_option("--config", g.config, "JSON config file (see docs/formats.md)");
  app.add_option("--threads", g.threads, "Worker threads for batch commands");
  app.add_option("--seed", g.seed, "Dataset seed");
  app.add_option("--dt", g.dt, "Flow step size");
  app.add_option("--steps", g.steps, "Number of flow steps N (resets the band schedule)");
  app.add_option("--method", g.method, "Prox solver: primal-dual or chambolle-projection");
  app.add_option("--gap-tol", g.gap_tol, "Relative duality gap tolerance");
  app.add_option("--max-iters", g.max_iters, "Iteration cap per prox solve");
  app.add_flag("--dump-config", g.dump_config, "Print the effective config as JSON and exit");

  DecomposeArgs dec;
  auto* c_dec = app.add_subcommand("decompose", "Bands, spectrum and manifest for one image");
  c_dec->add_option("input", dec.input, "Image (PNG/PGM/PPM) or one-plane .tvt")->required();
  c_dec->add_option("-o,--out", dec.out_dir, "Output directory")->required();
  c_dec->add_flag("!--no-svg", dec.svg, "Skip the spectrum SVG");
  add_input_options(c_dec, dec.in);

  FilterArgs fil;
  auto* c_fil = app.add_subcommand("filter", "Spectral band-pass filtering of one image");
  c_fil->add_option("input", fil.input, "Image or one-plane .tvt")->required();
  c_fil->add_option("-o,--out", fil.out_dir, "Output directory")->required();
  c_fil->add_option("--band", fil.band, "Keep one band of the schedule (1-based)");
  c_fil->add_option("--tmin", fil.t_min, "Lower scale of the pass band");
  c_fil->add_option("--tmax", fil.t_max, "Upper scale of the pass band (exclusive)");
  c_fil->add_option("--residual-weight", fil.residual_weight, "Weight of the residual f_r");
  add_input_options(c_fil, fil.in);

  SpectrumArgs spe;
  auto* c_spe = app.add_subcommand("spectrum", "Spectrum S(t) of one image as CSV");
  c_spe->add_option("input", spe.input, "Image or one-plane .tvt")->required();
  c_spe->add_option("-o,--out", spe.csv, "CSV file")->required();
  c_spe->add_option("--svg", spe.svg, "Also write an SVG plot");
  add_input_options(c_spe, spe.in);

  GenDatasetArgs gen;
  auto* c_gen = app.add_subcommand("gen-dataset", "Ground-truth band dataset");
  c_gen->add_option("--images", gen.images, "Directory of source images");
  c_gen->add_option("--count", gen.count, "Image entries (default: one per image)");
  c_gen->add_option("--synthetic", gen.synthetic, "Additional synthetic disk scenes");
  c_gen->add_option("-o,--out", gen.out_dir, "Output dataset directory")->required();
  c_gen->add_option("--regenerate", gen.regenerate, "Rebuild the entries of this dataset");
  c_gen->add_option("--source-root", gen.source_root, "Base for relative source paths");

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Score predicted bands against a ground-truth dataset");
  c_ev->add_option("--gt", ev.gt, "Ground-truth dataset directory")->required();
  c_ev->add_option("--pred", ev.pred, "Directory of <entry>.<suffix>.tvt predictions")->required();
  c_ev->add_option("--suffix", ev.suffix, "Prediction file suffix")->capture_default_str();
  c_ev->add_option("-o,--out", ev.csv, "Metrics table CSV (default: stdout)");
  c_ev->add_option("--json", ev.json, "Per-image JSON report");
  c_ev->add_flag("--allow-missing", ev.allow_missing, "Skip entries without a prediction");

  InvarianceArgs inv;
  auto* c_inv = app.add_subcommand("invariance", "One-homogeneity, translation and rotation tests");
  c_inv->add_option("--input", inv.inputs, "Images or one-plane .tvt files");
  c_inv->add_option("--dataset", inv.dataset, "Use the inputs of a dataset");
  c_inv->add_option("--limit", inv.limit, "At most this many dataset inputs");
  c_inv->add_option("--precomputed", inv.precomputed, "Score bands produced elsewhere");
  c_inv->add_option("--suffix", inv.suffix, "Prediction file suffix")->capture_default_str();
  c_inv->add_option("--export", inv.export_dir, "Write the transformed inputs and stop");
  c_inv->add_option("-o,--out", inv.csv, "Invariance table CSV (default: stdout)");
  c_inv->add_option("--json", inv.json, "Per-image JSON report");
  auto* o_dx = c_inv->add_option("--dx", inv.settings.dx, "Horizontal shift")->capture_default_str();
  auto* o_dy = c_inv->add_option("--dy", inv.settings.dy, "Vertical shift")->capture_default_str();
  std::string fill = "replicate";
  auto* o_fill = c_inv->add_option("--fill", fill, "Shift fill: replicate or circular")
                     ->check(CLI::IsMember({"replicate", "circular"}))
                     ->capture_default_str();
  auto* o_ang = c_inv->add_option("--angle", inv.settings.degrees, "Rotation: 90, 180 or 270")
                    ->check(CLI::IsMember({90, 180, 270}))
                    ->capture_default_str();
  add_input_options(c_inv, inv.in);

  BenchArgs ben;
  std::string sizes = "64,128,256,512,1024";
  auto* c_ben = app.add_subcommand("bench", "Decomposition wall time across image sizes");
  c_ben->add_option("--sizes", sizes, "Comma-separated square sizes")->capture_default_str();
  c_ben->add_option("--repeats", ben.repeats, "Runs averaged per size")->capture_default_str();
  c_ben->add_option("--image", ben.image, "Resample this image instead of the synthetic texture");
  c_ben->add_option("-o,--out", ben.csv, "Timing table CSV (default: stdout)");
  c_ben->add_option("--json", ben.json, "JSON report");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    err << "run 'tvspec --help' for usage\n";
    return kExitUsage;
  }

  if (app.get_subcommands().empty() && !g.dump_config) {
    err << "error: A subcommand is required\n";
    err << "run 'tvspec --help' for usage\n";
    return kExitUsage;
  }

  PipelineConfig cfg;
  try {
    cfg = effective_config(g);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (g.dump_config) {
    out << json(cfg).dump(2) << '\n';
    return kExitOk;
  }

  try {
    if (c_dec->parsed()) {
      cmd_decompose(dec, cfg, out);
    } else if (c_fil->parsed()) {
      cmd_filter(fil, cfg, out);
    } else if (c_spe->parsed()) {
      cmd_spectrum(spe, cfg, out);
    } else if (c_gen->parsed()) {
      cmd_gen_dataset(gen, cfg, out);
    } else if (c_ev->parsed()) {
      cmd_eval(ev, cfg, out);
    } else if (c_inv->parsed()) {
      inv.settings.fill = shift_fill_from_string(fill);
      inv.settings_given = o_dx->count() + o_dy->count() + o_fill->count() + o_ang->count() > 0;
      cmd_invariance(inv, cfg, out);
    } else if (c_ben->parsed()) {
      ben.sizes.clear();
      std::stringstream ss(sizes);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        try {
          ben.sizes.push_back(std::stoi(tok));
        } catch (const std::exception&) {
          throw UsageError("--sizes: '" + tok + "' is not an integer");
        }
      }
      cmd_bench(ben, cfg, out);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace tvspec::cli
