#include "tvspec/config.hpp"

#include <fstream>
#include <initializer_list>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace tvspec {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw std::invalid_argument("unknown config key: " + where + "." + it.key());
  }
}

template <class T>
void take(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config key " + where + "." + key + " has the wrong type");
  }
}

}  // namespace

void DatasetConfig::validate() const {
  if (crop_size < 1) throw std::invalid_argument("dataset.crop_size must be >= 1");
  if (!(augment_fraction >= 0.0 && augment_fraction <= 1.0)) {
    throw std::invalid_argument("dataset.augment_fraction must lie in [0, 1]");
  }
  if (augment_factor < 1) throw std::invalid_argument("dataset.augment_factor must be >= 1");
}

void PipelineConfig::validate() const {
  decomposition.validate();
  ssim.validate();
  dataset.validate();
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
}

void merge_json(SolverConfig& cfg, const json& j) {
  const std::string w = "solver";
  check_keys(j,
             {"method", "max_iters", "gap_tol", "pd_step_tau", "pd_step_sigma", "projection_step",
              "check_every", "adaptive_restart"},
             w);
  if (j.contains("method")) {
    if (!j["method"].is_string()) throw std::invalid_argument("solver.method must be a string");
    cfg.method = solver_method_from_string(j["method"].get<std::string>());
  }
  take(j, "max_iters", cfg.max_iters, w);
  take(j, "gap_tol", cfg.gap_tol, w);
  take(j, "pd_step_tau", cfg.pd_step_tau, w);
  take(j, "pd_step_sigma", cfg.pd_step_sigma, w);
  take(j, "projection_step", cfg.projection_step, w);
  take(j, "check_every", cfg.check_every, w);
  take(j, "adaptive_restart", cfg.adaptive_restart, w);
}

void merge_json(DecompositionConfig& cfg, const json& j) {
  check_keys(j, {"solver", "dt", "n_steps", "bands"}, "decomposition");
  if (j.contains("solver")) merge_json(cfg.solver, j["solver"]);
  take(j, "dt", cfg.dt, "decomposition");
  const int old_n = cfg.n_steps;
  take(j, "n_steps", cfg.n_steps, "decomposition");
  if (j.contains("bands")) {
    const json& b = j["bands"];
    check_keys(b, {"upper", "steps_per_fine_band", "fine_upper"}, "decomposition.bands");
    if (b.contains("upper") && b.contains("fine_upper")) {
      throw std::invalid_argument("decomposition.bands: give either upper or fine_upper");
    }
    if (b.contains("upper")) {
      take(b, "upper", cfg.schedule.upper, "decomposition.bands");
    } else if (b.contains("fine_upper")) {
      int per = 2;
      std::vector<int> fine;
      take(b, "steps_per_fine_band", per, "decomposition.bands");
      take(b, "fine_upper", fine, "decomposition.bands");
      cfg.schedule = BandSchedule::from_fine_bands(cfg.n_steps, per, fine);
    } else if (b.contains("steps_per_fine_band")) {
      throw std::invalid_argument("decomposition.bands.steps_per_fine_band needs fine_upper");
    }
  } else if (cfg.n_steps != old_n && cfg.n_steps >= 3) {
    cfg.schedule = BandSchedule::default_dyadic(cfg.n_steps);
  }
}

void merge_json(SsimConfig& cfg, const json& j) {
  const std::string w = "ssim";
  check_keys(j, {"window", "sigma", "k1", "k2", "dynamic_range", "range_floor", "global"}, w);
  take(j, "window", cfg.window, w);
  take(j, "sigma", cfg.sigma, w);
  take(j, "k1", cfg.k1, w);
  take(j, "k2", cfg.k2, w);
  take(j, "dynamic_range", cfg.dynamic_range, w);
  take(j, "range_floor", cfg.range_floor, w);
  take(j, "global", cfg.global, w);
}

void merge_json(DatasetConfig& cfg, const json& j) {
  const std::string w = "dataset";
  check_keys(j, {"crop_size", "augment_fraction", "augment_factor", "seed"}, w);
  take(j, "crop_size", cfg.crop_size, w);
  take(j, "augment_fraction", cfg.augment_fraction, w);
  take(j, "augment_factor", cfg.augment_factor, w);
  take(j, "seed", cfg.seed, w);
}

void merge_json(PipelineConfig& cfg, const json& j) {
  check_keys(j, {"decomposition", "ssim", "dataset", "threads"}, "config");
  if (j.contains("decomposition")) merge_json(cfg.decomposition, j["decomposition"]);
  if (j.contains("ssim")) merge_json(cfg.ssim, j["ssim"]);
  if (j.contains("dataset")) merge_json(cfg.dataset, j["dataset"]);
  take(j, "threads", cfg.threads, "config");
}

void to_json(json& j, const SolverConfig& c) {
  j = json{{"method", to_string(c.method)},
           {"max_iters", c.max_iters},
           {"gap_tol", c.gap_tol},
           {"pd_step_tau", c.pd_step_tau},
           {"pd_step_sigma", c.pd_step_sigma},
           {"projection_step", c.projection_step},
           {"check_every", c.check_every},
           {"adaptive_restart", c.adaptive_restart}};
}

void to_json(json& j, const BandSchedule& s) { j = json{{"upper", s.upper}}; }

void to_json(json& j, const DecompositionConfig& c) {
  j = json{{"solver", c.solver}, {"dt", c.dt}, {"n_steps", c.n_steps}, {"bands", c.schedule}};
}

void to_json(json& j, const DatasetConfig& c) {
  j = json{{"crop_size", c.crop_size},
           {"augment_fraction", c.augment_fraction},
           {"augment_factor", c.augment_factor},
           {"seed", c.seed}};
}

void to_json(json& j, const PipelineConfig& c) {
  j = json{{"decomposition", c.decomposition},
           {"ssim", c.ssim},
           {"dataset", c.dataset},
           {"threads", c.threads}};
}

DecompositionConfig decomposition_from_json(const json& j) {
  DecompositionConfig c;
  merge_json(c, j);
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  PipelineConfig cfg;
  merge_json(cfg, j);
  cfg.validate();
  return cfg;
}

}  // namespace tvspec
