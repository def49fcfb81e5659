#include "poresim/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <set>

#include "poresim/error.hpp"
#include "poresim/io.hpp"

namespace poresim {

void PipelineConfig::validate() const {
  detection.validate();
  clean.validate();
  forest.validate();
  if (!(beta > 1.0)) throw InvalidParameter("beta must be > 1");
}

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                    const std::string& where) {
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw InvalidInput("unknown config key '" + where + key + "'");
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  try {
    reject_unknown(j, {"detection", "clean", "forest", "beta", "rng_seed", "paths"}, "");
    if (j.contains("detection")) {
      const auto& d = j.at("detection");
      reject_unknown(d, {"sigma1", "sigma2", "response_threshold", "morph_radius", "min_area_px",
                         "max_area_px", "max_aspect_ratio", "connectivity"},
                     "detection.");
      read(d, "sigma1", cfg.detection.sigma1);
      read(d, "sigma2", cfg.detection.sigma2);
      read(d, "response_threshold", cfg.detection.response_threshold);
      read(d, "morph_radius", cfg.detection.morph_radius);
      read(d, "min_area_px", cfg.detection.min_area_px);
      read(d, "max_area_px", cfg.detection.max_area_px);
      read(d, "max_aspect_ratio", cfg.detection.max_aspect_ratio);
      read(d, "connectivity", cfg.detection.connectivity);
    }
    if (j.contains("clean")) {
      const auto& c = j.at("clean");
      reject_unknown(c, {"window_days", "k_sigma"}, "clean.");
      read(c, "window_days", cfg.clean.window_days);
      read(c, "k_sigma", cfg.clean.k_sigma);
    }
    if (j.contains("forest")) {
      const auto& f = j.at("forest");
      reject_unknown(f, {"n_trees", "max_depth", "min_samples_leaf", "features_per_split",
                         "bootstrap", "rng_seed"},
                     "forest.");
      read(f, "n_trees", cfg.forest.n_trees);
      read(f, "max_depth", cfg.forest.tree.max_depth);
      read(f, "min_samples_leaf", cfg.forest.tree.min_samples_leaf);
      read(f, "features_per_split", cfg.forest.tree.features_per_split);
      read(f, "bootstrap", cfg.forest.bootstrap);
      read(f, "rng_seed", cfg.forest.rng_seed);
    }
    read(j, "beta", cfg.beta);
    read(j, "rng_seed", cfg.rng_seed);
    read(j, "paths", cfg.paths);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("invalid config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["detection"] = {{"sigma1", cfg.detection.sigma1},
                    {"sigma2", cfg.detection.sigma2},
                    {"response_threshold", cfg.detection.response_threshold},
                    {"morph_radius", cfg.detection.morph_radius},
                    {"min_area_px", cfg.detection.min_area_px},
                    {"max_area_px", cfg.detection.max_area_px},
                    {"max_aspect_ratio", cfg.detection.max_aspect_ratio},
                    {"connectivity", cfg.detection.connectivity}};
  j["clean"] = {{"window_days", cfg.clean.window_days}, {"k_sigma", cfg.clean.k_sigma}};
  j["forest"] = {{"n_trees", cfg.forest.n_trees},
                 {"max_depth", cfg.forest.tree.max_depth},
                 {"min_samples_leaf", cfg.forest.tree.min_samples_leaf},
                 {"features_per_split", cfg.forest.tree.features_per_split},
                 {"bootstrap", cfg.forest.bootstrap},
                 {"rng_seed", cfg.forest.rng_seed}};
  j["beta"] = cfg.beta;
  j["rng_seed"] = cfg.rng_seed;
  j["paths"] = cfg.paths;
  return j;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  try {
    return config_from_json(nlohmann::json::parse(read_text(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void save_config(const std::filesystem::path& path, const PipelineConfig& cfg) {
  write_text_atomic(path, config_to_json(cfg).dump(2) + "\n");
}

std::string config_hash(const PipelineConfig& cfg) {
  const std::string text = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string library_version() { return PORESIM_VERSION; }

nlohmann::ordered_json run_report(const std::string& subcommand, const PipelineConfig& cfg) {
  nlohmann::ordered_json r;
  r["tool"] = "poresim";
  r["version"] = library_version();
  r["subcommand"] = subcommand;
  r["config_hash"] = config_hash(cfg);
  r["rng_seed"] = cfg.rng_seed;
  r["config"] = config_to_json(cfg);
  return r;
}

}  // namespace poresim
