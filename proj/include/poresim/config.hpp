#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "poresim/datapipe.hpp"
#include "poresim/poreseg.hpp"
#include "poresim/rfregress.hpp"

namespace poresim {

struct PipelineConfig {
  DetectionConfig detection;
  CleanConfig clean;
  ForestConfig forest;
  double beta = 1.5;
  std::uint64_t rng_seed = 42;
  std::map<std::string, std::string> paths;

  void validate() const;
  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);

PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const PipelineConfig& cfg);

// FNV-1a 64 over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const PipelineConfig& cfg);

std::string library_version();

// Skeleton run report: tool, version, subcommand, config hash and seed.
nlohmann::ordered_json run_report(const std::string& subcommand, const PipelineConfig& cfg);

}  // namespace poresim
