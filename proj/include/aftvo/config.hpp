#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include "json.hpp"
#include <optional>
#include <string>
#include <vector>

#include "aftvo/eval.hpp"

namespace aftvo::cli {

using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AblationConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<aft::Variant> variants = aft::all_variants();
  std::vector<eval::SensorSubset> subsets;  // empty: camera ablation uses the preset subsets
};

struct RunConfig {
  std::string experiment = "aftvo";
  std::uint64_t seed = 1;
  std::string output_dir = "runs/aftvo";
  std::string sensor_preset = "asynchronous_triplet";  // or "custom"
  eval::PipelineConfig pipeline;
  std::size_t checkpoint_every = 1;  // fusion epochs between checkpoints
  AblationConfig ablation;
};

/// Desk-scale defaults.
RunConfig default_config();
/// Layer/width/head/learning-rate/batch values of the full-size model.
void apply_full_scale(RunConfig& config);

std::vector<sim::SensorSpec> sensor_preset(const std::string& name, double duration_s);

/// Strict parse: unknown keys and wrong types raise ConfigError. Missing keys
/// keep the values already in `base`.
RunConfig config_from_json(const json& j, RunConfig base = default_config());
json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path, RunConfig base = default_config());

/// Applies AFTVO_SEED from the environment when set.
void apply_seed_override(RunConfig& config);

/// Hash of the simulator section; ties checkpoints to the data they used.
std::string data_hash(const RunConfig& config);

std::string version_string();

}  // namespace aftvo::cli
