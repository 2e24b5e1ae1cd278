#include <cstdlib>
#include <fstream>
#include <set>

#include "aftvo/config.hpp"

namespace aftvo::cli {
namespace {

/// Reads the keys of one JSON object and rejects any it was not asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key())) throw ConfigError("unknown config key '" + path_ + "." + it.key() + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

sim::SensorSpec sensor_from_json(const json& j, const std::string& path) {
  sim::SensorSpec s;
  Section sec(j, path);
  sec.get("source_id", s.source_id);
  sec.get("rate_hz", s.rate_hz);
  sec.get("phase_offset_us", s.phase_offset);
  sec.get("jitter_std_us", s.jitter_std_us);
  sec.get("noise_std_translation", s.noise_std_translation);
  sec.get("noise_std_rotation", s.noise_std_rotation);
  sec.get("dropout_prob", s.dropout_prob);
  sec.get("correlation_group", s.correlation_group);
  sec.get("correlation", s.correlation);
  if (const json* windows = sec.child("degradation")) {
    if (!windows->is_array()) throw ConfigError(path + ".degradation: expected an array");
    for (std::size_t i = 0; i < windows->size(); ++i) {
      sim::DegradationWindow w{};
      Section ws((*windows)[i], path + ".degradation[" + std::to_string(i) + "]");
      ws.get("start_us", w.start);
      ws.get("end_us", w.end);
      ws.get("multiplier", w.multiplier);
      ws.finish();
      s.degradation.push_back(w);
    }
  }
  sec.finish();
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return s;
}

json sensor_to_json(const sim::SensorSpec& s) {
  json windows = json::array();
  for (const auto& w : s.degradation)
    windows.push_back({{"start_us", w.start}, {"end_us", w.end}, {"multiplier", w.multiplier}});
  return {{"source_id", s.source_id},
          {"rate_hz", s.rate_hz},
          {"phase_offset_us", s.phase_offset},
          {"jitter_std_us", s.jitter_std_us},
          {"noise_std_translation", s.noise_std_translation},
          {"noise_std_rotation", s.noise_std_rotation},
          {"dropout_prob", s.dropout_prob},
          {"correlation_group", s.correlation_group},
          {"correlation", s.correlation},
          {"degradation", windows}};
}

Timestamp seconds_to_us(double s) { return from_seconds(s); }

}  // namespace

std::vector<sim::SensorSpec> sensor_preset(const std::string& name, double duration_s) {
  if (name == "asynchronous_triplet") return sim::asynchronous_triplet();
  if (name == "synchronous_triplet") return sim::synchronous_triplet();
  if (name == "camera_rig") return eval::camera_rig();
  if (name == "degraded_triplet") return eval::degraded_triplet(duration_s);
  throw ConfigError("unknown sensor preset '" + name + "'");
}

RunConfig default_config() {
  RunConfig c;
  auto& p = c.pipeline;
  p.simulation.kind = sim::TrajectoryKind::RandomSmooth;
  p.simulation.duration_s = 40.0;
  p.simulation.sensors = sim::asynchronous_triplet();
  p.mdn.hidden = 64;
  p.mdn.components = 3;
  p.aft.layers = 2;
  p.aft.width = 64;
  p.aft.heads = 4;
  p.aft.ff_width = 128;
  p.fusion_training.learning_rate = 5e-4;
  p.fusion_training.batch = 16;
  return c;
}

void apply_full_scale(RunConfig& config) {
  auto& p = config.pipeline;
  p.aft.layers = 4;
  p.aft.width = 512;
  p.aft.heads = 4;
  p.aft.ff_width = 2048;
  p.mdn.hidden = 512;
  p.fusion_training.learning_rate = 0.0005;
  p.fusion_training.batch = 32;
}

RunConfig config_from_json(const json& j, RunConfig base) {
  RunConfig c = std::move(base);
  auto& p = c.pipeline;
  Section top(j, "config");
  top.get("experiment", c.experiment);
  top.get("seed", c.seed);
  top.get("output_dir", c.output_dir);

  if (const json* s = top.child("simulator")) {
    Section sec(*s, "simulator");
    std::string kind = sim::to_string(p.simulation.kind);
    sec.get("trajectory", kind);
    try {
      p.simulation.kind = sim::parse_trajectory_kind(kind);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("simulator.trajectory: ") + e.what());
    }
    sec.get("duration_s", p.simulation.duration_s);
    sec.get("reference_rate_hz", p.simulation.reference_rate_hz);
    sec.get("correlation_time_s", p.simulation.correlation_time_s);
    sec.get("train_episodes", p.train_episodes);
    sec.get("val_episodes", p.val_episodes);
    sec.get("test_episodes", p.test_episodes);
    if (const json* tp = sec.child("trajectory_params")) {
      Section ts(*tp, "simulator.trajectory_params");
      auto& t = p.simulation.trajectory;
      ts.get("speed", t.speed);
      ts.get("arc_radius", t.arc_radius);
      ts.get("mean_speed", t.mean_speed);
      ts.get("speed_variation", t.speed_variation);
      ts.get("curvature_variation", t.curvature_variation);
      ts.get("attitude_variation", t.attitude_variation);
      ts.finish();
    }
    const bool named = sec.child("sensor_preset") != nullptr;
    sec.get("sensor_preset", c.sensor_preset);
    if (const json* sensors = sec.child("sensors")) {
      // an explicit sensor list always wins over the preset name
      if (!sensors->is_array() || sensors->empty()) throw ConfigError("simulator.sensors: expected a non-empty array");
      p.simulation.sensors.clear();
      for (std::size_t i = 0; i < sensors->size(); ++i)
        p.simulation.sensors.push_back(sensor_from_json((*sensors)[i], "simulator.sensors[" + std::to_string(i) + "]"));
      if (!named) c.sensor_preset = "custom";
    } else if (c.sensor_preset == "custom") {
      if (named) throw ConfigError("simulator.sensor_preset 'custom' needs a sensors array");
    } else {
      p.simulation.sensors = sensor_preset(c.sensor_preset, p.simulation.duration_s);
    }
    sec.finish();
  }

  if (const json* m = top.child("mdn")) {
    Section sec(*m, "mdn");
    sec.get("hidden", p.mdn.hidden);
    sec.get("components", p.mdn.components);
    sec.get("epochs", p.mdn_training.epochs);
    sec.get("learning_rate", p.mdn_training.learning_rate);
    sec.get("batch", p.mdn_training.batch);
    sec.get("chunk", p.mdn_chunk);
    sec.get("clip_norm", p.mdn_training.clip_norm);
    sec.finish();
  }

  if (const json* a = top.child("aft")) {
    Section sec(*a, "aft");
    sec.get("layers", p.aft.layers);
    sec.get("width", p.aft.width);
    sec.get("heads", p.aft.heads);
    sec.get("ff_width", p.aft.ff_width);
    sec.get("step_us", p.aft.discretiser.step);
    sec.get("max_bins", p.aft.discretiser.max_bins);
    sec.get("rotation_weight", p.aft.rotation_weight);
    double window_s = to_seconds(p.window_length), lookback_s = to_seconds(p.lookback);
    sec.get("window_s", window_s);
    sec.get("lookback_s", lookback_s);
    p.window_length = seconds_to_us(window_s);
    p.lookback = seconds_to_us(lookback_s);
    std::string variant = aft::variant_tag(p.aft.variant);
    sec.get("variant", variant);
    try {
      p.aft.variant = aft::parse_variant(variant);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("aft.variant: ") + e.what());
    }
    sec.finish();
  }

  if (const json* t = top.child("training")) {
    Section sec(*t, "training");
    sec.get("learning_rate", p.fusion_training.learning_rate);
    sec.get("batch", p.fusion_training.batch);
    sec.get("epochs", p.fusion_training.epochs);
    sec.get("clip_norm", p.fusion_training.clip_norm);
    sec.get("teacher_noise", p.fusion_training.teacher_noise);
    sec.get("checkpoint_every", c.checkpoint_every);
    sec.finish();
  }

  if (const json* e = top.child("ekf")) {
    Section sec(*e, "ekf");
    sec.get("q_velocity", p.ekf.q_velocity);
    sec.get("q_rate", p.ekf.q_rate);
    sec.get("initial_pose_variance", p.ekf.initial_pose_variance);
    sec.get("variance_inflation", p.ekf.variance_inflation);
    sec.get("tune", p.tune_ekf);
    sec.finish();
  }

  if (const json* ab = top.child("ablation")) {
    Section sec(*ab, "ablation");
    sec.get("seeds", c.ablation.seeds);
    sec.get("jobs", p.jobs);
    std::vector<std::string> variants;
    for (auto v : c.ablation.variants) variants.push_back(aft::variant_tag(v));
    sec.get("variants", variants);
    c.ablation.variants.clear();
    for (const auto& v : variants) {
      try {
        c.ablation.variants.push_back(aft::parse_variant(v));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("ablation.variants: ") + e.what());
      }
    }
    if (const json* subsets = sec.child("subsets")) {
      if (!subsets->is_array()) throw ConfigError("ablation.subsets: expected an array");
      c.ablation.subsets.clear();
      for (std::size_t i = 0; i < subsets->size(); ++i) {
        eval::SensorSubset s;
        Section ss((*subsets)[i], "ablation.subsets[" + std::to_string(i) + "]");
        ss.get("label", s.label);
        ss.get("sources", s.sources);
        ss.finish();
        c.ablation.subsets.push_back(std::move(s));
      }
    }
    sec.finish();
  }
  top.finish();

  if (p.aft.width == 0 || p.aft.heads == 0 || p.aft.width % p.aft.heads != 0)
    throw ConfigError("aft.width must be a positive multiple of aft.heads");
  if (p.fusion_training.batch == 0 || p.mdn_training.batch == 0) throw ConfigError("batch sizes must be positive");
  if (p.window_length <= 0 || p.lookback < 0) throw ConfigError("invalid window geometry");
  return c;
}

json config_to_json(const RunConfig& c) {
  const auto& p = c.pipeline;
  json sensors = json::array();
  for (const auto& s : p.simulation.sensors) sensors.push_back(sensor_to_json(s));
  json variants = json::array();
  for (auto v : c.ablation.variants) variants.push_back(aft::variant_tag(v));
  json subsets = json::array();
  for (const auto& s : c.ablation.subsets) subsets.push_back({{"label", s.label}, {"sources", s.sources}});
  const auto& t = p.simulation.trajectory;
  return {
      {"experiment", c.experiment},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"simulator",
       {{"trajectory", sim::to_string(p.simulation.kind)},
        {"duration_s", p.simulation.duration_s},
        {"reference_rate_hz", p.simulation.reference_rate_hz},
        {"correlation_time_s", p.simulation.correlation_time_s},
        {"train_episodes", p.train_episodes},
        {"val_episodes", p.val_episodes},
        {"test_episodes", p.test_episodes},
        {"sensor_preset", c.sensor_preset},
        {"trajectory_params",
         {{"speed", t.speed},
          {"arc_radius", t.arc_radius},
          {"mean_speed", t.mean_speed},
          {"speed_variation", t.speed_variation},
          {"curvature_variation", t.curvature_variation},
          {"attitude_variation", t.attitude_variation}}},
        {"sensors", sensors}}},
      {"mdn",
       {{"hidden", p.mdn.hidden},
        {"components", p.mdn.components},
        {"epochs", p.mdn_training.epochs},
        {"learning_rate", p.mdn_training.learning_rate},
        {"batch", p.mdn_training.batch},
        {"chunk", p.mdn_chunk},
        {"clip_norm", p.mdn_training.clip_norm}}},
      {"aft",
       {{"layers", p.aft.layers},
        {"width", p.aft.width},
        {"heads", p.aft.heads},
        {"ff_width", p.aft.ff_width},
        {"step_us", p.aft.discretiser.step},
        {"max_bins", p.aft.discretiser.max_bins},
        {"rotation_weight", p.aft.rotation_weight},
        {"window_s", to_seconds(p.window_length)},
        {"lookback_s", to_seconds(p.lookback)},
        {"variant", aft::variant_tag(p.aft.variant)}}},
      {"training",
       {{"learning_rate", p.fusion_training.learning_rate},
        {"batch", p.fusion_training.batch},
        {"epochs", p.fusion_training.epochs},
        {"clip_norm", p.fusion_training.clip_norm},
        {"teacher_noise", p.fusion_training.teacher_noise},
        {"checkpoint_every", c.checkpoint_every}}},
      {"ekf",
       {{"q_velocity", p.ekf.q_velocity},
        {"q_rate", p.ekf.q_rate},
        {"initial_pose_variance", p.ekf.initial_pose_variance},
        {"variance_inflation", p.ekf.variance_inflation},
        {"tune", p.tune_ekf}}},
      {"ablation", {{"seeds", c.ablation.seeds}, {"jobs", p.jobs}, {"variants", variants}, {"subsets", subsets}}},
  };
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j, std::move(base));
}

void apply_seed_override(RunConfig& config) {
  const char* env = std::getenv("AFTVO_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw ConfigError(std::string("AFTVO_SEED is not an unsigned integer: ") + env);
  config.seed = v;
}

std::string data_hash(const RunConfig& config) {
  json j = config_to_json(config)["simulator"];
  j["seed"] = config.seed;
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string version_string() { return AFTVO_VERSION; }

}  // namespace aftvo::cli
