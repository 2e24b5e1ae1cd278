#include "aftvo/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "aftvo/io.hpp"

namespace aftvo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSplits[] = {"train", "val", "test"};

std::string episode_name(std::size_t i) {
  std::ostringstream s;
  s << "episode_" << std::setw(3) << std::setfill('0') << i;
  return s.str();
}

std::vector<sim::Episode>& split(eval::Dataset& d, int k) { return k == 0 ? d.train : k == 1 ? d.val : d.test; }
const std::vector<sim::Episode>& split(const eval::Dataset& d, int k) {
  return k == 0 ? d.train : k == 1 ? d.val : d.test;
}

fs::path checkpoint_path(const RunConfig& c) { return fs::path(c.output_dir) / "checkpoint.ckpt"; }

json write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw io::IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  return j;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io::IoError("cannot read " + path.string());
  return json::parse(in);
}

ekf::EkfConfig ekf_from_json(const json& j, ekf::EkfConfig base) {
  base.q_velocity = j.value("q_velocity", base.q_velocity);
  base.q_rate = j.value("q_rate", base.q_rate);
  base.initial_pose_variance = j.value("initial_pose_variance", base.initial_pose_variance);
  base.variance_inflation = j.value("variance_inflation", base.variance_inflation);
  return base;
}

json ekf_to_json(const ekf::EkfConfig& c) {
  return {{"q_velocity", c.q_velocity},
          {"q_rate", c.q_rate},
          {"initial_pose_variance", c.initial_pose_variance},
          {"variance_inflation", c.variance_inflation}};
}

/// EKF settings chosen at training time, or the configured ones.
ekf::EkfConfig trained_ekf(const Checkpoint& ckpt, const RunConfig& config) {
  if (ckpt.meta.contains("ekf")) return ekf_from_json(ckpt.meta["ekf"], config.pipeline.ekf);
  return config.pipeline.ekf;
}

std::vector<int> sensor_ids(const RunConfig& c) {
  std::vector<int> ids;
  for (const auto& s : c.pipeline.simulation.sensors) ids.push_back(s.source_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void write_loss_curve(const fs::path& path, const json& meta) {
  std::ofstream out(path);
  out << "epoch,train_loss,val_loss\n";
  const auto& tr = meta["train_loss"];
  const auto& va = meta["val_loss"];
  for (std::size_t e = 0; e < va.size(); ++e) {
    out << e << ',';
    if (e > 0 && e <= tr.size()) out << io::format_double(tr[e - 1].get<double>());
    out << ',' << io::format_double(va[e].get<double>()) << '\n';
  }
}

/// Per-pair error of consecutive relative motions, per axis.
void write_axis_errors(const fs::path& path, const Trajectory& est, const Trajectory& gt) {
  std::ofstream out(path);
  out << "stamp_us,tx,ty,tz,ex,ey,ez\n";
  for (std::size_t i = 1; i < est.size(); ++i) {
    const Pose e = relative_pose(est[i - 1].pose, est[i].pose);
    const Pose g = relative_pose(gt.at(est[i - 1].stamp), gt.at(est[i].stamp));
    const Vector6d d = relative_pose(g, e).to_vector();
    out << est[i].stamp;
    for (int j = 0; j < 6; ++j) out << ',' << io::format_double(d[j]);
    out << '\n';
  }
}

/// Resuming may extend the epoch budget or change the checkpoint cadence; nothing else.
bool resumable(json saved, json current) {
  for (json* j : {&saved, &current}) {
    (*j)["training"].erase("epochs");
    (*j)["training"].erase("checkpoint_every");
  }
  return saved == current;
}

int fail(std::ostream& log, int code, const std::string& message) {
  log << "error: " << message << "\n";
  return code;
}

}  // namespace

// ---- checkpoints ----

Checkpoint make_checkpoint(const TrainedModel& model, std::uint64_t step, const json& meta) {
  Checkpoint ckpt;
  ckpt.step = step;
  ckpt.config = config_to_json(model.config);
  ckpt.meta = meta;
  for (const auto& est : model.bank.estimators()) append_store(ckpt, est.parameters());
  if (model.fusion) append_store(ckpt, model.fusion->parameters());
  return ckpt;
}

TrainedModel model_from_checkpoint(const Checkpoint& ckpt) {
  TrainedModel model;
  model.config = config_from_json(ckpt.config);
  const auto& pc = model.config.pipeline;
  for (int id : sensor_ids(model.config)) {
    mdn::MdnEstimator est(id, pc.mdn, 0);
    restore_store(ckpt, est.parameters());
    model.bank.add(std::move(est));
  }
  if (ckpt.contains("aft.pose_scale")) {
    model.fusion = std::make_unique<aft::FusionTransformer>(eval::fusion_config(pc, pc.aft.variant), 0);
    restore_store(ckpt, model.fusion->parameters());
  }
  return model;
}

// ---- datasets ----

void save_dataset(const fs::path& dir, const eval::Dataset& data) {
  for (int k = 0; k < 3; ++k) {
    const auto& eps = split(data, k);
    for (std::size_t i = 0; i < eps.size(); ++i) io::save_episode(dir / kSplits[k] / episode_name(i), eps[i]);
  }
}

eval::Dataset load_dataset(const fs::path& dir) {
  eval::Dataset data;
  for (int k = 0; k < 3; ++k) {
    const fs::path sub = dir / kSplits[k];
    if (!fs::is_directory(sub)) continue;
    std::vector<fs::path> eps;
    for (const auto& entry : fs::directory_iterator(sub))
      if (entry.is_directory() && entry.path().filename().string().rfind("episode_", 0) == 0)
        eps.push_back(entry.path());
    std::sort(eps.begin(), eps.end());
    for (const auto& p : eps) split(data, k).push_back(io::load_episode(p));
  }
  if (data.train.empty() && data.val.empty() && data.test.empty())
    throw io::IoError("no episodes under " + dir.string());
  return data;
}

std::string dataset_hash(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.json";
  if (!fs::exists(manifest)) return {};
  return read_json_file(manifest).value("data_hash", std::string{});
}

// ---- subcommands ----

int cmd_generate(const RunConfig& config, std::ostream& log) {
  const fs::path dir = fs::path(config.output_dir) / "data";
  const eval::Dataset data = eval::generate_dataset(config.pipeline, config.seed);
  save_dataset(dir, data);
  write_json_file(dir / "manifest.json", {{"version", version_string()},
                                          {"seed", config.seed},
                                          {"data_hash", data_hash(config)},
                                          {"episodes", {data.train.size(), data.val.size(), data.test.size()}},
                                          {"config", config_to_json(config)}});
  log << "wrote " << data.train.size() + data.val.size() + data.test.size() << " episodes to " << dir.string()
      << " (data hash " << data_hash(config) << ")\n";
  return kOk;
}

int cmd_train(const RunConfig& config, const TrainOptions& options, std::ostream& log) {
  const fs::path out = config.output_dir;
  fs::create_directories(out);
  const fs::path data_dir = options.data_dir.empty() ? out / "data" : options.data_dir;
  const std::string hash = data_hash(config);
  if (!fs::exists(data_dir / "manifest.json")) {
    if (!options.data_dir.empty()) return fail(log, kFailure, "no dataset manifest in " + data_dir.string());
    if (const int rc = cmd_generate(config, log); rc != kOk) return rc;
  }
  if (dataset_hash(data_dir) != hash)
    return fail(log, kIncompatible, "dataset " + data_dir.string() + " was generated from a different simulator config");
  const eval::Dataset data = load_dataset(data_dir);
  const auto& pc = config.pipeline;

  TrainedModel model;
  model.config = config;
  json meta = {{"phase", "mdn"}, {"data_hash", hash}, {"version", version_string()}, {"fusion_epochs_done", 0},
               {"train_loss", json::array()}, {"val_loss", json::array()}};
  std::optional<Checkpoint> resumed;
  const fs::path ckpt_path = checkpoint_path(config);
  if (options.resume && fs::exists(ckpt_path)) {
    resumed = load_checkpoint(ckpt_path);
    if (!resumable(resumed->config, config_to_json(config)))
      return fail(log, kIncompatible, "checkpoint " + ckpt_path.string() + " was written with a different config");
    if (resumed->meta.value("data_hash", std::string{}) != hash)
      return fail(log, kIncompatible, "checkpoint data hash does not match the dataset");
    meta = resumed->meta;
    model = model_from_checkpoint(*resumed);
    model.config = config;
    log << "resuming from " << ckpt_path.string() << " (" << meta["phase"].get<std::string>() << ", "
        << meta["fusion_epochs_done"].get<int>() << " fusion epochs)\n";
  }

  std::uint64_t step = resumed ? resumed->step : 0;
  try {
    if (meta["phase"] == "mdn") {
      log << "training " << pc.simulation.sensors.size() << " MDN estimators\n";
      model.bank = eval::train_mdn_bank(pc, data, config.seed);
      json reports = json::object();
      for (const auto& [id, r] : model.bank.reports())
        reports[std::to_string(id)] = {{"train_nll", r.train_nll}, {"heldout_nll", r.heldout_nll}};
      meta["mdn"] = reports;
      meta["phase"] = "fusion";
      save_checkpoint(ckpt_path, make_checkpoint(model, ++step, meta));
    }
  } catch (const mdn::TrainingError& e) {
    return fail(log, kDiverged, e.what());
  }

  std::vector<eval::EpisodePredictions> train, val;
  for (const auto& ep : data.train) train.push_back(eval::predict_episode(model.bank, ep));
  for (const auto& ep : data.val) val.push_back(eval::predict_episode(model.bank, ep));
  if (!meta.contains("ekf")) {
    const ekf::EkfConfig chosen = pc.tune_ekf && !val.empty() ? eval::tune_ekf(val).best : pc.ekf;
    meta["ekf"] = ekf_to_json(chosen);
  }
  const auto train_windows = eval::pipeline_windows(pc, train, {}, true);
  const auto val_windows = eval::pipeline_windows(pc, val, {}, false);
  if (train_windows.empty()) return fail(log, kFailure, "dataset yields no training windows");

  if (!model.fusion) {
    model.fusion = std::make_unique<aft::FusionTransformer>(eval::fusion_config(pc, pc.aft.variant),
                                                            num::mix_seed(config.seed, 30));
    model.fusion->set_normaliser(eval::fusion_normaliser(train_windows));
  }
  aft::FusionTrainConfig tc = pc.fusion_training;
  tc.seed = num::mix_seed(config.seed, 31);
  aft::FusionTrainer trainer(*model.fusion, tc);
  trainer.set_epochs_done(meta["fusion_epochs_done"].get<int>());
  if (resumed && trainer.epochs_done() > 0) restore_optimiser(*resumed, "fusion", trainer.optimiser());
  if (meta["val_loss"].empty()) meta["val_loss"].push_back(aft::mean_loss(*model.fusion, val_windows));

  auto save = [&] {
    Checkpoint ckpt = make_checkpoint(model, ++step, meta);
    append_optimiser(ckpt, "fusion", trainer.optimiser());
    save_checkpoint(ckpt_path, ckpt);
    write_loss_curve(out / "loss_curve.csv", meta);
  };

  auto diverged = [&](const std::string& why) {
    return fail(log, kDiverged, why + "; last good checkpoint kept at " + ckpt_path.string());
  };
  int ran = 0;
  while (trainer.epochs_done() < tc.epochs && (options.max_epochs < 0 || ran < options.max_epochs)) {
    double train_loss = 0.0, val_loss = 0.0;
    try {
      train_loss = trainer.run_epoch(train_windows);
      val_loss = aft::mean_loss(*model.fusion, val_windows);
      if (!std::isfinite(val_loss)) throw mdn::TrainingError("validation loss is not finite");
    } catch (const mdn::TrainingError& e) {
      return diverged(e.what());
    } catch (const num::NumericalError& e) {
      return diverged(e.what());
    }
    ++ran;
    meta["train_loss"].push_back(train_loss);
    meta["val_loss"].push_back(val_loss);
    meta["fusion_epochs_done"] = trainer.epochs_done();
    log << "epoch " << trainer.epochs_done() << "/" << tc.epochs << " train " << train_loss << " val " << val_loss
        << "\n";
    const bool last = trainer.epochs_done() == tc.epochs;
    if (last || config.checkpoint_every == 0 ||
        trainer.epochs_done() % static_cast<int>(config.checkpoint_every) == 0)
      save();
  }
  if (ran == 0) save();
  write_json_file(out / "manifest.json", {{"version", version_string()},
                                          {"seed", config.seed},
                                          {"data_hash", hash},
                                          {"checkpoint", ckpt_path.filename().string()},
                                          {"ekf", meta["ekf"]},
                                          {"config", config_to_json(config)}});
  return kOk;
}

int cmd_evaluate(const fs::path& checkpoint, const fs::path& data_dir, const fs::path& out_dir, bool axis_errors,
                 std::ostream& log) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const std::string expected = ckpt.meta.value("data_hash", std::string{});
  if (dataset_hash(data_dir) != expected)
    return fail(log, kIncompatible, "dataset " + data_dir.string() + " does not match the checkpoint's data hash");
  const TrainedModel model = model_from_checkpoint(ckpt);
  if (!model.fusion) return fail(log, kFailure, "checkpoint holds no fusion model yet");
  const eval::Dataset data = load_dataset(data_dir);
  if (data.test.empty()) return fail(log, kFailure, "dataset has no test episodes");
  const auto& pc = model.config.pipeline;
  const ekf::EkfConfig ekf_cfg = trained_ekf(ckpt, model.config);

  fs::create_directories(out_dir);
  std::vector<std::vector<std::string>> rows;
  std::vector<eval::RpeReport> aft_reports, ekf_reports;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    const auto& ep = data.test[i];
    const auto pred = eval::predict_episode(model.bank, ep);
    const Trajectory gt = eval::reference_truth(ep);
    const Trajectory aft_traj = eval::aft_trajectory(*model.fusion, ep, eval::fusion_items(pred), pc.window_length,
                                                     pc.lookback);
    const Trajectory ekf_traj = eval::ekf_trajectory(pred, ekf_cfg).select(eval::scored_stamps(pred));
    const fs::path dir = out_dir / episode_name(i);
    fs::create_directories(dir);
    io::write_tum_file(dir / "aft.tum", aft_traj);
    io::write_tum_file(dir / "ekf.tum", ekf_traj);
    io::write_tum_file(dir / "gt.tum", gt);
    if (axis_errors) {
      write_axis_errors(dir / "aft_axis_errors.csv", aft_traj, gt);
      write_axis_errors(dir / "ekf_axis_errors.csv", ekf_traj, gt);
    }
    aft_reports.push_back(eval::rpe(aft_traj, gt));
    ekf_reports.push_back(eval::rpe(ekf_traj, gt));
    for (auto [name, rep] : {std::pair{"aft", &aft_reports.back()}, std::pair{"ekf", &ekf_reports.back()}}) {
      std::vector<std::string> row{name, episode_name(i)};
      for (auto& c : eval::rpe_cells(*rep)) row.push_back(c);
      rows.push_back(std::move(row));
    }
  }
  for (auto [name, reps] : {std::pair{"aft", &aft_reports}, std::pair{"ekf", &ekf_reports}}) {
    const auto pooled = eval::pool_reports(*reps);
    std::vector<std::string> row{name, "all"};
    for (auto& c : eval::rpe_cells(pooled)) row.push_back(c);
    rows.push_back(std::move(row));
    log << name << " rpe rmse " << pooled.rmse << " m, rot " << pooled.rot_rmse << " rad\n";
  }
  std::vector<std::string> header{"method", "episode"};
  for (auto& c : eval::rpe_columns()) header.push_back(c);
  std::ofstream metrics(out_dir / "metrics.csv");
  eval::write_csv(metrics, header, rows);
  return kOk;
}

int cmd_ablate(const RunConfig& config, const std::string& table, std::ostream& log) {
  const bool all = table == "all";
  if (!all && table != "module" && table != "camera" && table != "ekf")
    return fail(log, kUsage, "unknown table '" + table + "' (module, camera, ekf, all)");
  const fs::path out = config.output_dir;
  fs::create_directories(out);
  const auto& ab = config.ablation;
  const eval::ProgressFn progress = [&](const std::string& m) { log << m << "\n" << std::flush; };
  const bool custom = config.sensor_preset == "custom";
  bool failed = false;

  auto emit = [&](const std::string& name, const eval::HarnessResult& r) {
    std::ofstream t(out / (name + "_table.csv"));
    eval::write_harness_table(t, r);
    std::vector<std::vector<std::string>> rows;
    for (const auto& c : r.cells) {
      std::vector<std::string> row{c.row, std::to_string(c.seed), c.report ? "ok" : "failed", c.error};
      for (auto& v : c.report ? eval::rpe_cells(*c.report) : std::vector<std::string>(eval::rpe_columns().size()))
        row.push_back(v);
      rows.push_back(std::move(row));
    }
    std::vector<std::string> header{"row", "seed", "status", "error"};
    for (auto& c : eval::rpe_columns()) header.push_back(c);
    std::ofstream cells(out / (name + "_cells.csv"));
    eval::write_csv(cells, header, rows);
    for (const auto& row : r.rows)
      log << name << " " << row.label << ": median rmse " << row.median.rmse << " (" << row.succeeded << " ok, "
          << row.failed << " failed)\n";
    failed = failed || r.any_failed();
  };

  if (all || table == "module") emit("module", eval::module_ablation(config.pipeline, ab.seeds, ab.variants, progress));
  if (all || table == "camera") {
    eval::PipelineConfig pc = config.pipeline;
    if (!custom) pc.simulation.sensors = eval::camera_rig();
    const auto subsets = ab.subsets.empty() ? eval::camera_subsets() : ab.subsets;
    emit("camera", eval::camera_ablation(pc, ab.seeds, subsets, progress));
  }
  if (all || table == "ekf") {
    eval::PipelineConfig pc = config.pipeline;
    if (!custom) pc.simulation.sensors = eval::degraded_triplet(pc.simulation.duration_s);
    emit("ekf", eval::ekf_comparison(pc, ab.seeds, progress));
  }
  write_json_file(out / "manifest.json",
                  {{"version", version_string()}, {"table", table}, {"config", config_to_json(config)}});
  return failed ? kFailure : kOk;
}

int cmd_export(const fs::path& checkpoint, const fs::path& episode_dir, const fs::path& out_file,
               const std::string& method, std::ostream& log) {
  if (method != "aft" && method != "ekf" && method != "truth")
    return fail(log, kUsage, "unknown method '" + method + "' (aft, ekf, truth)");
  const sim::Episode ep = io::load_episode(episode_dir);
  Trajectory traj;
  if (method == "truth") {
    traj = eval::reference_truth(ep);
  } else {
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const TrainedModel model = model_from_checkpoint(ckpt);
    const auto pred = eval::predict_episode(model.bank, ep);
    if (method == "ekf") {
      traj = eval::ekf_trajectory(pred, trained_ekf(ckpt, model.config)).select(eval::scored_stamps(pred));
    } else {
      if (!model.fusion) return fail(log, kFailure, "checkpoint holds no fusion model yet");
      const auto& pc = model.config.pipeline;
      traj = eval::aft_trajectory(*model.fusion, ep, eval::fusion_items(pred), pc.window_length, pc.lookback);
    }
  }
  if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
  io::write_tum_file(out_file, traj);
  log << "wrote " << traj.size() << " poses to " << out_file.string() << "\n";
  return kOk;
}

}  // namespace aftvo::cli
