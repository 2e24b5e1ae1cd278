#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "aftvo/aft.hpp"
#include "aftvo/ekf.hpp"
#include "aftvo/mdn.hpp"
#include "aftvo/pose.hpp"
#include "aftvo/sim.hpp"

namespace aftvo::eval {

struct StampedMotion {
  Timestamp stamp;
  Pose motion;  // relative to the previous stamp
};

/// Left-composition chain from `start`; the first motion ends at motions[0].stamp.
Trajectory compose_trajectory(std::span<const StampedMotion> motions, const StampedPose& start);
/// Consecutive relative motions of a trajectory (one fewer than poses).
std::vector<StampedMotion> decompose_trajectory(const Trajectory& trajectory);

struct RpeReport {
  double rmse = 0.0, max = 0.0, mean = 0.0, std = 0.0;  // translation, m
  std::vector<double> errors;
  double rot_rmse = 0.0, rot_max = 0.0, rot_mean = 0.0, rot_std = 0.0;  // rad
  std::vector<double> rot_errors;
};

/// Relative pose error over consecutive estimate stamps, each of which must
/// be present in `gt`. Throws std::invalid_argument for fewer than 2 stamps.
RpeReport rpe(const Trajectory& est, const Trajectory& gt);

/// Median of each summary statistic over reports (per-pair errors dropped).
RpeReport median_report(const std::vector<RpeReport>& reports);
double median(std::vector<double> values);

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
std::vector<std::string> rpe_columns();
std::vector<std::string> rpe_cells(const RpeReport& r);

// ---- experiment pipeline ----

struct PipelineConfig {
  sim::SimulationConfig simulation;
  std::size_t train_episodes = 4;
  std::size_t val_episodes = 1;
  std::size_t test_episodes = 2;
  mdn::MdnConfig mdn;
  mdn::MdnTrainConfig mdn_training;
  std::size_t mdn_chunk = 64;  // frames per MDN training sequence
  aft::AftConfig aft;
  aft::FusionTrainConfig fusion_training;
  Timestamp window_length = 2'000'000;
  Timestamp lookback = 250'000;
  ekf::EkfConfig ekf;
  bool tune_ekf = true;
  std::size_t jobs = 0;  // harness worker threads; 0 = one per core
};

struct Dataset {
  std::vector<sim::Episode> train, val, test;
};

Dataset generate_dataset(const PipelineConfig& config, std::uint64_t seed);

/// Sequences pairing each measurement with the true motion over its frame gap.
std::vector<mdn::MdnSequence> mdn_sequences(const sim::Episode& episode, int source_id, std::size_t chunk);

/// One trained estimator per configured sensor.
class MdnBank {
 public:
  MdnBank() = default;
  void add(mdn::MdnEstimator estimator);
  const mdn::MdnEstimator& at(int source_id) const;
  bool contains(int source_id) const;
  std::vector<int> sources() const;
  std::map<int, mdn::MdnTrainReport>& reports() { return reports_; }
  const std::map<int, mdn::MdnTrainReport>& reports() const { return reports_; }
  std::vector<mdn::MdnEstimator>& estimators() { return estimators_; }
  const std::vector<mdn::MdnEstimator>& estimators() const { return estimators_; }

 private:
  std::vector<mdn::MdnEstimator> estimators_;
  std::map<int, mdn::MdnTrainReport> reports_;
};

MdnBank train_mdn_bank(const PipelineConfig& config, const Dataset& data, std::uint64_t seed);

/// MDN predictions for every measurement of the chosen sources.
struct EpisodePredictions {
  const sim::Episode* episode = nullptr;
  std::map<int, std::vector<mdn::MixtureParams>> mixtures;  // per source, aligned with stream entries
};

EpisodePredictions predict_episode(const MdnBank& bank, const sim::Episode& episode,
                                   std::span<const int> sources = {});

std::vector<aft::FusionItem> fusion_items(const EpisodePredictions& predictions, std::span<const int> sources = {});

/// Windows [start, start + length) of reference queries with items from
/// [start - lookback, start + length). With `stride` == length the windows tile.
std::vector<aft::FusionWindow> build_windows(const sim::Episode& episode, std::span<const aft::FusionItem> items,
                                             Timestamp length, Timestamp stride, Timestamp lookback);

PoseNormaliser fusion_normaliser(const std::vector<aft::FusionWindow>& windows);

/// Estimated trajectory at the episode's reference stamps.
Trajectory aft_trajectory(const aft::FusionTransformer& model, const sim::Episode& episode,
                          std::span<const aft::FusionItem> items, Timestamp window_length, Timestamp lookback);

std::vector<ekf::EkfMeasurement> ekf_measurements(const EpisodePredictions& predictions,
                                                  std::span<const int> sources = {});
Trajectory ekf_trajectory(const EpisodePredictions& predictions, const ekf::EkfConfig& config,
                          std::span<const int> sources = {});
/// Reference stamps scored for an episode: from the first query's predecessor on.
std::vector<Timestamp> scored_stamps(const EpisodePredictions& predictions, std::span<const int> sources = {});
/// Reference-stamp subset of the ground truth.
Trajectory reference_truth(const sim::Episode& episode);

struct EkfTuning {
  ekf::EkfConfig best;
  double best_rmse = 0.0;
  std::size_t candidates = 0;
};

/// Grid search over process noise and measurement-variance inflation,
/// scored by mean RPE-RMSE on the given episodes.
EkfTuning tune_ekf(const std::vector<EpisodePredictions>& validation, std::span<const int> sources = {});

struct FusionRun {
  std::unique_ptr<aft::FusionTransformer> model;
  aft::FusionTrainReport report;
};

/// Fusion model configuration for a pipeline: source count covers every
/// configured sensor id, components follow the MDN.
aft::AftConfig fusion_config(const PipelineConfig& config, aft::Variant variant);

/// Training windows (half-overlapping) or evaluation tiles for the chosen sources.
std::vector<aft::FusionWindow> pipeline_windows(const PipelineConfig& config,
                                                const std::vector<EpisodePredictions>& episodes,
                                                std::span<const int> sources, bool training);

/// Builds windows for the chosen sources, trains a fusion model and returns it.
FusionRun train_fusion_model(const PipelineConfig& config, const std::vector<EpisodePredictions>& train,
                             const std::vector<EpisodePredictions>& val, std::span<const int> sources,
                             aft::Variant variant, std::uint64_t seed);

RpeReport evaluate_aft(const aft::FusionTransformer& model, const PipelineConfig& config,
                       const std::vector<EpisodePredictions>& test, std::span<const int> sources = {});
RpeReport evaluate_ekf(const ekf::EkfConfig& ekf_config, const std::vector<EpisodePredictions>& test,
                       std::span<const int> sources = {});

/// Concatenates per-episode reports into one (summaries recomputed from pairs).
RpeReport pool_reports(const std::vector<RpeReport>& reports);

// ---- harnesses ----

struct CellResult {
  std::string row;  // variant or subset label
  std::uint64_t seed = 0;
  std::optional<RpeReport> report;
  std::string error;  // non-empty when the cell failed
};

struct HarnessRow {
  std::string label;
  RpeReport median;  // over successful seeds
  std::size_t succeeded = 0;
  std::size_t failed = 0;
};

struct HarnessResult {
  std::vector<CellResult> cells;
  std::vector<HarnessRow> rows;
  bool any_failed() const;
  const HarnessRow& row(const std::string& label) const;
};

using ProgressFn = std::function<void(const std::string&)>;

HarnessResult module_ablation(const PipelineConfig& config, std::span<const std::uint64_t> seeds,
                              std::span<const aft::Variant> variants, const ProgressFn& progress = {});

struct SensorSubset {
  std::string label;
  std::vector<int> sources;
};

HarnessResult camera_ablation(const PipelineConfig& config, std::span<const std::uint64_t> seeds,
                              std::span<const SensorSubset> subsets, const ProgressFn& progress = {});

/// AFT (full) against the tuned EKF on the same MDN predictions; rows "aft" and "ekf".
HarnessResult ekf_comparison(const PipelineConfig& config, std::span<const std::uint64_t> seeds,
                             const ProgressFn& progress = {});

void write_harness_table(std::ostream& out, const HarnessResult& result);

// ---- presets ----

/// Four cameras: front, front-left and front-right share correlated noise
/// (overlapping views); back is independent.
std::vector<sim::SensorSpec> camera_rig();
std::vector<SensorSubset> camera_subsets();
/// Asynchronous triplet with per-sensor degradation windows.
std::vector<sim::SensorSpec> degraded_triplet(double duration_s);

/// Reduced-size configuration the benchmark harnesses run at.
PipelineConfig benchmark_config();

}  // namespace aftvo::eval
