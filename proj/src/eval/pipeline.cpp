#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "aftvo/eval.hpp"

namespace aftvo::eval {
namespace {

bool selected(std::span<const int> sources, int id) {
  return sources.empty() || std::find(sources.begin(), sources.end(), id) != sources.end();
}

/// Index of the first reference stamp usable as a query: it has a
/// predecessor and at least one item at or before it.
std::size_t first_query_index(const std::vector<Timestamp>& refs, std::span<const aft::FusionItem> items) {
  if (items.empty()) throw std::invalid_argument("no fusion items in episode");
  const Timestamp earliest = aft::window_minimum(items);
  for (std::size_t i = 1; i < refs.size(); ++i)
    if (refs[i] >= earliest) return i;
  throw std::invalid_argument("no reference stamp after the first measurement");
}

}  // namespace

Dataset generate_dataset(const PipelineConfig& config, std::uint64_t seed) {
  Dataset d;
  for (std::size_t i = 0; i < config.train_episodes; ++i)
    d.train.push_back(sim::simulate_episode(config.simulation, num::mix_seed(seed, 100 + i)));
  for (std::size_t i = 0; i < config.val_episodes; ++i)
    d.val.push_back(sim::simulate_episode(config.simulation, num::mix_seed(seed, 200 + i)));
  for (std::size_t i = 0; i < config.test_episodes; ++i)
    d.test.push_back(sim::simulate_episode(config.simulation, num::mix_seed(seed, 300 + i)));
  return d;
}

std::vector<mdn::MdnSequence> mdn_sequences(const sim::Episode& episode, int source_id, std::size_t chunk) {
  if (chunk == 0) throw std::invalid_argument("MDN chunk length must be positive");
  const auto& stream = episode.stream(source_id);
  std::vector<mdn::MdnSequence> out;
  for (std::size_t i = 0; i < stream.entries.size(); ++i) {
    if (i % chunk == 0) out.emplace_back();
    out.back().inputs.push_back(stream.entries[i]);
    out.back().targets.push_back(episode.true_relative(stream.previous_stamp(i), stream.entries[i].timestamp));
  }
  return out;
}

void MdnBank::add(mdn::MdnEstimator estimator) {
  if (contains(estimator.source_id()))
    throw std::invalid_argument("duplicate MDN for source " + std::to_string(estimator.source_id()));
  estimators_.push_back(std::move(estimator));
}

const mdn::MdnEstimator& MdnBank::at(int source_id) const {
  for (const auto& e : estimators_)
    if (e.source_id() == source_id) return e;
  throw std::out_of_range("no MDN for source " + std::to_string(source_id));
}

bool MdnBank::contains(int source_id) const {
  return std::any_of(estimators_.begin(), estimators_.end(), [&](const auto& e) { return e.source_id() == source_id; });
}

std::vector<int> MdnBank::sources() const {
  std::vector<int> out;
  for (const auto& e : estimators_) out.push_back(e.source_id());
  return out;
}

MdnBank train_mdn_bank(const PipelineConfig& config, const Dataset& data, std::uint64_t seed) {
  MdnBank bank;
  for (const auto& spec : config.simulation.sensors) {
    const int k = spec.source_id;
    std::vector<mdn::MdnSequence> train, heldout;
    for (const auto& ep : data.train)
      for (auto& s : mdn_sequences(ep, k, config.mdn_chunk)) train.push_back(std::move(s));
    for (const auto& ep : data.val)
      for (auto& s : mdn_sequences(ep, k, config.mdn_chunk)) heldout.push_back(std::move(s));
    const auto sk = static_cast<std::uint64_t>(k);
    mdn::MdnEstimator model(k, config.mdn, num::mix_seed(seed, 10 + sk));
    model.set_normaliser(mdn::normaliser_from(train));
    auto training = config.mdn_training;
    training.seed = num::mix_seed(seed, 20 + sk);
    bank.reports()[k] = mdn::train_mdn(model, train, heldout, training);
    bank.add(std::move(model));
  }
  return bank;
}

EpisodePredictions predict_episode(const MdnBank& bank, const sim::Episode& episode, std::span<const int> sources) {
  EpisodePredictions out;
  out.episode = &episode;
  for (const auto& stream : episode.streams) {
    if (!selected(sources, stream.source_id) || !bank.contains(stream.source_id)) continue;
    out.mixtures[stream.source_id] = bank.at(stream.source_id).predict(stream.entries);
  }
  return out;
}

std::vector<aft::FusionItem> fusion_items(const EpisodePredictions& predictions, std::span<const int> sources) {
  std::vector<aft::FusionItem> items;
  for (const auto& [k, mixtures] : predictions.mixtures) {
    if (!selected(sources, k)) continue;
    const auto& stream = predictions.episode->stream(k);
    for (std::size_t i = 0; i < mixtures.size(); ++i)
      items.push_back({k, stream.entries[i].timestamp, mixtures[i].payload()});
  }
  aft::canonicalise(items);
  return items;
}

std::vector<aft::FusionWindow> build_windows(const sim::Episode& episode, std::span<const aft::FusionItem> items,
                                             Timestamp length, Timestamp stride, Timestamp lookback) {
  if (length <= 0 || stride <= 0 || lookback < 0) throw std::invalid_argument("invalid window geometry");
  const auto& refs = episode.reference_stamps;
  const std::size_t q0 = first_query_index(refs, items);
  std::vector<aft::FusionWindow> windows;
  for (Timestamp start = refs[q0]; start <= refs.back(); start += stride) {
    const Timestamp end = start + length;
    aft::FusionWindow w;
    auto lo = std::lower_bound(items.begin(), items.end(), start - lookback,
                               [](const aft::FusionItem& it, Timestamp t) { return it.timestamp < t; });
    const auto hi = std::lower_bound(items.begin(), items.end(), end,
                                     [](const aft::FusionItem& it, Timestamp t) { return it.timestamp < t; });
    // keep at least one item at or before the window start
    if (lo != items.begin() && (lo == hi || lo->timestamp > start)) --lo;
    w.items.assign(lo, hi);
    for (std::size_t i = q0; i < refs.size(); ++i) {
      if (refs[i] < start || refs[i] >= end) continue;
      if (w.queries.empty()) w.previous_stamp = refs[i - 1];
      w.queries.push_back(refs[i]);
      w.targets.push_back(episode.true_relative(refs[i - 1], refs[i]));
    }
    if (w.items.empty() || w.queries.empty()) continue;
    windows.push_back(std::move(w));
  }
  return windows;
}

PoseNormaliser fusion_normaliser(const std::vector<aft::FusionWindow>& windows) {
  std::vector<Vector6d> all;
  for (const auto& w : windows) all.insert(all.end(), w.targets.begin(), w.targets.end());
  return PoseNormaliser::fit(all);
}

Trajectory reference_truth(const sim::Episode& episode) { return episode.ground_truth.select(episode.reference_stamps); }

Trajectory aft_trajectory(const aft::FusionTransformer& model, const sim::Episode& episode,
                          std::span<const aft::FusionItem> items, Timestamp window_length, Timestamp lookback) {
  const auto windows = build_windows(episode, items, window_length, window_length, lookback);
  if (windows.empty()) throw std::invalid_argument("episode yields no evaluation windows");
  std::vector<StampedMotion> motions;
  for (const auto& w : windows) {
    const auto poses = model.infer(w.items, w.queries);
    for (std::size_t u = 0; u < poses.size(); ++u) motions.push_back({w.queries[u], Pose::from_vector(poses[u])});
  }
  const Timestamp t0 = windows.front().previous_stamp;
  return compose_trajectory(motions, {t0, episode.ground_truth.at(t0)});
}

std::vector<ekf::EkfMeasurement> ekf_measurements(const EpisodePredictions& predictions,
                                                  std::span<const int> sources) {
  std::vector<ekf::EkfMeasurement> out;
  for (const auto& [k, mixtures] : predictions.mixtures) {
    if (!selected(sources, k)) continue;
    const auto& stream = predictions.episode->stream(k);
    for (std::size_t i = 0; i < mixtures.size(); ++i) {
      const auto m = mdn::mixture_moments(mixtures[i]);
      out.push_back({k, stream.entries[i].timestamp, stream.previous_stamp(i), m.mean,
                     m.variance.cwiseMax(mdn::kSigmaFloor * mdn::kSigmaFloor)});
    }
  }
  return ekf::merge_measurements(std::move(out));
}

Trajectory ekf_trajectory(const EpisodePredictions& predictions, const ekf::EkfConfig& config,
                          std::span<const int> sources) {
  const auto& ep = *predictions.episode;
  const auto measurements = ekf_measurements(predictions, sources);
  const Timestamp t0 = ep.reference_stamps.front();
  return ekf::run_ekf(measurements, {t0, ep.ground_truth.at(t0)}, config, ep.reference_stamps);
}

std::vector<Timestamp> scored_stamps(const EpisodePredictions& p, std::span<const int> sources) {
  const auto items = fusion_items(p, sources);
  const auto& refs = p.episode->reference_stamps;
  const std::size_t q0 = first_query_index(refs, items);
  return {refs.begin() + static_cast<std::ptrdiff_t>(q0 - 1), refs.end()};
}

namespace {

double ekf_score(const std::vector<EpisodePredictions>& episodes, const ekf::EkfConfig& config,
                 std::span<const int> sources) {
  double total = 0.0;
  for (const auto& p : episodes) {
    const auto est = ekf_trajectory(p, config, sources).select(scored_stamps(p, sources));
    total += rpe(est, p.episode->ground_truth).rmse;
  }
  return total / static_cast<double>(episodes.size());
}

}  // namespace

EkfTuning tune_ekf(const std::vector<EpisodePredictions>& validation, std::span<const int> sources) {
  if (validation.empty()) throw std::invalid_argument("EKF tuning needs validation episodes");
  EkfTuning out;
  out.best_rmse = std::numeric_limits<double>::infinity();
  for (double qv : {0.1, 1.0, 10.0, 100.0})
    for (double qr : {0.001, 0.01, 0.1, 1.0})
      for (double inflation : {0.5, 1.0, 2.0, 4.0}) {
        ekf::EkfConfig c;
        c.q_velocity = qv;
        c.q_rate = qr;
        c.variance_inflation = inflation;
        ++out.candidates;
        double score;
        try {
          score = ekf_score(validation, c, sources);
        } catch (const std::runtime_error&) {
          continue;
        }
        if (score < out.best_rmse) {
          out.best_rmse = score;
          out.best = c;
        }
      }
  if (!std::isfinite(out.best_rmse)) throw std::runtime_error("no EKF configuration succeeded");
  return out;
}

aft::AftConfig fusion_config(const PipelineConfig& config, aft::Variant variant) {
  aft::AftConfig ac = config.aft;
  ac.variant = variant;
  int max_id = 0;
  for (const auto& s : config.simulation.sensors) max_id = std::max(max_id, s.source_id);
  ac.num_sources = std::max(ac.num_sources, static_cast<std::size_t>(max_id + 1));
  ac.components = config.mdn.components;
  return ac;
}

std::vector<aft::FusionWindow> pipeline_windows(const PipelineConfig& config,
                                                const std::vector<EpisodePredictions>& episodes,
                                                std::span<const int> sources, bool training) {
  const Timestamp stride = training ? config.window_length / 2 : config.window_length;
  std::vector<aft::FusionWindow> out;
  for (const auto& p : episodes)
    for (auto& w : build_windows(*p.episode, fusion_items(p, sources), config.window_length, stride, config.lookback))
      out.push_back(std::move(w));
  return out;
}

FusionRun train_fusion_model(const PipelineConfig& config, const std::vector<EpisodePredictions>& train,
                             const std::vector<EpisodePredictions>& val, std::span<const int> sources,
                             aft::Variant variant, std::uint64_t seed) {
  const auto train_windows = pipeline_windows(config, train, sources, true);
  const auto val_windows = pipeline_windows(config, val, sources, false);
  if (train_windows.empty()) throw std::invalid_argument("no training windows");

  FusionRun run;
  run.model = std::make_unique<aft::FusionTransformer>(fusion_config(config, variant), num::mix_seed(seed, 30));
  run.model->set_normaliser(fusion_normaliser(train_windows));
  auto training = config.fusion_training;
  training.seed = num::mix_seed(seed, 31);
  run.report = aft::train_fusion(*run.model, train_windows, val_windows, training);
  return run;
}

RpeReport evaluate_aft(const aft::FusionTransformer& model, const PipelineConfig& config,
                       const std::vector<EpisodePredictions>& test, std::span<const int> sources) {
  std::vector<RpeReport> reports;
  for (const auto& p : test) {
    const auto est = aft_trajectory(model, *p.episode, fusion_items(p, sources), config.window_length, config.lookback);
    reports.push_back(rpe(est, p.episode->ground_truth));
  }
  return pool_reports(reports);
}

RpeReport evaluate_ekf(const ekf::EkfConfig& ekf_config, const std::vector<EpisodePredictions>& test,
                       std::span<const int> sources) {
  std::vector<RpeReport> reports;
  for (const auto& p : test) {
    const auto est = ekf_trajectory(p, ekf_config, sources).select(scored_stamps(p, sources));
    reports.push_back(rpe(est, p.episode->ground_truth));
  }
  return pool_reports(reports);
}

}  // namespace aftvo::eval
