#include <algorithm>
#include <atomic>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "aftvo/eval.hpp"

namespace aftvo::eval {
namespace {

struct SeedContext {
  std::unique_ptr<Dataset> data;
  MdnBank bank;
  std::vector<EpisodePredictions> train, val, test;
};

SeedContext prepare(const PipelineConfig& config, std::uint64_t seed, const ProgressFn& progress) {
  SeedContext ctx;
  if (progress) progress("seed " + std::to_string(seed) + ": simulating");
  ctx.data = std::make_unique<Dataset>(generate_dataset(config, seed));
  if (progress) progress("seed " + std::to_string(seed) + ": training MDNs");
  ctx.bank = train_mdn_bank(config, *ctx.data, seed);
  for (const auto& ep : ctx.data->train) ctx.train.push_back(predict_episode(ctx.bank, ep));
  for (const auto& ep : ctx.data->val) ctx.val.push_back(predict_episode(ctx.bank, ep));
  for (const auto& ep : ctx.data->test) ctx.test.push_back(predict_episode(ctx.bank, ep));
  return ctx;
}

CellResult run_cell(const std::string& row, std::uint64_t seed, const ProgressFn& progress,
                    const std::function<RpeReport()>& fn) {
  CellResult cell{row, seed, std::nullopt, {}};
  try {
    cell.report = fn();
    if (progress) progress(row + " seed " + std::to_string(seed) + ": rmse " + std::to_string(cell.report->rmse));
  } catch (const std::exception& e) {
    cell.error = e.what();
    if (cell.error.empty()) cell.error = "unknown failure";
    if (progress) progress(row + " seed " + std::to_string(seed) + ": FAILED " + cell.error);
  }
  return cell;
}

void aggregate(HarnessResult& result, const std::vector<std::string>& labels) {
  for (const auto& label : labels) {
    HarnessRow row;
    row.label = label;
    std::vector<RpeReport> ok;
    for (const auto& c : result.cells) {
      if (c.row != label) continue;
      if (c.report) ok.push_back(*c.report);
      else ++row.failed;
    }
    row.succeeded = ok.size();
    row.median = median_report(ok);
    result.rows.push_back(std::move(row));
  }
}

/// Runs fn(0..n-1) on up to `jobs` threads; fn must not throw.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < jobs; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

using CellFn = std::function<RpeReport(std::size_t label, const SeedContext& ctx, std::uint64_t seed)>;

/// Prepares every seed, then runs every (seed, label) cell. Cells are
/// independent, so they run in parallel; results keep seed-major order.
HarnessResult run_harness(const PipelineConfig& config, std::span<const std::uint64_t> seeds,
                          const std::vector<std::string>& labels, const CellFn& cell_fn,
                          const ProgressFn& progress) {
  std::mutex log_mutex;
  const ProgressFn log = [&](const std::string& m) {
    if (!progress) return;
    std::lock_guard lock(log_mutex);
    progress(m);
  };
  std::vector<SeedContext> contexts(seeds.size());
  std::vector<std::string> seed_errors(seeds.size());
  parallel_for(seeds.size(), config.jobs, [&](std::size_t i) {
    try {
      contexts[i] = prepare(config, seeds[i], log);
    } catch (const std::exception& e) {
      seed_errors[i] = *e.what() ? e.what() : "failure";
      log("seed " + std::to_string(seeds[i]) + ": FAILED " + seed_errors[i]);
    }
  });

  HarnessResult result;
  result.cells.resize(seeds.size() * labels.size());
  parallel_for(result.cells.size(), config.jobs, [&](std::size_t c) {
    const std::size_t i = c / labels.size(), l = c % labels.size();
    if (!seed_errors[i].empty()) {
      result.cells[c] = {labels[l], seeds[i], std::nullopt, seed_errors[i]};
      return;
    }
    result.cells[c] = run_cell(labels[l], seeds[i], log, [&] { return cell_fn(l, contexts[i], seeds[i]); });
  });
  aggregate(result, labels);
  return result;
}

}  // namespace

HarnessResult module_ablation(const PipelineConfig& config, std::span<const std::uint64_t> seeds,
                              std::span<const aft::Variant> variants, const ProgressFn& progress) {
  std::vector<std::string> labels;
  for (auto v : variants) labels.push_back(aft::variant_table_tag(v));
  return run_harness(
      config, seeds, labels,
      [&](std::size_t l, const SeedContext& ctx, std::uint64_t seed) {
        const auto run = train_fusion_model(config, ctx.train, ctx.val, {}, variants[l], seed);
        return evaluate_aft(*run.model, config, ctx.test);
      },
      progress);
}

HarnessResult camera_ablation(const PipelineConfig& config, std::span<const std::uint64_t> seeds,
                              std::span<const SensorSubset> subsets, const ProgressFn& progress) {
  std::vector<std::string> labels;
  for (const auto& s : subsets) labels.push_back(s.label);
  return run_harness(
      config, seeds, labels,
      [&](std::size_t l, const SeedContext& ctx, std::uint64_t seed) {
        const auto& sources = subsets[l].sources;
        const auto run = train_fusion_model(config, ctx.train, ctx.val, sources, aft::Variant::Full, seed);
        return evaluate_aft(*run.model, config, ctx.test, sources);
      },
      progress);
}

HarnessResult ekf_comparison(const PipelineConfig& config, std::span<const std::uint64_t> seeds,
                             const ProgressFn& progress) {
  return run_harness(
      config, seeds, {"aft", "ekf"},
      [&](std::size_t l, const SeedContext& ctx, std::uint64_t seed) {
        if (l == 0) {
          const auto run = train_fusion_model(config, ctx.train, ctx.val, {}, aft::Variant::Full, seed);
          return evaluate_aft(*run.model, config, ctx.test);
        }
        const ekf::EkfConfig chosen = config.tune_ekf ? tune_ekf(ctx.val).best : config.ekf;
        return evaluate_ekf(chosen, ctx.test);
      },
      progress);
}

std::vector<sim::SensorSpec> camera_rig() {
  std::vector<sim::SensorSpec> specs(4);
  const Timestamp phases[] = {0, 4'000, 8'000, 33'000};
  for (int k = 0; k < 4; ++k) {
    auto& s = specs[static_cast<std::size_t>(k)];
    s.source_id = k;
    s.rate_hz = 15.0;
    s.phase_offset = phases[k];
    s.jitter_std_us = 1000.0;
    s.noise_std_translation = 0.03;
    s.noise_std_rotation = 0.003;
    s.dropout_prob = 0.02;
    if (k < 3) {
      s.correlation_group = 0;
      s.correlation = 0.9;
    }
  }
  return specs;
}

std::vector<SensorSubset> camera_subsets() {
  return {{"F", {0}},        {"FL", {1}},          {"FR", {2}},          {"B", {3}},
          {"F+B", {0, 3}},   {"F+FL+FR", {0, 1, 2}}, {"all", {0, 1, 2, 3}}};
}

std::vector<sim::SensorSpec> degraded_triplet(double duration_s) {
  auto specs = sim::asynchronous_triplet();
  const auto d = from_seconds(duration_s);
  for (std::size_t k = 0; k < specs.size(); ++k) {
    // each sensor loses quality over a different fifth of the drive
    const Timestamp start = d * static_cast<Timestamp>(2 * k + 1) / 7;
    specs[k].degradation.push_back({start, start + d / 7, 10.0});
  }
  return specs;
}

PipelineConfig benchmark_config() {
  PipelineConfig c;
  c.simulation.kind = sim::TrajectoryKind::RandomSmooth;
  c.simulation.duration_s = 40.0;
  c.simulation.sensors = sim::asynchronous_triplet();
  c.train_episodes = 4;
  c.val_episodes = 1;
  c.test_episodes = 2;
  c.mdn.hidden = 32;
  c.mdn.components = 3;
  c.mdn_chunk = 32;
  c.mdn_training.epochs = 20;
  c.mdn_training.learning_rate = 3e-3;
  c.mdn_training.batch = 1;
  c.aft.layers = 2;
  c.aft.width = 32;
  c.aft.heads = 4;
  c.aft.ff_width = 64;
  c.fusion_training.epochs = 60;
  c.fusion_training.learning_rate = 1e-3;
  c.fusion_training.batch = 8;
  c.fusion_training.teacher_noise = 2.0;
  return c;
}

}  // namespace aftvo::eval
