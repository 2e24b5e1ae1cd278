#pragma once

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>

#include "aftvo/checkpoint.hpp"
#include "aftvo/config.hpp"
#include "aftvo/eval.hpp"

namespace aftvo::cli {

/// Exit codes shared by the subcommands.
enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kDiverged = 3, kIncompatible = 4 };

/// MDN bank plus fusion model as stored in a checkpoint.
struct TrainedModel {
  RunConfig config;
  eval::MdnBank bank;
  std::unique_ptr<aft::FusionTransformer> fusion;
};

Checkpoint make_checkpoint(const TrainedModel& model, std::uint64_t step, const nlohmann::json& meta);
TrainedModel model_from_checkpoint(const Checkpoint& ckpt);

/// Episodes under data/{train,val,test}/episode_NNN plus manifest.json.
void save_dataset(const std::filesystem::path& dir, const eval::Dataset& data);
eval::Dataset load_dataset(const std::filesystem::path& dir);
/// Simulator hash recorded by generate; empty when no manifest exists.
std::string dataset_hash(const std::filesystem::path& dir);

struct TrainOptions {
  std::filesystem::path data_dir;
  bool resume = false;
  /// Stops after this many fusion epochs in this invocation (testing resumption).
  int max_epochs = -1;
};

int cmd_generate(const RunConfig& config, std::ostream& log);
int cmd_train(const RunConfig& config, const TrainOptions& options, std::ostream& log);
int cmd_evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& data_dir,
                 const std::filesystem::path& out_dir, bool axis_errors, std::ostream& log);
/// `table` is one of module, camera, ekf, all.
int cmd_ablate(const RunConfig& config, const std::string& table, std::ostream& log);
/// `method` is one of aft, ekf, truth.
int cmd_export(const std::filesystem::path& checkpoint, const std::filesystem::path& episode_dir,
               const std::filesystem::path& out_file, const std::string& method, std::ostream& log);

}  // namespace aftvo::cli
