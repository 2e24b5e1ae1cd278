// aftvo: generate data, train, evaluate, run ablations and export trajectories.
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "aftvo/commands.hpp"

using namespace aftvo;

namespace {

/// Settings shared by the subcommands that build a RunConfig.
struct ConfigFlags {
  std::string config_file;
  bool full_scale = false;
  bool benchmark = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir, variant;
  std::optional<int> epochs;
  std::optional<double> learning_rate, teacher_noise;
  std::optional<std::size_t> batch, width, layers, heads;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_file, "JSON run config")->check(CLI::ExistingFile);
    app->add_flag("--full-scale", full_scale, "full-size model (4 layers, width 512, 4 heads, lr 5e-4, batch 32)");
    app->add_flag("--benchmark", benchmark, "reduced-size preset used by the ablation benchmarks");
    app->add_option("--seed", seed, "run seed (beats AFTVO_SEED and the file)");
    app->add_option("-o,--output-dir", output_dir, "run directory");
    app->add_option("--variant", variant, "full, no_discretiser_equidistant, no_time, no_source");
    app->add_option("--epochs", epochs, "fusion training epochs");
    app->add_option("--lr", learning_rate, "fusion learning rate");
    app->add_option("--batch", batch, "fusion batch size");
    app->add_option("--teacher-noise", teacher_noise, "teacher input noise (normalised units)");
    app->add_option("--width", width, "model width");
    app->add_option("--layers", layers, "encoder and decoder layers");
    app->add_option("--heads", heads, "attention heads");
  }

  /// defaults < presets < file < AFTVO_SEED < flags
  cli::RunConfig build() const {
    cli::RunConfig c = cli::default_config();
    if (benchmark) c.pipeline = eval::benchmark_config();
    if (full_scale) cli::apply_full_scale(c);
    if (!config_file.empty()) c = cli::load_config(config_file, c);
    cli::apply_seed_override(c);
    auto& p = c.pipeline;
    if (seed) c.seed = *seed;
    if (output_dir) c.output_dir = *output_dir;
    if (variant) p.aft.variant = aft::parse_variant(*variant);
    if (epochs) p.fusion_training.epochs = *epochs;
    if (learning_rate) p.fusion_training.learning_rate = *learning_rate;
    if (teacher_noise) p.fusion_training.teacher_noise = *teacher_noise;
    if (batch) p.fusion_training.batch = *batch;
    if (width) p.aft.width = *width;
    if (layers) p.aft.layers = *layers;
    if (heads) p.aft.heads = *heads;
    // re-run validation on the merged result
    return cli::config_from_json(cli::config_to_json(c), c);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous fusion transformer for visual odometry"};
  app.set_version_flag("--version", cli::version_string());
  app.require_subcommand(1);

  ConfigFlags gen_flags, train_flags, ablate_flags, show_flags;
  auto* gen = app.add_subcommand("generate", "simulate train/val/test episodes");
  gen_flags.attach(gen);

  auto* train = app.add_subcommand("train", "train the MDN estimators and the fusion model");
  train_flags.attach(train);
  cli::TrainOptions train_opts;
  std::string data_dir;
  train->add_option("--data", data_dir, "dataset directory (default: <output-dir>/data, generated if absent)");
  train->add_flag("--resume", train_opts.resume, "continue from <output-dir>/checkpoint.ckpt");
  train->add_option("--max-epochs", train_opts.max_epochs, "stop after this many epochs in this invocation");

  auto* evaluate = app.add_subcommand("evaluate", "RPE of the fusion model and the EKF on the test split");
  std::string ckpt, eval_data, eval_out;
  bool axis = false;
  evaluate->add_option("--checkpoint", ckpt)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--data", eval_data)->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("-o,--out", eval_out)->required();
  evaluate->add_flag("--axis-errors", axis, "also write per-axis error CSVs");

  auto* ablate = app.add_subcommand("ablate", "module, camera or EKF comparison tables");
  ablate_flags.attach(ablate);
  std::string table = "all";
  ablate->add_option("--table", table, "module, camera, ekf or all")->check(CLI::IsMember({"module", "camera", "ekf", "all"}));

  auto* exp = app.add_subcommand("export", "write one episode's trajectory in TUM format");
  std::string exp_ckpt, episode, exp_out, method = "aft";
  exp->add_option("--checkpoint", exp_ckpt)->check(CLI::ExistingFile);
  exp->add_option("--episode", episode)->required()->check(CLI::ExistingDirectory);
  exp->add_option("-o,--out", exp_out)->required();
  exp->add_option("--method", method)->check(CLI::IsMember({"aft", "ekf", "truth"}));

  auto* show = app.add_subcommand("config", "print the merged run config");
  show_flags.attach(show);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kOk : cli::kUsage;
  }

  try {
    if (*gen) return cli::cmd_generate(gen_flags.build(), std::cout);
    if (*train) {
      train_opts.data_dir = data_dir;
      return cli::cmd_train(train_flags.build(), train_opts, std::cout);
    }
    if (*evaluate) return cli::cmd_evaluate(ckpt, eval_data, eval_out, axis, std::cout);
    if (*ablate) return cli::cmd_ablate(ablate_flags.build(), table, std::cout);
    if (*exp) {
      if (method != "truth" && exp_ckpt.empty()) {
        std::cerr << "error: --checkpoint is required for method " << method << "\n";
        return cli::kUsage;
      }
      return cli::cmd_export(exp_ckpt, episode, exp_out, method, std::cout);
    }
    if (*show) {
      std::cout << cli::config_to_json(show_flags.build()).dump(2) << "\n";
      return cli::kOk;
    }
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kFailure;
  }
  return cli::kOk;
}
