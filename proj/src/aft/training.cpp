#include <algorithm>
#include <numeric>
#include <random>

#include "aftvo/aft.hpp"
#include "aftvo/mdn.hpp"

namespace aftvo::aft {

double mean_loss(const FusionTransformer& model, const std::vector<FusionWindow>& windows) {
  if (windows.empty()) return 0.0;
  double total = 0.0;
  for (const auto& w : windows) total += model.loss(w).item();
  return total / static_cast<double>(windows.size());
}

FusionTrainer::FusionTrainer(FusionTransformer& model, FusionTrainConfig config)
    : model_(model), config_(config), adam_({.learning_rate = config.learning_rate}) {
  if (config.batch == 0) throw std::invalid_argument("batch size must be positive");
}

double FusionTrainer::run_epoch(const std::vector<FusionWindow>& train) {
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  num::Rng rng(num::mix_seed(config_.seed, static_cast<std::uint64_t>(epochs_done_)));
  std::shuffle(order.begin(), order.end(), rng);
  auto& store = model_.parameters();
  const Vector6d scale = model_.normaliser().scale;
  std::normal_distribution<double> gauss(0.0, 1.0);
  double total = 0.0;
  try {
    for (std::size_t start = 0; start < order.size(); start += config_.batch) {
      const std::size_t end = std::min(order.size(), start + config_.batch);
      const double weight = 1.0 / static_cast<double>(end - start);
      store.zero_grad();
      for (std::size_t i = start; i < end; ++i) {
        const auto& window = train[order[i]];
        auto inputs = FusionTransformer::teacher_inputs(window);
        if (config_.teacher_noise > 0.0)
          for (std::size_t u = 1; u < inputs.size(); ++u)
            for (int j = 0; j < 6; ++j) inputs[u][j] += config_.teacher_noise * scale[j] * gauss(rng);
        const num::Tensor loss = model_.loss(window, inputs);
        total += loss.item();
        num::backward(num::scale(loss, weight));
      }
      num::clip_grad_norm(store, config_.clip_norm);
      adam_.step(store);
    }
  } catch (const num::NumericalError& e) {
    throw mdn::TrainingError("fusion training diverged in epoch " + std::to_string(epochs_done_ + 1) + ": " +
                             e.what());
  }
  ++epochs_done_;
  return train.empty() ? 0.0 : total / static_cast<double>(train.size());
}

FusionTrainReport train_fusion(FusionTransformer& model, const std::vector<FusionWindow>& train,
                               const std::vector<FusionWindow>& val, const FusionTrainConfig& config) {
  FusionTrainReport report;
  FusionTrainer trainer(model, config);
  try {
    report.train_loss.push_back(mean_loss(model, train));
    report.val_loss.push_back(mean_loss(model, val));
    for (int e = 0; e < config.epochs; ++e) {
      report.train_loss.push_back(trainer.run_epoch(train));
      report.val_loss.push_back(mean_loss(model, val));
    }
  } catch (const num::NumericalError& e) {
    throw mdn::TrainingError(std::string("fusion loss is not finite: ") + e.what());
  }
  return report;
}

}  // namespace aftvo::aft
