#include <algorithm>
#include <cmath>
#include <numeric>

#include "aftvo/mdn.hpp"

namespace aftvo::mdn {

using num::Tensor;

MdnEstimator::MdnEstimator(int source_id, const MdnConfig& config, std::uint64_t seed)
    : source_id_(source_id), config_(config), prefix_("mdn" + std::to_string(source_id)) {
  const std::size_t h = config.hidden, x = config.components;
  if (h == 0 || x == 0) throw std::invalid_argument("MDN hidden width and components must be positive");
  num::Rng rng(seed);
  embed_ = num::Linear::create(store_, prefix_ + ".embed", kObservationWidth, h, rng);
  input_gates_ = num::Linear::create(store_, prefix_ + ".gru.input", h, 3 * h, rng);
  hidden_gates_ = num::Linear::create(store_, prefix_ + ".gru.hidden", h, 3 * h, rng);
  alpha_head_ = num::Linear::create(store_, prefix_ + ".head.alpha", h, x, rng);
  mu_head_ = num::Linear::create(store_, prefix_ + ".head.mu", h, 6 * x, rng);
  sigma_head_ = num::Linear::create(store_, prefix_ + ".head.sigma", h, 6 * x, rng);
  pose_offset_ = store_.add(prefix_ + ".pose_offset", {1, 6}, std::vector<double>(6, 0.0), false);
  pose_scale_ = store_.add(prefix_ + ".pose_scale", {1, 6}, std::vector<double>(6, 1.0), false);
}

void MdnEstimator::set_normaliser(const PoseNormaliser& n) {
  n.validate();
  std::copy(n.offset.data(), n.offset.data() + 6, pose_offset_.mutable_data().begin());
  std::copy(n.scale.data(), n.scale.data() + 6, pose_scale_.mutable_data().begin());
}

PoseNormaliser MdnEstimator::normaliser() const {
  PoseNormaliser n;
  std::copy(pose_offset_.data().begin(), pose_offset_.data().end(), n.offset.data());
  std::copy(pose_scale_.data().begin(), pose_scale_.data().end(), n.scale.data());
  return n;
}

Tensor MdnEstimator::encode_measurement(const Vector6d& observation, double noise_scale) const {
  std::vector<double> v(kObservationWidth);
  for (std::size_t d = 0; d < 6; ++d)
    v[d] = (observation[static_cast<int>(d)] - pose_offset_.data()[d]) / pose_scale_.data()[d];
  v[6] = noise_scale;
  return num::tanh(embed_(Tensor({1, kObservationWidth}, std::move(v))));
}

Tensor MdnEstimator::initial_state() const { return Tensor::zeros({1, config_.hidden}); }

std::pair<Tensor, Tensor> MdnEstimator::rnn_step(const Tensor& embedding, const Tensor& hidden) const {
  const std::size_t h = config_.hidden;
  if (embedding.cols() != h || hidden.cols() != h || embedding.rows() != hidden.rows())
    throw num::DimensionError("rnn_step: expected width " + std::to_string(h));
  const Tensor gi = input_gates_(embedding);
  const Tensor gh = hidden_gates_(hidden);
  const Tensor reset = num::sigmoid(num::add(num::slice(gi, 1, 0, h), num::slice(gh, 1, 0, h)));
  const Tensor update = num::sigmoid(num::add(num::slice(gi, 1, h, h), num::slice(gh, 1, h, h)));
  const Tensor candidate =
      num::tanh(num::add(num::slice(gi, 1, 2 * h, h), num::mul(reset, num::slice(gh, 1, 2 * h, h))));
  // h' = (1 - z) * n + z * h
  const Tensor next = num::add(candidate, num::mul(update, num::sub(hidden, candidate)));
  return {next, next};
}

MixtureTensors MdnEstimator::mdn_head(const Tensor& representation) const {
  const std::size_t x = config_.components;
  MixtureTensors out;
  out.log_alpha = num::log_softmax(alpha_head_(representation));
  out.mu = num::add(num::mul(num::reshape(mu_head_(representation), {x, 6}), pose_scale_), pose_offset_);
  out.sigma = num::add(num::mul(num::softplus(num::reshape(sigma_head_(representation), {x, 6})), pose_scale_),
                       Tensor::scalar(kSigmaFloor));
  return out;
}

std::vector<MixtureTensors> MdnEstimator::forward(std::span<const sim::Measurement> sequence) const {
  std::vector<MixtureTensors> out;
  out.reserve(sequence.size());
  Tensor hidden = initial_state();
  for (const auto& m : sequence) {
    auto [r, h] = rnn_step(encode_measurement(m.observation, m.noise_scale), hidden);
    hidden = h;
    out.push_back(mdn_head(r));
  }
  return out;
}

std::vector<MixtureParams> MdnEstimator::predict(std::span<const sim::Measurement> sequence) const {
  std::vector<MixtureParams> out;
  for (const auto& t : forward(sequence)) out.push_back(t.values());
  return out;
}

Tensor MdnEstimator::sequence_nll(std::span<const sim::Measurement> sequence,
                                  std::span<const Vector6d> targets) const {
  if (sequence.size() != targets.size() || sequence.empty())
    throw num::DimensionError("sequence_nll: inputs and targets differ in length");
  const auto outputs = forward(sequence);
  std::vector<Tensor> terms;
  terms.reserve(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) terms.push_back(mixture_nll(outputs[i], targets[i]));
  return num::mean(num::concat(terms, 0));
}

PoseNormaliser normaliser_from(const std::vector<MdnSequence>& sequences) {
  std::vector<Vector6d> all;
  for (const auto& s : sequences) all.insert(all.end(), s.targets.begin(), s.targets.end());
  return PoseNormaliser::fit(all);
}

double mean_nll(const MdnEstimator& model, const std::vector<MdnSequence>& sequences) {
  double total = 0.0;
  std::size_t frames = 0;
  for (const auto& s : sequences) {
    if (s.inputs.empty()) continue;
    total += model.sequence_nll(s.inputs, s.targets).item() * static_cast<double>(s.inputs.size());
    frames += s.inputs.size();
  }
  return frames ? total / static_cast<double>(frames) : 0.0;
}

MdnTrainReport train_mdn(MdnEstimator& model, const std::vector<MdnSequence>& train,
                         const std::vector<MdnSequence>& heldout, const MdnTrainConfig& config) {
  MdnTrainReport report;
  num::Adam adam({.learning_rate = config.learning_rate});
  auto& store = model.parameters();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  try {
    report.heldout_nll.push_back(mean_nll(model, heldout));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      num::Rng rng(num::mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
      std::shuffle(order.begin(), order.end(), rng);
      double epoch_total = 0.0;
      std::size_t epoch_count = 0;
      for (std::size_t start = 0; start < order.size(); start += config.batch) {
        const std::size_t end = std::min(order.size(), start + config.batch);
        store.zero_grad();
        std::vector<Tensor> losses;
        for (std::size_t i = start; i < end; ++i) {
          const auto& seq = train[order[i]];
          if (seq.inputs.empty()) continue;
          losses.push_back(model.sequence_nll(seq.inputs, seq.targets));
        }
        if (losses.empty()) continue;
        const Tensor loss = num::mean(num::concat(losses, 0));
        num::backward(loss);
        num::clip_grad_norm(store, config.clip_norm);
        adam.step(store);
        epoch_total += loss.item() * static_cast<double>(losses.size());
        epoch_count += losses.size();
      }
      report.train_nll.push_back(epoch_count ? epoch_total / static_cast<double>(epoch_count) : 0.0);
      report.heldout_nll.push_back(mean_nll(model, heldout));
    }
  } catch (const num::NumericalError& e) {
    throw TrainingError("MDN " + model.prefix() + " diverged at epoch " +
                        std::to_string(report.train_nll.size()) + ": " + e.what());
  }
  return report;
}

}  // namespace aftvo::mdn
