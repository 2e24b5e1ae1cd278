#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aftvo/nn.hpp"
#include "aftvo/pose.hpp"
#include "aftvo/sim.hpp"

namespace aftvo::mdn {

inline constexpr double kSigmaFloor = 1e-4;
inline constexpr std::size_t kPoseDims = 6;
/// Observation width fed to the embedding: relative pose plus noise scale.
inline constexpr std::size_t kObservationWidth = 7;

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Diagonal Gaussian mixture over a 6-DoF relative pose.
struct MixtureParams {
  std::vector<double> alpha;
  std::vector<Vector6d> mu;
  std::vector<Vector6d> sigma;

  std::size_t components() const { return alpha.size(); }
  /// Flattened alpha || mu || sigma, length 13 * components.
  std::vector<double> payload() const;
  void validate() const;
};

/// -log sum_i alpha_i N(y; mu_i, diag(sigma_i^2)), evaluated with log-sum-exp.
double mixture_nll(const MixtureParams& p, const Vector6d& y);

struct Moments {
  Vector6d mean;
  Vector6d variance;
};

Moments mixture_moments(const MixtureParams& p);

/// Mixture parameters as graph values: log_alpha [1,X], mu [X,6], sigma [X,6].
struct MixtureTensors {
  num::Tensor log_alpha;
  num::Tensor mu;
  num::Tensor sigma;

  MixtureParams values() const;
};

num::Tensor mixture_nll(const MixtureTensors& p, const Vector6d& y);

struct MdnConfig {
  std::size_t hidden = 64;
  std::size_t components = 3;
};

/// Per-sensor estimator: observation embedding, GRU, mixture head.
class MdnEstimator {
 public:
  MdnEstimator(int source_id, const MdnConfig& config, std::uint64_t seed);

  int source_id() const { return source_id_; }
  const MdnConfig& config() const { return config_; }
  const std::string& prefix() const { return prefix_; }

  /// Fixed standardisation of observations and of the predicted means.
  void set_normaliser(const PoseNormaliser& n);
  PoseNormaliser normaliser() const;

  num::Tensor encode_measurement(const Vector6d& observation, double noise_scale) const;
  /// Gated recurrent update; returns (representation, new hidden state).
  std::pair<num::Tensor, num::Tensor> rnn_step(const num::Tensor& embedding, const num::Tensor& hidden) const;
  MixtureTensors mdn_head(const num::Tensor& representation) const;
  num::Tensor initial_state() const;

  /// Runs the sequence from a zero hidden state.
  std::vector<MixtureTensors> forward(std::span<const sim::Measurement> sequence) const;
  std::vector<MixtureParams> predict(std::span<const sim::Measurement> sequence) const;
  /// Mean per-frame negative log-likelihood of the targets.
  num::Tensor sequence_nll(std::span<const sim::Measurement> sequence, std::span<const Vector6d> targets) const;

  num::ParameterStore& parameters() { return store_; }
  const num::ParameterStore& parameters() const { return store_; }

 private:
  int source_id_;
  MdnConfig config_;
  std::string prefix_;
  num::ParameterStore store_;
  num::Linear embed_;
  num::Linear input_gates_;   // [H -> 3H]
  num::Linear hidden_gates_;  // [H -> 3H]
  num::Linear alpha_head_, mu_head_, sigma_head_;
  num::Tensor pose_offset_, pose_scale_;
};

struct MdnSequence {
  std::vector<sim::Measurement> inputs;
  std::vector<Vector6d> targets;
};

/// Normaliser fitted to all targets of the sequences.
PoseNormaliser normaliser_from(const std::vector<MdnSequence>& sequences);

struct MdnTrainConfig {
  int epochs = 10;
  double learning_rate = 1e-3;
  std::size_t batch = 8;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
};

struct MdnTrainReport {
  std::vector<double> train_nll;    // mean over each epoch
  std::vector<double> heldout_nll;  // entry 0 is before any update
};

double mean_nll(const MdnEstimator& model, const std::vector<MdnSequence>& sequences);

MdnTrainReport train_mdn(MdnEstimator& model, const std::vector<MdnSequence>& train,
                         const std::vector<MdnSequence>& heldout, const MdnTrainConfig& config);

}  // namespace aftvo::mdn
