#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "aftvo/ops.hpp"
#include "aftvo/tensor.hpp"

namespace aftvo::num {

using Rng = std::mt19937_64;

/// splitmix64 finaliser; derives independent child seeds from (seed, salt).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

struct NamedTensor {
  std::string name;
  Tensor tensor;
  bool trainable = true;
};

/// Ordered, uniquely-named collection of a model's parameters and fixed
/// buffers. Order of registration is the checkpoint order.
class ParameterStore {
 public:
  Tensor add(const std::string& name, Shape shape, std::vector<double> values, bool trainable = true);
  Tensor xavier(const std::string& name, std::size_t fan_in, std::size_t fan_out, Rng& rng);
  Tensor zeros(const std::string& name, Shape shape);
  Tensor constant(const std::string& name, Shape shape, double value);

  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::vector<NamedTensor>& entries() { return entries_; }
  const NamedTensor* find(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name) != nullptr; }

  std::size_t trainable_count() const;
  void zero_grad();

 private:
  std::vector<NamedTensor> entries_;
};

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [1, out]

  static Linear create(ParameterStore& store, const std::string& name, std::size_t in,
                       std::size_t out, Rng& rng);
  Tensor operator()(const Tensor& x) const { return add(matmul(x, weight), bias); }
};

struct LayerNorm {
  Tensor gain;
  Tensor bias;

  static LayerNorm create(ParameterStore& store, const std::string& name, std::size_t width);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gain, bias); }
};

struct MultiHeadAttention {
  Linear query, key, value, output;
  std::size_t heads = 1;

  static MultiHeadAttention create(ParameterStore& store, const std::string& name,
                                   std::size_t width, std::size_t heads, Rng& rng);
  /// Scaled dot-product attention of `queries` rows over `memory` rows. With
  /// `causal`, query row i only sees memory rows 0..i.
  Tensor operator()(const Tensor& queries, const Tensor& memory, bool causal) const;
};

struct FeedForward {
  Linear inner, outer;

  static FeedForward create(ParameterStore& store, const std::string& name, std::size_t width,
                            std::size_t hidden, Rng& rng);
  Tensor operator()(const Tensor& x) const { return outer(relu(inner(x))); }
};

/// Scales all trainable gradients so their global L2 norm is at most
/// `max_norm`; returns the norm before clipping.
double clip_grad_norm(ParameterStore& store, double max_norm);

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(ParameterStore& store);
  std::uint64_t steps() const { return steps_; }

  // Moment estimates keyed by parameter name, for checkpointing.
  std::map<std::string, std::vector<double>>& first_moments() { return m_; }
  std::map<std::string, std::vector<double>>& second_moments() { return v_; }
  const std::map<std::string, std::vector<double>>& first_moments() const { return m_; }
  const std::map<std::string, std::vector<double>>& second_moments() const { return v_; }
  void set_steps(std::uint64_t steps) { steps_ = steps; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::map<std::string, std::vector<double>> m_, v_;
};

}  // namespace aftvo::num
