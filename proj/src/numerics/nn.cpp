#include "aftvo/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace aftvo::num {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Tensor ParameterStore::add(const std::string& name, Shape shape, std::vector<double> values,
                           bool trainable) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  Tensor t(std::move(shape), std::move(values), trainable);
  entries_.push_back({name, t, trainable});
  return t;
}

Tensor ParameterStore::xavier(const std::string& name, std::size_t fan_in, std::size_t fan_out,
                              Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> values(fan_in * fan_out);
  for (auto& v : values) v = dist(rng);
  return add(name, {fan_in, fan_out}, std::move(values));
}

Tensor ParameterStore::zeros(const std::string& name, Shape shape) {
  return constant(name, std::move(shape), 0.0);
}

Tensor ParameterStore::constant(const std::string& name, Shape shape, double value) {
  const auto n = element_count(shape);
  return add(name, std::move(shape), std::vector<double>(n, value));
}

const NamedTensor* ParameterStore::find(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e;
  return nullptr;
}

std::size_t ParameterStore::trainable_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    if (e.trainable) n += e.tensor.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_)
    if (e.trainable) e.tensor.zero_grad();
}

Linear Linear::create(ParameterStore& store, const std::string& name, std::size_t in,
                      std::size_t out, Rng& rng) {
  Linear l;
  l.weight = store.xavier(name + ".weight", in, out, rng);
  l.bias = store.zeros(name + ".bias", {1, out});
  return l;
}

LayerNorm LayerNorm::create(ParameterStore& store, const std::string& name, std::size_t width) {
  return {store.constant(name + ".gain", {1, width}, 1.0), store.zeros(name + ".bias", {1, width})};
}

MultiHeadAttention MultiHeadAttention::create(ParameterStore& store, const std::string& name,
                                              std::size_t width, std::size_t heads, Rng& rng) {
  if (heads == 0 || width % heads != 0)
    throw DimensionError("attention width " + std::to_string(width) + " not divisible by " +
                         std::to_string(heads) + " heads");
  MultiHeadAttention a;
  a.query = Linear::create(store, name + ".query", width, width, rng);
  a.key = Linear::create(store, name + ".key", width, width, rng);
  a.value = Linear::create(store, name + ".value", width, width, rng);
  a.output = Linear::create(store, name + ".output", width, width, rng);
  a.heads = heads;
  return a;
}

Tensor MultiHeadAttention::operator()(const Tensor& queries, const Tensor& memory, bool causal) const {
  const Tensor q = query(queries);
  const Tensor k = key(memory);
  const Tensor v = value(memory);
  const std::size_t width = q.cols();
  const std::size_t head_width = width / heads;
  const std::size_t nq = q.rows(), nk = k.rows();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_width));

  std::vector<bool> mask;
  if (causal) {
    mask.resize(nq * nk);
    for (std::size_t i = 0; i < nq; ++i)
      for (std::size_t j = 0; j < nk; ++j) mask[i * nk + j] = j > i;
  }
  std::vector<Tensor> outputs;
  outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor qh = slice(q, 1, h * head_width, head_width);
    const Tensor kh = slice(k, 1, h * head_width, head_width);
    const Tensor vh = slice(v, 1, h * head_width, head_width);
    Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    if (causal) scores = masked_fill(scores, mask, -1e9);
    outputs.push_back(matmul(softmax(scores), vh));
  }
  return output(heads == 1 ? outputs.front() : concat(outputs, 1));
}

FeedForward FeedForward::create(ParameterStore& store, const std::string& name, std::size_t width,
                                std::size_t hidden, Rng& rng) {
  return {Linear::create(store, name + ".inner", width, hidden, rng),
          Linear::create(store, name + ".outer", hidden, width, rng)};
}

double clip_grad_norm(ParameterStore& store, double max_norm) {
  double sq = 0.0;
  for (auto& e : store.entries())
    if (e.trainable)
      for (double g : e.tensor.grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const double factor = max_norm / norm;
    for (auto& e : store.entries())
      if (e.trainable)
        for (auto& g : e.tensor.mutable_grad()) g *= factor;
  }
  return norm;
}

void Adam::step(ParameterStore& store) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (auto& e : store.entries()) {
    if (!e.trainable) continue;
    auto data = e.tensor.mutable_data();
    auto grad = e.tensor.grad();
    auto& m = m_[e.name];
    auto& v = v_[e.name];
    if (m.size() != data.size()) m.assign(data.size(), 0.0);
    if (v.size() != data.size()) v.assign(data.size(), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * grad[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
      data[i] -= config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

}  // namespace aftvo::num
