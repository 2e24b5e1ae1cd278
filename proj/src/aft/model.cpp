#include <algorithm>
#include <numeric>

#include "aftvo/aft.hpp"

namespace aftvo::aft {

using num::Tensor;

FusionTransformer::FusionTransformer(const AftConfig& config, std::uint64_t seed)
    : config_(config), table_(config.discretiser.max_bins, config.width) {
  config.discretiser.validate();
  if (config.width == 0 || config.heads == 0 || config.width % config.heads != 0)
    throw std::invalid_argument("model width must be a positive multiple of the head count");
  if (config.layers == 0 || config.components == 0 || config.num_sources == 0)
    throw std::invalid_argument("layers, components and sources must be positive");
  num::Rng rng(seed);
  const std::size_t d = config.width;
  input_projection_ = num::Linear::create(store_, "aft.input", config.payload_width(), d, rng);
  if (config.variant != Variant::NoSource)
    source_encoding_ = num::Linear::create(store_, "aft.source", config.num_sources, d, rng);
  pose_embedding_ = num::Linear::create(store_, "aft.pose_embed", 6, d, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = "aft.encoder" + std::to_string(l);
    encoder_.push_back({num::MultiHeadAttention::create(store_, p + ".attn", d, config.heads, rng),
                        num::LayerNorm::create(store_, p + ".norm1", d),
                        num::LayerNorm::create(store_, p + ".norm2", d),
                        num::FeedForward::create(store_, p + ".ff", d, config.ff_width, rng)});
  }
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = "aft.decoder" + std::to_string(l);
    decoder_.push_back({num::MultiHeadAttention::create(store_, p + ".self_attn", d, config.heads, rng),
                        num::MultiHeadAttention::create(store_, p + ".cross_attn", d, config.heads, rng),
                        num::LayerNorm::create(store_, p + ".norm1", d),
                        num::LayerNorm::create(store_, p + ".norm2", d),
                        num::LayerNorm::create(store_, p + ".norm3", d),
                        num::FeedForward::create(store_, p + ".ff", d, config.ff_width, rng)});
  }
  output_head_ = num::Linear::create(store_, "aft.output", d, 6, rng);
  pose_offset_ = store_.add("aft.pose_offset", {1, 6}, std::vector<double>(6, 0.0), false);
  pose_scale_ = store_.add("aft.pose_scale", {1, 6}, std::vector<double>(6, 1.0), false);
}

void FusionTransformer::set_normaliser(const PoseNormaliser& n) {
  n.validate();
  std::copy(n.offset.data(), n.offset.data() + 6, pose_offset_.mutable_data().begin());
  std::copy(n.scale.data(), n.scale.data() + 6, pose_scale_.mutable_data().begin());
}

PoseNormaliser FusionTransformer::normaliser() const {
  PoseNormaliser n;
  std::copy(pose_offset_.data().begin(), pose_offset_.data().end(), n.offset.data());
  std::copy(pose_scale_.data().begin(), pose_scale_.data().end(), n.scale.data());
  return n;
}

Tensor FusionTransformer::project_input(std::span<const FusionItem> items) const {
  const std::size_t x = config_.components, width = config_.payload_width();
  const auto offset = pose_offset_.data(), scale = pose_scale_.data();
  std::vector<double> rows;
  rows.reserve(items.size() * width);
  for (const auto& item : items) {
    if (item.payload.size() != width)
      throw num::DimensionError("payload length " + std::to_string(item.payload.size()) + ", expected " +
                                std::to_string(width));
    for (std::size_t j = 0; j < x; ++j) rows.push_back(item.payload[j]);
    for (std::size_t j = x; j < 7 * x; ++j) rows.push_back((item.payload[j] - offset[(j - x) % 6]) / scale[(j - x) % 6]);
    for (std::size_t j = 7 * x; j < width; ++j) rows.push_back(item.payload[j] / scale[(j - x) % 6]);
  }
  return input_projection_(Tensor({items.size(), width}, std::move(rows)));
}

Tensor FusionTransformer::source_encode(int source_id) const {
  if (!source_encoding_) throw std::logic_error("variant has no source encoding");
  if (source_id < 0 || static_cast<std::size_t>(source_id) >= config_.num_sources)
    throw std::out_of_range("unknown source id " + std::to_string(source_id));
  std::vector<double> one_hot(config_.num_sources, 0.0);
  one_hot[static_cast<std::size_t>(source_id)] = 1.0;
  return (*source_encoding_)(Tensor({1, config_.num_sources}, std::move(one_hot)));
}

std::vector<std::size_t> FusionTransformer::item_positions(std::span<const FusionItem> items) const {
  std::vector<std::size_t> pos(items.size());
  if (config_.variant == Variant::Equidistant) {
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    if (!pos.empty() && pos.back() >= config_.discretiser.max_bins)
      throw WindowTooLongError("window has more items than positional bins");
    return pos;
  }
  const Timestamp lo = window_minimum(items);
  for (std::size_t i = 0; i < items.size(); ++i) pos[i] = discretise(items[i].timestamp, lo, config_.discretiser);
  return pos;
}

std::vector<std::size_t> FusionTransformer::query_positions(std::span<const Timestamp> queries,
                                                            Timestamp window_min) const {
  std::vector<std::size_t> pos(queries.size());
  if (config_.variant == Variant::Equidistant) {
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    if (!pos.empty() && pos.back() >= config_.discretiser.max_bins)
      throw WindowTooLongError("more queries than positional bins");
    return pos;
  }
  for (std::size_t u = 0; u < queries.size(); ++u) pos[u] = discretise(queries[u], window_min, config_.discretiser);
  return pos;
}

Tensor FusionTransformer::embed_items(std::span<const FusionItem> items) const {
  if (items.empty()) throw std::invalid_argument("empty fusion window");
  Tensor x = project_input(items);
  if (config_.variant != Variant::NoTime) {
    const auto pos = item_positions(items);
    x = num::add(x, table_.rows(pos));
  }
  if (source_encoding_) {
    std::vector<double> one_hot(items.size() * config_.num_sources, 0.0);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const int k = items[i].source_id;
      if (k < 0 || static_cast<std::size_t>(k) >= config_.num_sources)
        throw std::out_of_range("unknown source id " + std::to_string(k));
      one_hot[i * config_.num_sources + static_cast<std::size_t>(k)] = 1.0;
    }
    x = num::add(x, (*source_encoding_)(Tensor({items.size(), config_.num_sources}, std::move(one_hot))));
  }
  return x;
}

Tensor FusionTransformer::fusion_encode(const Tensor& embedded) const {
  if (embedded.rows() == 0) throw std::invalid_argument("empty fusion window");
  Tensor x = embedded;
  for (const auto& layer : encoder_) {
    x = layer.norm1(num::add(x, layer.attention(x, x, false)));
    x = layer.norm2(num::add(x, layer.ff(x)));
  }
  return x;
}

Tensor FusionTransformer::fusion_decode(const Tensor& memory, std::span<const Timestamp> queries,
                                        std::span<const Vector6d> decoder_poses, Timestamp window_min) const {
  const std::size_t u = queries.size();
  if (u == 0) throw std::invalid_argument("empty query set");
  if (decoder_poses.size() != u) throw num::DimensionError("decoder inputs and queries differ in length");
  for (std::size_t i = 1; i < u; ++i)
    if (queries[i] <= queries[i - 1]) throw std::invalid_argument("query stamps must be strictly increasing");

  const auto offset = pose_offset_.data(), scale = pose_scale_.data();
  std::vector<double> raw(u * 6);
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = 0; j < 6; ++j) raw[i * 6 + j] = (decoder_poses[i][static_cast<int>(j)] - offset[j]) / scale[j];
  Tensor x = pose_embedding_(Tensor({u, 6}, std::move(raw)));
  if (config_.variant != Variant::NoTime) x = num::add(x, table_.rows(query_positions(queries, window_min)));

  for (const auto& layer : decoder_) {
    x = layer.norm1(num::add(x, layer.self_attention(x, x, true)));
    x = layer.norm2(num::add(x, layer.cross_attention(x, memory, false)));
    x = layer.norm3(num::add(x, layer.ff(x)));
  }
  return num::add(num::mul(output_head_(x), pose_scale_), pose_offset_);
}

std::vector<Vector6d> FusionTransformer::teacher_inputs(const FusionWindow& window) {
  if (window.targets.size() != window.queries.size())
    throw num::DimensionError("teacher forcing needs one target per query");
  std::vector<Vector6d> inputs;
  inputs.reserve(window.queries.size());
  inputs.push_back(Vector6d::Zero());
  for (std::size_t i = 0; i + 1 < window.targets.size(); ++i) inputs.push_back(window.targets[i]);
  return inputs;
}

Tensor FusionTransformer::forward(const FusionWindow& window) const {
  return forward(window, teacher_inputs(window));
}

Tensor FusionTransformer::forward(const FusionWindow& window, std::span<const Vector6d> decoder_inputs) const {
  const Tensor memory = fusion_encode(embed_items(window.items));
  return fusion_decode(memory, window.queries, decoder_inputs, window_minimum(window.items));
}

Tensor FusionTransformer::loss(const FusionWindow& window) const {
  return fusion_loss(forward(window), window.targets, config_.rotation_weight);
}

Tensor FusionTransformer::loss(const FusionWindow& window, std::span<const Vector6d> decoder_inputs) const {
  return fusion_loss(forward(window, decoder_inputs), window.targets, config_.rotation_weight);
}

std::vector<Vector6d> FusionTransformer::infer(std::span<const FusionItem> items,
                                               std::span<const Timestamp> queries) const {
  const Tensor memory = fusion_encode(embed_items(items));
  const Timestamp lo = window_minimum(items);
  std::vector<Vector6d> inputs{Vector6d::Zero()};
  std::vector<Vector6d> out;
  out.reserve(queries.size());
  for (std::size_t u = 0; u < queries.size(); ++u) {
    const Tensor y = fusion_decode(memory, queries.subspan(0, u + 1), inputs, lo);
    Vector6d v;
    for (int j = 0; j < 6; ++j) v[j] = y.at(u, static_cast<std::size_t>(j));
    out.push_back(v);
    inputs.push_back(v);
  }
  return out;
}

Tensor fusion_loss(const Tensor& predicted, std::span<const Vector6d> targets, double omega) {
  const std::size_t u = targets.size();
  if (u == 0 || predicted.rows() != u || predicted.cols() != 6)
    throw num::DimensionError("fusion_loss: prediction and target lengths differ");
  std::vector<double> y(u * 6);
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = 0; j < 6; ++j) y[i * 6 + j] = targets[i][static_cast<int>(j)];
  const Tensor weights({1, 6}, {1.0, 1.0, 1.0, omega, omega, omega});
  const Tensor diff = num::sub(predicted, Tensor({u, 6}, std::move(y)));
  return num::scale(num::sum(num::mul(num::mul(diff, diff), weights)), 1.0 / static_cast<double>(u));
}

double fusion_loss(std::span<const Vector6d> predicted, std::span<const Vector6d> targets, double omega) {
  if (predicted.size() != targets.size() || targets.empty())
    throw num::DimensionError("fusion_loss: prediction and target lengths differ");
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Vector6d d = predicted[i] - targets[i];
    total += d.head<3>().squaredNorm() + omega * d.tail<3>().squaredNorm();
  }
  return total / static_cast<double>(targets.size());
}

}  // namespace aftvo::aft
