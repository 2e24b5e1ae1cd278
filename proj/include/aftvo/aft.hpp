#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aftvo/nn.hpp"
#include "aftvo/pose.hpp"

namespace aftvo::aft {

class WindowTooLongError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct DiscretiserConfig {
  Timestamp step = 20'000;  // quantisation step Z, microseconds
  std::size_t max_bins = 400;

  void validate() const;
};

/// Bin index floor((t - window_min) / Z). Throws std::invalid_argument when
/// t precedes the window and WindowTooLongError when the bin overflows.
std::size_t discretise(Timestamp t, Timestamp window_min, const DiscretiserConfig& config);
/// Bins for a whole window, relative to its own earliest stamp.
std::vector<std::size_t> discretise(std::span<const Timestamp> stamps, const DiscretiserConfig& config);

/// Fixed sinusoidal table: PE(d, 2i) = sin(d / 10000^(2i/D)), PE(d, 2i+1) = cos(same).
class PositionalTable {
 public:
  PositionalTable(std::size_t max_bins, std::size_t width);
  std::size_t bins() const { return bins_; }
  std::size_t width() const { return width_; }
  /// Rows for the given bins; any bin order, repeats and gaps allowed.
  num::Tensor rows(std::span<const std::size_t> bins) const;
  num::Tensor row(std::size_t bin) const;

 private:
  std::size_t bins_, width_;
  std::vector<double> table_;
};

enum class Variant { Full, Equidistant, NoTime, NoSource };

/// Accepts both descriptive tags (full, no_discretiser_equidistant, no_time,
/// no_source) and table tags (-D-Equi, -D-None, -SE).
Variant parse_variant(const std::string& tag);
std::string variant_tag(Variant v);          // descriptive form
std::string variant_table_tag(Variant v);    // table form
const std::vector<Variant>& all_variants();

struct FusionItem {
  int source_id = 0;
  Timestamp timestamp = 0;
  std::vector<double> payload;  // alpha || mu || sigma
};

/// Sorts items by (timestamp, source_id).
void canonicalise(std::vector<FusionItem>& items);
Timestamp window_minimum(std::span<const FusionItem> items);

struct FusionWindow {
  std::vector<FusionItem> items;     // canonical order
  std::vector<Timestamp> queries;    // t_1..t_U, strictly increasing
  std::vector<Vector6d> targets;     // relative motion over (t_{u-1}, t_u); empty at inference
  Timestamp previous_stamp = 0;      // t_0
};

struct AftConfig {
  std::size_t layers = 2;
  std::size_t width = 64;
  std::size_t heads = 4;
  std::size_t ff_width = 128;
  std::size_t components = 3;
  std::size_t num_sources = 3;
  DiscretiserConfig discretiser;
  double rotation_weight = 100.0;
  Variant variant = Variant::Full;

  std::size_t payload_width() const { return 13 * components; }
};

class FusionTransformer {
 public:
  FusionTransformer(const AftConfig& config, std::uint64_t seed);
  FusionTransformer(const FusionTransformer&) = delete;
  FusionTransformer& operator=(const FusionTransformer&) = delete;
  FusionTransformer(FusionTransformer&&) = default;
  FusionTransformer& operator=(FusionTransformer&&) = default;

  const AftConfig& config() const { return config_; }

  /// Fixed standardisation of payload means/spreads, decoder inputs and outputs.
  void set_normaliser(const PoseNormaliser& n);
  PoseNormaliser normaliser() const;

  /// Shared affine map of the (normalised) payload to width D; rows follow items.
  num::Tensor project_input(std::span<const FusionItem> items) const;
  num::Tensor positional_encode(std::size_t bin) const { return table_.row(bin); }
  num::Tensor positional_encode(std::span<const std::size_t> bins) const { return table_.rows(bins); }
  /// One-hot source id through a learned affine map; [1, D].
  num::Tensor source_encode(int source_id) const;
  /// Projection + positional encoding + source encoding, per variant.
  num::Tensor embed_items(std::span<const FusionItem> items) const;
  /// Bins used for the item positional encodings under this variant.
  std::vector<std::size_t> item_positions(std::span<const FusionItem> items) const;

  num::Tensor fusion_encode(const num::Tensor& embedded) const;
  /// Decoder pass. Step u consumes decoder_poses[u] (zero vector first, then
  /// the previous targets or predictions) at query stamp queries[u].
  num::Tensor fusion_decode(const num::Tensor& memory, std::span<const Timestamp> queries,
                            std::span<const Vector6d> decoder_poses, Timestamp window_min) const;

  /// Zero vector followed by targets 1..U-1.
  static std::vector<Vector6d> teacher_inputs(const FusionWindow& window);
  /// Teacher-forced forward pass; [U, 6].
  num::Tensor forward(const FusionWindow& window) const;
  num::Tensor forward(const FusionWindow& window, std::span<const Vector6d> decoder_inputs) const;
  num::Tensor loss(const FusionWindow& window) const;
  num::Tensor loss(const FusionWindow& window, std::span<const Vector6d> decoder_inputs) const;
  /// Autoregressive decoding at the window's query stamps.
  std::vector<Vector6d> infer(std::span<const FusionItem> items, std::span<const Timestamp> queries) const;

  num::ParameterStore& parameters() { return store_; }
  const num::ParameterStore& parameters() const { return store_; }

 private:
  struct EncoderLayer {
    num::MultiHeadAttention attention;
    num::LayerNorm norm1, norm2;
    num::FeedForward ff;
  };
  struct DecoderLayer {
    num::MultiHeadAttention self_attention, cross_attention;
    num::LayerNorm norm1, norm2, norm3;
    num::FeedForward ff;
  };

  AftConfig config_;
  num::ParameterStore store_;
  PositionalTable table_;
  num::Linear input_projection_;
  std::optional<num::Linear> source_encoding_;
  num::Linear pose_embedding_;
  num::Linear output_head_;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  num::Tensor pose_offset_, pose_scale_;

  std::vector<std::size_t> query_positions(std::span<const Timestamp> queries, Timestamp window_min) const;
};

/// (1/U) sum_u ||dt_u||^2 + omega ||dr_u||^2 with translation dims 0-2 and
/// Euler rotation dims 3-5.
num::Tensor fusion_loss(const num::Tensor& predicted, std::span<const Vector6d> targets, double omega);
double fusion_loss(std::span<const Vector6d> predicted, std::span<const Vector6d> targets, double omega);

struct FusionTrainConfig {
  int epochs = 20;
  double learning_rate = 5e-4;
  std::size_t batch = 16;
  double clip_norm = 5.0;
  /// Std of Gaussian noise added to the teacher inputs, in normalised units.
  double teacher_noise = 0.0;
  std::uint64_t seed = 0;
};

struct FusionTrainReport {
  std::vector<double> train_loss;  // entry 0: before any update, then per epoch
  std::vector<double> val_loss;
};

double mean_loss(const FusionTransformer& model, const std::vector<FusionWindow>& windows);

/// Epoch-at-a-time trainer so runs can be checkpointed and resumed exactly.
class FusionTrainer {
 public:
  FusionTrainer(FusionTransformer& model, FusionTrainConfig config);

  /// Runs one epoch of teacher-forced training; returns the mean train loss.
  double run_epoch(const std::vector<FusionWindow>& train);
  int epochs_done() const { return epochs_done_; }
  void set_epochs_done(int n) { epochs_done_ = n; }
  num::Adam& optimiser() { return adam_; }

 private:
  FusionTransformer& model_;
  FusionTrainConfig config_;
  num::Adam adam_;
  int epochs_done_ = 0;
};

FusionTrainReport train_fusion(FusionTransformer& model, const std::vector<FusionWindow>& train,
                               const std::vector<FusionWindow>& val, const FusionTrainConfig& config);

}  // namespace aftvo::aft
