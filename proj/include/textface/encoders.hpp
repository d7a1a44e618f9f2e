#pragma once

#include <textface/clip.hpp>
#include <textface/layers.hpp>

#include <memory>
#include <span>
#include <string>

namespace textface {

struct VisualEncoderOptions {
  int64_t max_reference_frames = 5;
  int64_t input_size = kFrameSize;
  // One stage per entry. Each stage is a strided conv block followed by
  // (blocks_per_stage - 1) residual conv blocks; 6 stages x 3 blocks = 18 convs.
  std::vector<int64_t> channels{32, 64, 128, 256, 512, 512};
  std::vector<int64_t> strides{1, 2, 2, 2, 2, 1};
  int64_t blocks_per_stage = 3;

  int64_t output_channels() const { return channels.back(); }
  int64_t output_size() const;
};

/// F^v: spatial feature grid [B, C, H', W'] for a batch of reference stacks.
struct VisualFeatures {
  torch::Tensor grid;
  int64_t k = 0;

  int64_t spatial_tokens() const { return grid.size(2) * grid.size(3); }
};

/// Residual convolutional encoder over channel-stacked reference frames.
///
/// Input is [B, 3k, H, W] with 1 <= k <= max_reference_frames. Stacks with
/// fewer than max_reference_frames frames are completed by repeating the last
/// frame, so a single set of first-layer weights serves every k.
class VisualEncoderImpl : public torch::nn::Module {
 public:
  explicit VisualEncoderImpl(VisualEncoderOptions options = {});

  torch::Tensor forward(const torch::Tensor& reference_stack);

  const VisualEncoderOptions& options() const { return options_; }

 private:
  VisualEncoderOptions options_;
  torch::nn::Sequential blocks_{nullptr};
};
TORCH_MODULE(VisualEncoder);

VisualFeatures encode_visual(VisualEncoder& encoder, const torch::Tensor& reference_stack);

enum class TextKind { Emotion, Linguistic };

/// F^t_emo (T = 1) or F^t_ling (T = slice length), already at d_model width.
struct TextFeatures {
  torch::Tensor tokens;  // [T, d_model]
  TextKind kind = TextKind::Linguistic;
};

/// Frozen text model behind a narrow interface. Adapters for external
/// pretrained encoders implement this; nothing here is ever trained.
class TextProvider {
 public:
  virtual ~TextProvider() = default;
  /// [T, width()] per-token states, or [1, width()] for sentence-level models.
  virtual torch::Tensor embed(std::span<const int64_t> tokens) const = 0;
  virtual int64_t width() const = 0;
  virtual bool is_sentence_level() const = 0;
  virtual std::string name() const = 0;
};

/// Deterministic lookup-table provider: row `id % vocab` of a seeded Gaussian
/// table. Sentence-level mode mean-pools the rows. Never fails.
class HashEmbeddingProvider final : public TextProvider {
 public:
  HashEmbeddingProvider(int64_t vocab, int64_t width, uint64_t seed, bool sentence_level);

  torch::Tensor embed(std::span<const int64_t> tokens) const override;
  int64_t width() const override { return table_.size(1); }
  bool is_sentence_level() const override { return sentence_level_; }
  std::string name() const override;

  const torch::Tensor& table() const { return table_; }

 private:
  torch::Tensor table_;
  bool sentence_level_;
};

/// Learned affine map from provider width to d_model.
class ProjectionImpl : public torch::nn::Module {
 public:
  ProjectionImpl(int64_t in_features, int64_t out_features);

  torch::Tensor forward(const torch::Tensor& x);

  /// Sets weight to the identity (square maps only) and bias to zero.
  void init_identity();

  torch::nn::Linear& linear() { return linear_; }

 private:
  torch::nn::Linear linear_{nullptr};
};
TORCH_MODULE(Projection);

/// Provider followed by a trainable projection.
class TextEncoderImpl : public torch::nn::Module {
 public:
  TextEncoderImpl(std::shared_ptr<const TextProvider> provider, int64_t d_model, TextKind kind);

  TextFeatures forward(std::span<const int64_t> tokens);

  const TextProvider& provider() const { return *provider_; }
  TextKind kind() const { return kind_; }

 private:
  std::shared_ptr<const TextProvider> provider_;
  TextKind kind_;
  Projection projection_{nullptr};
};
TORCH_MODULE(TextEncoder);

/// Global emotion features from the full caption.
TextFeatures encode_emotion(TextEncoder& encoder, std::span<const int64_t> caption);

/// Local linguistic features from the caption slice paired with generated frames.
TextFeatures encode_linguistic(TextEncoder& encoder, std::span<const int64_t> slice);

}  // namespace textface
