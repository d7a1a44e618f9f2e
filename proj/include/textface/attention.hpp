#pragma once

#include <textface/encoders.hpp>

#include <vector>

namespace textface {

/// Raw multi-head cross-attention without projections.
struct AttentionCore {
  torch::Tensor weights;   // [B, heads, T, S], rows sum to one over S
  torch::Tensor text_out;  // [B, T, d]  O = A V
  torch::Tensor spatial;   // [B, S, d]  A^T O, attended text outputs laid back onto keys
};

/// Per head: A = softmax_rows(Q K^T / sqrt(d / heads)), O = A V, spatial = A^T O.
/// Accepts [T, d] / [S, d] or batched [B, T, d] / [B, S, d] inputs; unbatched
/// inputs produce a leading batch dimension of 1.
AttentionCore cross_attention(const torch::Tensor& query, const torch::Tensor& key, const torch::Tensor& value,
                              int64_t heads);

struct AttentionResult {
  torch::Tensor fused_grid;              // [B, C, H', W']
  std::vector<torch::Tensor> weights;    // per batch item [heads, T, S]; empty when bypassed
};

struct FusedFeatures {
  AttentionResult emo;
  AttentionResult ling;
  torch::Tensor concat;  // [B, 2C, H', W'], emo channels first
};

/// Text queries against the flattened visual grid (keys and values), with
/// learned Q/K/V/output projections. The fused map is reshaped back onto the
/// grid.
class CrossAttentionImpl : public torch::nn::Module {
 public:
  CrossAttentionImpl(int64_t d_model, int64_t heads);

  /// `text` is [T, d] for a single grid ([1, C, H', W']).
  AttentionResult forward(const torch::Tensor& text, const torch::Tensor& grid);

  int64_t heads() const { return heads_; }

 private:
  int64_t heads_;
  torch::nn::Linear query_{nullptr}, key_{nullptr}, value_{nullptr}, output_{nullptr};
};
TORCH_MODULE(CrossAttention);

struct FusionFlags {
  bool global_ca = true;
  bool local_ca = true;
};

/// Global (emotion query) and local (linguistic query) cross-attention over
/// the same visual grid, concatenated channel-wise. A disabled branch passes
/// the raw visual grid through in its slot.
class MultiScaleFusionImpl : public torch::nn::Module {
 public:
  MultiScaleFusionImpl(int64_t d_model, int64_t heads, FusionFlags flags = {});

  FusedFeatures forward(const VisualFeatures& visual, const std::vector<TextFeatures>& emotion,
                        const std::vector<TextFeatures>& linguistic);

  /// Disabled branches also stop requiring gradients.
  void set_flags(FusionFlags flags);
  const FusionFlags& flags() const { return flags_; }

 private:
  FusionFlags flags_;
  CrossAttention global_{nullptr};
  CrossAttention local_{nullptr};
};
TORCH_MODULE(MultiScaleFusion);

FusedFeatures fuse_multiscale(MultiScaleFusion& fusion, const VisualFeatures& visual,
                              const std::vector<TextFeatures>& emotion, const std::vector<TextFeatures>& linguistic);

/// Heat map [H', W'] in [0, 1]: weights [heads, T, S] averaged over heads and
/// tokens, then min-max normalized. A constant map normalizes to all zeros.
torch::Tensor attention_map(const torch::Tensor& weights, int64_t grid_height, int64_t grid_width);

/// Bilinear upsampling of a heat map to size x size, clamped to [0, 1].
torch::Tensor upsample_map(const torch::Tensor& map, int64_t size = kFrameSize);

/// Jet-colored heat map (red high, blue low) alpha-blended over a [3, H, W] frame.
torch::Tensor overlay_heatmap(const torch::Tensor& frame, const torch::Tensor& map, double alpha = 0.5);

}  // namespace textface
