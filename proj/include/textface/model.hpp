#pragma once

#include <textface/decoder.hpp>
#include <textface/tokenizer.hpp>

#include <memory>
#include <vector>

namespace textface {

struct ModelConfig {
  int64_t max_reference_frames = 5;
  int64_t max_generated = kMaxClipFrames - 1;  // k = 1 on the longest admitted clip
  int64_t d_model = 512;
  int64_t heads = 8;
  std::vector<int64_t> encoder_channels{32, 64, 128, 256, 512, 512};
  std::vector<int64_t> decoder_channels{512, 256, 128, 64, 32, 32};
  int64_t blocks_per_stage = 3;
  int64_t vocab = ToyTokenizer::kVocabSize;
  int64_t emotion_width = 768;
  int64_t linguistic_width = 2560;
  uint64_t text_seed = 7;
  FusionFlags flags;

  /// Narrow widths for single-core CPU runs.
  static ModelConfig desk();

  /// Throws Error(InvalidInput) on inconsistent widths.
  void validate() const;
};

struct GeneratorOutput {
  torch::Tensor frames;  // [B, N_gen, 3, H, W]
  FusedFeatures fused;
};

/// Visual encoder, frozen text providers with trainable projections,
/// multi-scale cross-attention fusion and the frame decoder.
class TalkingFaceGeneratorImpl : public torch::nn::Module {
 public:
  explicit TalkingFaceGeneratorImpl(ModelConfig config = {});

  /// reference_stack: [B, 3k, H, W]; captions and slices hold one token list
  /// per batch item (the full caption and its tokens m..M-1).
  GeneratorOutput forward(const torch::Tensor& reference_stack, const std::vector<std::vector<int64_t>>& captions,
                          const std::vector<std::vector<int64_t>>& slices, int64_t num_generated);

  void set_flags(FusionFlags flags);
  const ModelConfig& config() const { return config_; }

  VisualEncoder& visual_encoder() { return encoder_; }
  TextEncoder& emotion_encoder() { return emotion_; }
  TextEncoder& linguistic_encoder() { return linguistic_; }
  MultiScaleFusion& fusion() { return fusion_; }
  VisualDecoder& decoder() { return decoder_; }

 private:
  ModelConfig config_;
  VisualEncoder encoder_{nullptr};
  TextEncoder emotion_{nullptr};
  TextEncoder linguistic_{nullptr};
  MultiScaleFusion fusion_{nullptr};
  VisualDecoder decoder_{nullptr};
};
TORCH_MODULE(TalkingFaceGenerator);

/// Channel-stacks the first k frames of a [N, 3, H, W] tensor into [3k, H, W].
torch::Tensor stack_reference_frames(const torch::Tensor& frames, int64_t k);

/// Generates frames k..N-1 of a preprocessed clip (frames already 96x96).
GeneratorOutput generate_for_clip(TalkingFaceGenerator& generator, const Clip& clip, int64_t k);

}  // namespace textface
