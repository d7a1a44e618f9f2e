#pragma once

#include <textface/attention.hpp>

namespace textface {

struct VisualDecoderOptions {
  int64_t in_channels = 1024;  // 2 * d_model
  // One stage per entry: a transposed conv block (stride from `strides`)
  // followed by (blocks_per_stage - 1) residual conv blocks.
  std::vector<int64_t> channels{512, 256, 128, 64, 32, 32};
  std::vector<int64_t> strides{2, 2, 2, 2, 1, 1};
  int64_t blocks_per_stage = 3;
  int64_t max_generated = 34;
};

/// Frames O_{k+1..N}: [B, N_gen, 3, H, W] in [0, 1].
struct GeneratedFrames {
  torch::Tensor frames;

  int64_t count() const { return frames.size(1); }
};

/// Transposed-convolution decoder. The last layer is a 1x1 convolution with
/// 3 * max_generated outputs; a pass for N_gen frames uses the first 3 * N_gen
/// of them, reshaped frame-major, followed by a sigmoid.
class VisualDecoderImpl : public torch::nn::Module {
 public:
  explicit VisualDecoderImpl(VisualDecoderOptions options = {});

  torch::Tensor forward(const torch::Tensor& fused, int64_t num_generated);

  const VisualDecoderOptions& options() const { return options_; }

 private:
  VisualDecoderOptions options_;
  torch::nn::Sequential blocks_{nullptr};
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(VisualDecoder);

GeneratedFrames decode_frames(VisualDecoder& decoder, const FusedFeatures& fused, int64_t num_generated);

}  // namespace textface
