#pragma once

#include <textface/clip.hpp>

namespace textface {

struct DiscriminatorOptions {
  int64_t base_channels = 32;
  int64_t input_size = kFrameSize;
  double negative_slope = 0.2;
};

/// Fourteen plain convolutions (no normalization, no skips), global average
/// pooling and a sigmoid. Output is the probability that a frame is generated.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  static constexpr int kLayers = 14;

  explicit DiscriminatorImpl(DiscriminatorOptions options = {});

  /// [B, 3, H, W] -> [B] logits.
  torch::Tensor logits(const torch::Tensor& frames);
  /// [B, 3, H, W] -> [B] probabilities in (0, 1).
  torch::Tensor forward(const torch::Tensor& frames);

  const DiscriminatorOptions& options() const { return options_; }

 private:
  DiscriminatorOptions options_;
  std::vector<torch::nn::Conv2d> layers_;
};
TORCH_MODULE(Discriminator);

/// Probabilities for a single [3, H, W] frame or a batch.
torch::Tensor discriminator_forward(Discriminator& discriminator, const torch::Tensor& frames);

}  // namespace textface
