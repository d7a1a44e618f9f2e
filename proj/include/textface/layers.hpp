#pragma once

#include <torch/torch.h>

namespace textface {

struct ConvBlockOptions {
  ConvBlockOptions(int64_t in_channels, int64_t out_channels) : in_channels_(in_channels), out_channels_(out_channels) {}
  TORCH_ARG(int64_t, in_channels);
  TORCH_ARG(int64_t, out_channels);
  TORCH_ARG(int64_t, kernel_size) = 3;
  TORCH_ARG(int64_t, stride) = 1;
  TORCH_ARG(int64_t, padding) = 1;
  TORCH_ARG(bool, residual) = false;
  // Transposed convolution; stride 2 doubles the spatial size exactly.
  TORCH_ARG(bool, transpose) = false;
  // Residual blocks start as the identity (normalization scale zero).
  TORCH_ARG(bool, zero_init_residual) = true;
};

/// Convolution -> batch normalization -> ReLU, with an optional identity skip
/// added before the rectifier.
class ConvBlockImpl : public torch::nn::Module {
 public:
  explicit ConvBlockImpl(const ConvBlockOptions& options);

  torch::Tensor forward(const torch::Tensor& x);

  const ConvBlockOptions& options() const { return options_; }

 private:
  ConvBlockOptions options_;
  torch::nn::Conv2d conv_{nullptr};
  torch::nn::ConvTranspose2d deconv_{nullptr};
  torch::nn::BatchNorm2d norm_{nullptr};
};
TORCH_MODULE(ConvBlock);

/// Stable digest of every parameter and buffer, for freeze/determinism checks.
uint64_t tensor_checksum(const std::vector<torch::Tensor>& tensors);
uint64_t module_checksum(const torch::nn::Module& module);

}  // namespace textface
