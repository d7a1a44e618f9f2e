#include <textface/layers.hpp>

#include <textface/error.hpp>

namespace textface {

ConvBlockImpl::ConvBlockImpl(const ConvBlockOptions& options) : options_(options) {
  require(!options.residual() || (options.in_channels() == options.out_channels() && options.stride() == 1),
          "residual conv block needs matching channels and unit stride");
  if (options.transpose()) {
    deconv_ = register_module(
        "deconv", torch::nn::ConvTranspose2d(
                      torch::nn::ConvTranspose2dOptions(options.in_channels(), options.out_channels(), options.kernel_size())
                          .stride(options.stride())
                          .padding(options.padding())
                          .output_padding(options.stride() - 1)));
  } else {
    conv_ = register_module(
        "conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(options.in_channels(), options.out_channels(), options.kernel_size())
                                      .stride(options.stride())
                                      .padding(options.padding())));
  }
  norm_ = register_module("norm", torch::nn::BatchNorm2d(options.out_channels()));
  if (options.residual() && options.zero_init_residual()) {
    torch::NoGradGuard no_grad;
    norm_->weight.zero_();
  }
}

torch::Tensor ConvBlockImpl::forward(const torch::Tensor& x) {
  auto y = norm_(options_.transpose() ? deconv_(x) : conv_(x));
  if (options_.residual()) y = y + x;
  return torch::relu(y);
}

uint64_t tensor_checksum(const std::vector<torch::Tensor>& tensors) {
  uint64_t hash = 1469598103934665603ull;
  for (const auto& t : tensors) {
    auto bytes = t.detach().contiguous().to(torch::kCPU);
    const auto* data = static_cast<const unsigned char*>(bytes.data_ptr());
    const auto n = static_cast<size_t>(bytes.numel()) * bytes.element_size();
    for (size_t i = 0; i < n; ++i) {
      hash ^= data[i];
      hash *= 1099511628211ull;
    }
  }
  return hash;
}

uint64_t module_checksum(const torch::nn::Module& module) {
  auto tensors = module.parameters();
  for (const auto& b : module.buffers()) tensors.push_back(b);
  return tensor_checksum(tensors);
}

}  // namespace textface
