#include <textface/discriminator.hpp>

#include <textface/error.hpp>

namespace textface {

namespace {

struct LayerSpec {
  int64_t out_multiplier;  // of base_channels; 0 marks the single-logit output
  int64_t kernel;
  int64_t stride;
  int64_t padding;
};

// 96 -> 48 -> 24 -> 12 -> 6 -> 3 -> 1
constexpr std::array<LayerSpec, DiscriminatorImpl::kLayers> kLayout{{
    {1, 3, 2, 1}, {1, 3, 1, 1},
    {2, 3, 2, 1}, {2, 3, 1, 1},
    {4, 3, 2, 1}, {4, 3, 1, 1},
    {8, 3, 2, 1}, {8, 3, 1, 1},
    {8, 3, 2, 1}, {8, 3, 1, 1},
    {8, 3, 1, 1}, {8, 3, 1, 0},
    {8, 1, 1, 0}, {0, 1, 1, 0},
}};

}  // namespace

DiscriminatorImpl::DiscriminatorImpl(DiscriminatorOptions options) : options_(options) {
  int64_t in = 3;
  for (size_t i = 0; i < kLayout.size(); ++i) {
    const auto& spec = kLayout[i];
    const int64_t out = spec.out_multiplier == 0 ? 1 : spec.out_multiplier * options_.base_channels;
    layers_.push_back(register_module(
        "conv" + std::to_string(i),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, spec.kernel).stride(spec.stride).padding(spec.padding))));
    in = out;
  }
}

torch::Tensor DiscriminatorImpl::logits(const torch::Tensor& frames) {
  require(frames.dim() == 4 && frames.size(1) == 3 && frames.size(2) == options_.input_size &&
              frames.size(3) == options_.input_size,
          "discriminator expects [B, 3, " + std::to_string(options_.input_size) + ", " +
              std::to_string(options_.input_size) + "] frames");
  auto x = frames;
  for (size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i]->forward(x);
    if (i + 1 < layers_.size()) x = torch::leaky_relu(x, options_.negative_slope);
  }
  return x.mean({1, 2, 3});
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& frames) { return torch::sigmoid(logits(frames)); }

torch::Tensor discriminator_forward(Discriminator& discriminator, const torch::Tensor& frames) {
  if (frames.dim() == 3) return discriminator->forward(frames.unsqueeze(0)).squeeze(0);
  return discriminator->forward(frames);
}

}  // namespace textface
