#include <textface/decoder.hpp>

#include <textface/error.hpp>

namespace textface {

namespace F = torch::nn::functional;

VisualDecoderImpl::VisualDecoderImpl(VisualDecoderOptions options) : options_(std::move(options)) {
  require(!options_.channels.empty() && options_.channels.size() == options_.strides.size(),
          "visual decoder needs one stride per stage");
  require(options_.max_generated >= 1, "decoder must generate at least one frame");
  blocks_ = torch::nn::Sequential();
  int64_t in = options_.in_channels;
  for (size_t stage = 0; stage < options_.channels.size(); ++stage) {
    const int64_t out = options_.channels[stage];
    blocks_->push_back(ConvBlock(ConvBlockOptions(in, out).stride(options_.strides[stage]).transpose(true)));
    for (int64_t b = 1; b < options_.blocks_per_stage; ++b) {
      blocks_->push_back(ConvBlock(ConvBlockOptions(out, out).residual(true)));
    }
    in = out;
  }
  register_module("blocks", blocks_);
  head_ = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, 3 * options_.max_generated, 1)));
}

torch::Tensor VisualDecoderImpl::forward(const torch::Tensor& fused, int64_t num_generated) {
  require(fused.dim() == 4 && fused.size(1) == options_.in_channels, "decoder input channel count mismatch");
  require(num_generated >= 1 && num_generated <= options_.max_generated,
          "N_gen must lie in [1, " + std::to_string(options_.max_generated) + "]");
  auto features = blocks_->forward(fused);
  auto weight = head_->weight.narrow(0, 0, 3 * num_generated);
  auto bias = head_->bias.narrow(0, 0, 3 * num_generated);
  auto logits = F::conv2d(features, weight, F::Conv2dFuncOptions().bias(bias));
  const int64_t batch = fused.size(0);
  return torch::sigmoid(logits).reshape({batch, num_generated, 3, logits.size(2), logits.size(3)});
}

GeneratedFrames decode_frames(VisualDecoder& decoder, const FusedFeatures& fused, int64_t num_generated) {
  return {decoder->forward(fused.concat, num_generated)};
}

}  // namespace textface
