#include <textface/encoders.hpp>

#include <textface/error.hpp>

namespace textface {

int64_t VisualEncoderOptions::output_size() const {
  int64_t size = input_size;
  for (auto s : strides) size = (size + s - 1) / s;
  return size;
}

VisualEncoderImpl::VisualEncoderImpl(VisualEncoderOptions options) : options_(std::move(options)) {
  require(!options_.channels.empty() && options_.channels.size() == options_.strides.size(),
          "visual encoder needs one stride per stage");
  require(options_.blocks_per_stage >= 1, "visual encoder needs at least one block per stage");
  require(options_.max_reference_frames >= 1, "max_reference_frames must be positive");
  blocks_ = torch::nn::Sequential();
  int64_t in = 3 * options_.max_reference_frames;
  for (size_t stage = 0; stage < options_.channels.size(); ++stage) {
    const int64_t out = options_.channels[stage];
    blocks_->push_back(ConvBlock(ConvBlockOptions(in, out).stride(options_.strides[stage])));
    for (int64_t b = 1; b < options_.blocks_per_stage; ++b) {
      blocks_->push_back(ConvBlock(ConvBlockOptions(out, out).residual(true)));
    }
    in = out;
  }
  register_module("blocks", blocks_);
}

torch::Tensor VisualEncoderImpl::forward(const torch::Tensor& reference_stack) {
  require(reference_stack.dim() == 4, "visual encoder expects [B, 3k, H, W]");
  require(reference_stack.size(2) == options_.input_size && reference_stack.size(3) == options_.input_size,
          "visual encoder expects " + std::to_string(options_.input_size) + "x" +
              std::to_string(options_.input_size) + " frames");
  const int64_t channels = reference_stack.size(1);
  require(channels % 3 == 0, "reference stack channels must be a multiple of 3");
  const int64_t k = channels / 3;
  require(k >= 1 && k <= options_.max_reference_frames, "reference frame count outside [1, k_max]");
  auto x = reference_stack;
  if (k < options_.max_reference_frames) {
    using torch::indexing::Slice;
    auto last = reference_stack.index({Slice(), Slice(channels - 3, channels)});
    x = torch::cat({reference_stack, last.repeat({1, options_.max_reference_frames - k, 1, 1})}, 1);
  }
  return blocks_->forward(x);
}

VisualFeatures encode_visual(VisualEncoder& encoder, const torch::Tensor& reference_stack) {
  return {encoder->forward(reference_stack), reference_stack.size(1) / 3};
}

HashEmbeddingProvider::HashEmbeddingProvider(int64_t vocab, int64_t width, uint64_t seed, bool sentence_level)
    : sentence_level_(sentence_level) {
  require(vocab >= 1 && width >= 1, "hash embedding needs positive vocab and width");
  auto generator = at::detail::createCPUGenerator(seed);
  table_ = at::randn({vocab, width}, generator, torch::TensorOptions().dtype(torch::kFloat32));
}

torch::Tensor HashEmbeddingProvider::embed(std::span<const int64_t> tokens) const {
  require(!tokens.empty(), "cannot embed an empty token sequence");
  std::vector<int64_t> rows;
  rows.reserve(tokens.size());
  const int64_t vocab = table_.size(0);
  for (auto t : tokens) rows.push_back(((t % vocab) + vocab) % vocab);
  auto out = table_.index_select(0, torch::tensor(rows, torch::kLong));
  return sentence_level_ ? out.mean(0, /*keepdim=*/true) : out;
}

std::string HashEmbeddingProvider::name() const {
  return sentence_level_ ? "hash-embedding-sentence" : "hash-embedding-token";
}

ProjectionImpl::ProjectionImpl(int64_t in_features, int64_t out_features) {
  require(in_features >= 1 && out_features >= 1, "projection widths must be positive");
  linear_ = register_module("linear", torch::nn::Linear(in_features, out_features));
}

torch::Tensor ProjectionImpl::forward(const torch::Tensor& x) { return linear_(x); }

void ProjectionImpl::init_identity() {
  require(linear_->weight.size(0) == linear_->weight.size(1), "identity init needs a square projection");
  torch::NoGradGuard guard;
  linear_->weight.copy_(torch::eye(linear_->weight.size(0), linear_->weight.options()));
  linear_->bias.zero_();
}

TextEncoderImpl::TextEncoderImpl(std::shared_ptr<const TextProvider> provider, int64_t d_model, TextKind kind)
    : provider_(std::move(provider)), kind_(kind) {
  require(provider_ != nullptr, "text encoder needs a provider", ErrorKind::EncoderUnavailable);
  projection_ = register_module("projection", Projection(provider_->width(), d_model));
}

TextFeatures TextEncoderImpl::forward(std::span<const int64_t> tokens) {
  require(!tokens.empty(), "text encoder received an empty token sequence");
  torch::Tensor states;
  try {
    states = provider_->embed(tokens);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::EncoderUnavailable, provider_->name() + ": " + e.what());
  }
  states = states.detach();
  if (kind_ == TextKind::Emotion && states.size(0) != 1) states = states.mean(0, /*keepdim=*/true);
  auto dtype = projection_->linear()->weight.scalar_type();
  return {projection_(states.to(dtype)), kind_};
}

TextFeatures encode_emotion(TextEncoder& encoder, std::span<const int64_t> caption) {
  require(encoder->kind() == TextKind::Emotion, "encode_emotion needs an emotion encoder");
  return encoder->forward(caption);
}

TextFeatures encode_linguistic(TextEncoder& encoder, std::span<const int64_t> slice) {
  require(encoder->kind() == TextKind::Linguistic, "encode_linguistic needs a linguistic encoder");
  return encoder->forward(slice);
}

}  // namespace textface
