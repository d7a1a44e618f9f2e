#include <textface/model.hpp>

#include <textface/error.hpp>
#include <textface/preprocess.hpp>

namespace textface {

ModelConfig ModelConfig::desk() {
  ModelConfig config;
  config.d_model = 128;
  config.encoder_channels = {16, 32, 64, 96, 128, 128};
  config.decoder_channels = {128, 96, 64, 32, 16, 16};
  config.emotion_width = 64;
  config.linguistic_width = 64;
  return config;
}

void ModelConfig::validate() const {
  require(max_reference_frames >= 1, "max_reference_frames must be positive");
  require(max_generated >= 1, "max_generated must be positive");
  require(d_model >= 1 && heads >= 1 && d_model % heads == 0, "d_model must be a positive multiple of heads");
  require(encoder_channels.size() == 6 && decoder_channels.size() == 6, "encoder and decoder need six stages each");
  require(encoder_channels.back() == d_model, "last encoder stage must have d_model channels");
  require(blocks_per_stage >= 1, "blocks_per_stage must be positive");
  require(vocab >= 1 && emotion_width >= 1 && linguistic_width >= 1, "text provider sizes must be positive");
}

TalkingFaceGeneratorImpl::TalkingFaceGeneratorImpl(ModelConfig config) : config_(std::move(config)) {
  config_.validate();

  VisualEncoderOptions encoder_options;
  encoder_options.max_reference_frames = config_.max_reference_frames;
  encoder_options.channels = config_.encoder_channels;
  encoder_options.blocks_per_stage = config_.blocks_per_stage;
  encoder_ = register_module("encoder", VisualEncoder(encoder_options));

  auto emotion_provider = std::make_shared<HashEmbeddingProvider>(config_.vocab, config_.emotion_width,
                                                                  config_.text_seed, /*sentence_level=*/true);
  auto linguistic_provider = std::make_shared<HashEmbeddingProvider>(config_.vocab, config_.linguistic_width,
                                                                     config_.text_seed + 1, /*sentence_level=*/false);
  emotion_ = register_module("emotion", TextEncoder(emotion_provider, config_.d_model, TextKind::Emotion));
  linguistic_ = register_module("linguistic", TextEncoder(linguistic_provider, config_.d_model, TextKind::Linguistic));

  fusion_ = register_module("fusion", MultiScaleFusion(config_.d_model, config_.heads, config_.flags));

  VisualDecoderOptions decoder_options;
  decoder_options.in_channels = 2 * config_.d_model;
  decoder_options.channels = config_.decoder_channels;
  decoder_options.blocks_per_stage = config_.blocks_per_stage;
  decoder_options.max_generated = config_.max_generated;
  decoder_ = register_module("decoder", VisualDecoder(decoder_options));
  set_flags(config_.flags);
}

GeneratorOutput TalkingFaceGeneratorImpl::forward(const torch::Tensor& reference_stack,
                                                  const std::vector<std::vector<int64_t>>& captions,
                                                  const std::vector<std::vector<int64_t>>& slices,
                                                  int64_t num_generated) {
  const auto batch = static_cast<size_t>(reference_stack.size(0));
  require(captions.size() == batch && slices.size() == batch, "one caption and slice per reference stack expected");

  auto visual = encode_visual(encoder_, reference_stack);
  std::vector<TextFeatures> emotion, linguistic;
  emotion.reserve(batch);
  linguistic.reserve(batch);
  for (size_t b = 0; b < batch; ++b) {
    emotion.push_back(encode_emotion(emotion_, captions[b]));
    linguistic.push_back(encode_linguistic(linguistic_, slices[b]));
  }
  auto fused = fuse_multiscale(fusion_, visual, emotion, linguistic);
  auto frames = decode_frames(decoder_, fused, num_generated).frames;
  return {frames, std::move(fused)};
}

void TalkingFaceGeneratorImpl::set_flags(FusionFlags flags) {
  config_.flags = flags;
  fusion_->set_flags(flags);
  // A text branch without its cross-attention never reaches the output.
  for (auto& p : emotion_->parameters()) p.set_requires_grad(flags.global_ca);
  for (auto& p : linguistic_->parameters()) p.set_requires_grad(flags.local_ca);
}

torch::Tensor stack_reference_frames(const torch::Tensor& frames, int64_t k) {
  require(frames.dim() == 4 && frames.size(1) == 3, "expected [N, 3, H, W] frames");
  require(k >= 1 && k <= frames.size(0), "reference count exceeds clip length");
  return frames.narrow(0, 0, k).reshape({3 * k, frames.size(2), frames.size(3)});
}

GeneratorOutput generate_for_clip(TalkingFaceGenerator& generator, const Clip& clip, int64_t k) {
  validate(clip);
  require(clip.height() == kFrameSize && clip.width() == kFrameSize, "clip frames must be preprocessed to 96x96");
  const int64_t n = clip.num_frames();
  require(k < n, "clip has no frames left to generate");
  const auto alignment = align_text(static_cast<int64_t>(clip.tokens.size()), k, n);
  std::vector<int64_t> slice(clip.tokens.begin() + alignment.slice_begin(), clip.tokens.end());
  auto reference = stack_reference_frames(clip.frames, k).unsqueeze(0);
  return generator->forward(reference, {clip.tokens}, {slice}, alignment.num_generated);
}

}  // namespace textface
