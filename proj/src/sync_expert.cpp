#include <textface/sync_expert.hpp>

#include <textface/error.hpp>
#include <textface/preprocess.hpp>

#include <random>

namespace textface {

namespace {

torch::nn::Sequential tower(int64_t in_channels, int64_t base, int64_t first_stride) {
  torch::nn::Sequential seq;
  seq->push_back(ConvBlock(ConvBlockOptions(in_channels, base).stride(first_stride)));
  seq->push_back(ConvBlock(ConvBlockOptions(base, 2 * base).stride(2)));
  seq->push_back(ConvBlock(ConvBlockOptions(2 * base, 4 * base).stride(2)));
  seq->push_back(ConvBlock(ConvBlockOptions(4 * base, 4 * base).stride(2)));
  seq->push_back(ConvBlock(ConvBlockOptions(4 * base, 4 * base).residual(true)));
  seq->push_back(torch::nn::AdaptiveAvgPool2d(torch::nn::AdaptiveAvgPool2dOptions({1, 1})));
  seq->push_back(torch::nn::Flatten());
  return seq;
}

constexpr int64_t kChunkFrames = kSyncWindow * kMelFramesPerVideoFrame;

struct Example {
  size_t clip;
  int64_t frame;
};

}  // namespace

SyncExpertImpl::SyncExpertImpl(SyncExpertOptions options) : options_(options) {
  video_ = register_module("video", tower(3 * kSyncWindow, options_.base_channels, 2));
  audio_ = register_module("audio", tower(1, options_.base_channels, 1));
  video_head_ = register_module("video_head", torch::nn::Linear(4 * options_.base_channels, options_.embedding));
  audio_head_ = register_module("audio_head", torch::nn::Linear(4 * options_.base_channels, options_.embedding));
}

torch::Tensor SyncExpertImpl::embed_video(const torch::Tensor& windows) {
  require(windows.dim() == 5 && windows.size(1) == kSyncWindow && windows.size(2) == 3,
          "sync expert expects [B, 5, 3, H, W] windows");
  const int64_t h = windows.size(3);
  auto lower = windows.narrow(3, h / 2, h - h / 2).flatten(1, 2);  // [B, 15, H/2, W]
  return torch::nn::functional::normalize(video_head_(video_->forward(lower)),
                                          torch::nn::functional::NormalizeFuncOptions().dim(1));
}

torch::Tensor SyncExpertImpl::embed_audio(const torch::Tensor& chunks) {
  require(chunks.dim() == 3 && chunks.size(1) == kChunkFrames && chunks.size(2) == kMelBins,
          "sync expert expects [B, 20, 80] mel chunks");
  return torch::nn::functional::normalize(audio_head_(audio_->forward(chunks.unsqueeze(1))),
                                          torch::nn::functional::NormalizeFuncOptions().dim(1));
}

torch::Tensor SyncExpertImpl::score(const torch::Tensor& windows, const torch::Tensor& chunks) {
  auto cosine = (embed_video(windows) * embed_audio(chunks)).sum(1);
  return (1.0 + cosine) * 0.5;
}

void SyncExpertImpl::freeze() {
  for (auto& p : parameters()) p.set_requires_grad(false);
  eval();
  frozen_ = true;
  ready_ = true;
}

torch::Tensor mel_chunk(const torch::Tensor& mel, int64_t frame) {
  const int64_t begin = frame * kMelFramesPerVideoFrame;
  require(frame >= 0 && begin + kChunkFrames <= mel.size(0), "mel spectrogram does not cover the sync window");
  return mel.narrow(0, begin, kChunkFrames);
}

torch::Tensor sync_expert_score(SyncExpert& expert, const torch::Tensor& windows, const torch::Tensor& chunks) {
  if (!expert->ready()) throw Error(ErrorKind::ExpertNotReady, "sync expert has not been trained or loaded");
  if (windows.dim() == 4) return expert->score(windows.unsqueeze(0), chunks.unsqueeze(0)).squeeze(0);
  return expert->score(windows, chunks);
}

SyncExpert pretrain_sync_expert(const std::vector<Clip>& clips, const SyncPretrainOptions& options,
                                const SyncExpertOptions& expert_options) {
  std::vector<torch::Tensor> mels;
  std::vector<Example> examples;
  for (size_t c = 0; c < clips.size(); ++c) {
    const auto& clip = clips[c];
    mels.push_back(clip.audio.size() >= static_cast<size_t>(kMelWindow) ? mel_spectrogram(clip.audio).values
                                                                         : torch::Tensor());
    if (!mels.back().defined()) continue;
    require(clip.height() == expert_options.frame_size && clip.width() == expert_options.frame_size,
            "sync expert pretraining needs cropped frames");
    const int64_t windows = std::min(clip.num_frames(), mels.back().size(0) / kMelFramesPerVideoFrame) - kSyncWindow + 1;
    for (int64_t j = 0; j < windows; ++j) {
      // Only windows that have a shifted partner inside the clip.
      if (j >= options.min_shift || j + options.min_shift < windows) examples.push_back({c, j});
    }
  }
  if (examples.size() < 2) {
    throw Error(ErrorKind::InsufficientData, "sync expert pretraining needs clips with aligned audio and at least " +
                                                 std::to_string(kSyncWindow + options.min_shift) + " frames");
  }

  torch::manual_seed(options.seed);
  SyncExpert expert(expert_options);
  expert->train();
  torch::optim::Adam optimizer(expert->parameters(), torch::optim::AdamOptions(options.learning_rate));
  std::mt19937_64 rng(options.seed);

  for (int64_t step = 0; step < options.steps; ++step) {
    std::vector<torch::Tensor> windows, chunks;
    std::vector<float> labels;
    for (int64_t b = 0; b < options.batch_size; ++b) {
      const auto& ex = examples[rng() % examples.size()];
      const auto& clip = clips[ex.clip];
      const auto& mel = mels[ex.clip];
      const int64_t count = std::min(clip.num_frames(), mel.size(0) / kMelFramesPerVideoFrame) - kSyncWindow + 1;
      int64_t audio_frame = ex.frame;
      const bool positive = (b % 2) == 0;
      if (!positive) {
        std::vector<int64_t> candidates;
        for (int64_t j = 0; j < count; ++j) {
          if (std::abs(j - ex.frame) >= options.min_shift) candidates.push_back(j);
        }
        audio_frame = candidates[rng() % candidates.size()];
      }
      windows.push_back(clip.frames.narrow(0, ex.frame, kSyncWindow));
      chunks.push_back(mel_chunk(mel, audio_frame));
      labels.push_back(positive ? 1.0f : 0.0f);
    }
    auto scores = expert->score(torch::stack(windows), torch::stack(chunks)).clamp(1e-7, 1.0 - 1e-7);
    auto target = torch::tensor(labels);
    auto loss = torch::binary_cross_entropy(scores, target);
    optimizer.zero_grad();
    loss.backward();
    optimizer.step();
  }
  expert->freeze();
  return expert;
}

SyncValidation validate_sync_expert(SyncExpert& expert, const std::vector<Clip>& clips, int64_t shift) {
  torch::NoGradGuard no_grad;
  SyncValidation out;
  double matched_sum = 0.0, shifted_sum = 0.0;
  int64_t wins = 0;
  for (const auto& clip : clips) {
    if (clip.audio.size() < static_cast<size_t>(kMelWindow)) continue;
    auto mel = mel_spectrogram(clip.audio).values;
    const int64_t count = std::min(clip.num_frames(), mel.size(0) / kMelFramesPerVideoFrame) - kSyncWindow + 1;
    if (count <= shift) continue;
    std::vector<torch::Tensor> windows, matched, shifted;
    for (int64_t j = 0; j < count; ++j) {
      const int64_t other = j + shift < count ? j + shift : j - shift;
      windows.push_back(clip.frames.narrow(0, j, kSyncWindow));
      matched.push_back(mel_chunk(mel, j));
      shifted.push_back(mel_chunk(mel, other));
    }
    auto w = torch::stack(windows);
    auto a = sync_expert_score(expert, w, torch::stack(matched));
    auto b = sync_expert_score(expert, w, torch::stack(shifted));
    wins += (a > b).sum().item<int64_t>();
    matched_sum += a.sum().item<double>();
    shifted_sum += b.sum().item<double>();
    out.pairs += count;
  }
  if (out.pairs > 0) {
    out.matched_wins = static_cast<double>(wins) / static_cast<double>(out.pairs);
    out.mean_matched = matched_sum / static_cast<double>(out.pairs);
    out.mean_shifted = shifted_sum / static_cast<double>(out.pairs);
  }
  return out;
}

}  // namespace textface
