#pragma once

#include <textface/clip.hpp>
#include <textface/layers.hpp>

namespace textface {

struct SyncExpertOptions {
  int64_t embedding = 64;
  int64_t base_channels = 16;
  int64_t frame_size = kFrameSize;
};

/// Two-tower lip/audio correspondence model. The video tower sees the lower
/// half of a 5-frame window; the audio tower sees the aligned 20 x 80 mel
/// chunk. Both embeddings are unit-normalized and the score is (1 + cos) / 2.
class SyncExpertImpl : public torch::nn::Module {
 public:
  explicit SyncExpertImpl(SyncExpertOptions options = {});

  /// windows: [B, 5, 3, H, W] -> [B, embedding], unit norm.
  torch::Tensor embed_video(const torch::Tensor& windows);
  /// chunks: [B, 20, 80] -> [B, embedding], unit norm.
  torch::Tensor embed_audio(const torch::Tensor& chunks);
  /// Score in [0, 1] per batch item.
  torch::Tensor score(const torch::Tensor& windows, const torch::Tensor& chunks);

  bool ready() const { return ready_; }
  void set_ready(bool ready) { ready_ = ready; }

  /// Disables gradients for every parameter, switches to eval mode and marks the expert ready.
  void freeze();
  bool frozen() const { return frozen_; }

  const SyncExpertOptions& options() const { return options_; }

 private:
  SyncExpertOptions options_;
  torch::nn::Sequential video_{nullptr};
  torch::nn::Sequential audio_{nullptr};
  torch::nn::Linear video_head_{nullptr};
  torch::nn::Linear audio_head_{nullptr};
  bool ready_ = false;
  bool frozen_ = false;
};
TORCH_MODULE(SyncExpert);

/// Mel chunk paired with the 5-frame window starting at video frame `frame`.
torch::Tensor mel_chunk(const torch::Tensor& mel, int64_t frame);

/// Score for a single window ([5, 3, H, W] with [20, 80] chunk) or a batch.
/// Throws Error(ExpertNotReady) for an untrained expert.
torch::Tensor sync_expert_score(SyncExpert& expert, const torch::Tensor& windows, const torch::Tensor& chunks);

struct SyncPretrainOptions {
  int64_t steps = 1500;
  int64_t batch_size = 32;
  double learning_rate = 1e-3;
  uint64_t seed = 0;
  int64_t min_shift = kSyncWindow;
};

/// Contrastive pretraining on clips with aligned audio: matched windows are
/// labelled 1, windows paired with audio shifted by at least `min_shift`
/// frames are labelled 0. The returned expert is frozen.
SyncExpert pretrain_sync_expert(const std::vector<Clip>& clips, const SyncPretrainOptions& options,
                                const SyncExpertOptions& expert_options = {});

struct SyncValidation {
  int64_t pairs = 0;
  double matched_wins = 0.0;     // fraction of pairs where matched > shifted
  double mean_matched = 0.0;
  double mean_shifted = 0.0;
};

/// Compares every matched window against the same window with audio shifted
/// by `shift` frames.
SyncValidation validate_sync_expert(SyncExpert& expert, const std::vector<Clip>& clips, int64_t shift = kSyncWindow);

}  // namespace textface
