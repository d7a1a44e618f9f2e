#include <textface/losses.hpp>

#include <textface/error.hpp>

#include <cmath>

namespace textface {

LossWeights schedule_weights(int64_t epoch) {
  require(epoch >= 0, "epoch must be nonnegative");
  if (epoch < kPhaseBoundaryEpoch) return {0.7, 0.09, 0.21, kPhaseBoundaryEpoch};
  return {0.9, 0.03, 0.07, kPhaseBoundaryEpoch};
}

LossReport total_loss(double gen, double syn, double disc, const LossWeights& weights) {
  auto check = [](double value, const char* name) {
    if (!std::isfinite(value)) throw Error(ErrorKind::NonFinite, std::string("non-finite loss term: ") + name);
  };
  check(gen, "gen");
  check(syn, "syn");
  check(disc, "disc");
  LossReport report{gen, syn, disc, 0.0, weights};
  report.total = weights.gen * gen + weights.syn * syn + weights.disc * disc;
  return report;
}

torch::Tensor weighted_total(const torch::Tensor& gen, const torch::Tensor& syn, const torch::Tensor& disc,
                             const LossWeights& weights) {
  return gen * weights.gen + syn * weights.syn + disc * weights.disc;
}

torch::Tensor gen_loss(const torch::Tensor& generated, const torch::Tensor& target, const torch::Tensor& frame_mask) {
  require(generated.sizes() == target.sizes(), "generated and target frames differ in shape");
  require(generated.dim() == 4 || generated.dim() == 5, "gen_loss expects [N, 3, H, W] or [B, N, 3, H, W]");
  const int64_t frame_dims = generated.dim() - 3;
  std::vector<int64_t> pixel_dims{frame_dims, frame_dims + 1, frame_dims + 2};
  auto per_frame = (generated - target).abs().mean(pixel_dims);
  if (!frame_mask.defined()) return per_frame.mean();
  require(frame_mask.sizes() == per_frame.sizes(), "frame mask does not match the frame layout");
  auto mask = frame_mask.to(per_frame.dtype());
  const auto valid = mask.sum();
  require(valid.item<double>() > 0.0, "frame mask excludes every frame");
  return (per_frame * mask).sum() / valid;
}

torch::Tensor disc_loss(const torch::Tensor& predictions, const torch::Tensor& labels) {
  require(predictions.sizes() == labels.sizes(), "predictions and labels differ in shape");
  require(predictions.numel() > 0, "disc_loss needs at least one prediction");
  auto p = predictions.clamp(kLossEps, 1.0 - kLossEps);
  auto y = labels.to(p.dtype());
  return -(y * torch::log(p) + (1.0 - y) * torch::log(1.0 - p)).mean();
}

torch::Tensor sync_loss(const torch::Tensor& generated, const torch::Tensor& mels, int64_t first_frame,
                        SyncExpert& expert, const torch::Tensor& frame_mask) {
  require(generated.dim() == 5, "sync_loss expects [B, G, 3, H, W] frames");
  require(mels.dim() == 3 && mels.size(0) == generated.size(0) && mels.size(2) == kMelBins,
          "sync_loss expects [B, F, 80] mel spectrograms");
  const int64_t batch = generated.size(0);
  const int64_t count = generated.size(1);
  require(count >= kSyncWindow, "sync loss needs at least 5 generated frames");
  require((first_frame + count) * kMelFramesPerVideoFrame <= mels.size(1),
          "mel spectrogram does not cover the generated frames");
  if (!expert->ready()) throw Error(ErrorKind::ExpertNotReady, "sync expert has not been trained or loaded");

  std::vector<torch::Tensor> windows, chunks;
  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t i = 0; i + kSyncWindow <= count; ++i) {
      if (frame_mask.defined() && frame_mask[b].narrow(0, i, kSyncWindow).min().item<double>() <= 0.0) continue;
      windows.push_back(generated[b].narrow(0, i, kSyncWindow));
      chunks.push_back(mel_chunk(mels[b], first_frame + i));
    }
  }
  require(!windows.empty(), "no unmasked sync window available");
  auto scores = expert->score(torch::stack(windows), torch::stack(chunks).to(generated.dtype()));
  return -torch::log(scores + kLossEps).mean();
}

}  // namespace textface
