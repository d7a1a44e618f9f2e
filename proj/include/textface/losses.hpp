#pragma once

#include <textface/decoder.hpp>
#include <textface/sync_expert.hpp>

namespace textface {

inline constexpr double kLossEps = 1e-7;
inline constexpr int64_t kPhaseBoundaryEpoch = 300;

struct LossWeights {
  double gen = 0.0;
  double syn = 0.0;
  double disc = 0.0;
  int64_t phase_boundary_epoch = kPhaseBoundaryEpoch;

  bool operator==(const LossWeights&) const = default;
};

/// (0.7, 0.09, 0.21) before epoch 300, (0.9, 0.03, 0.07) from epoch 300 on.
LossWeights schedule_weights(int64_t epoch);

struct LossReport {
  double gen = 0.0;
  double syn = 0.0;
  double disc = 0.0;
  double total = 0.0;
  LossWeights weights;
};

/// total = gen_w * gen + syn_w * syn + disc_w * disc. Throws Error(NonFinite)
/// naming the first non-finite term.
LossReport total_loss(double gen, double syn, double disc, const LossWeights& weights);

/// Differentiable counterpart of total_loss.
torch::Tensor weighted_total(const torch::Tensor& gen, const torch::Tensor& syn, const torch::Tensor& disc,
                             const LossWeights& weights);

/// Mean over frames of the per-frame mean absolute pixel difference.
/// Accepts [N, 3, H, W] or [B, N, 3, H, W]; `frame_mask` ([B, N] or [N], 1 =
/// real frame) excludes padded frames.
torch::Tensor gen_loss(const torch::Tensor& generated, const torch::Tensor& target,
                       const torch::Tensor& frame_mask = {});

/// Mean binary cross-entropy with predictions clamped to [eps, 1 - eps].
/// Label 1 marks generated frames and 0 ground truth.
torch::Tensor disc_loss(const torch::Tensor& predictions, const torch::Tensor& labels);

/// Mean of -log(score + eps) over every 5-frame window of the generated
/// frames. `generated` is [B, G, 3, H, W] holding frames first_frame ..
/// first_frame + G - 1; `mels` is [B, F, 80] with 4 mel frames per video frame.
/// Windows touching a masked frame are skipped.
torch::Tensor sync_loss(const torch::Tensor& generated, const torch::Tensor& mels, int64_t first_frame,
                        SyncExpert& expert, const torch::Tensor& frame_mask = {});

}  // namespace textface
