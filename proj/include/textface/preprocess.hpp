#pragma once

#include <textface/clip.hpp>

#include <functional>
#include <span>

namespace textface {

/// Axis-aligned face box in pixel units; (x, y) is the top-left corner.
struct FaceBox {
  int64_t x = 0;
  int64_t y = 0;
  int64_t width = 0;
  int64_t height = 0;
};

/// Injectable face detector. Synthetic clips carry exact boxes; real data may
/// plug in any external detector behind this signature.
using FaceDetector = std::function<FaceBox(const torch::Tensor& frame)>;

/// Detector that returns the whole frame.
FaceBox full_frame_box(const torch::Tensor& frame);

/// Crops `box` out of a [3, H, W] frame and bilinearly resizes it to
/// [3, out_size, out_size]. Values are clamped to [0, 1].
torch::Tensor crop_and_resize(const torch::Tensor& frame, const FaceBox& box,
                              int64_t out_size = kFrameSize);

/// Applies crop_and_resize to every frame of a [N, 3, H, W] tensor.
torch::Tensor crop_frames(const torch::Tensor& frames, const FaceDetector& detector,
                          int64_t out_size = kFrameSize);

/// Log-mel spectrogram of a 16 kHz waveform: Hann window of 800 samples,
/// hop 200, no centering, 80 HTK mel bands between 55 Hz and 7600 Hz.
/// Frame count is 1 + (num_samples - 800) / 200.
MelSpectrogram mel_spectrogram(std::span<const float> audio);

/// Number of mel frames produced for `num_samples` samples (0 if too short).
int64_t mel_frame_count(int64_t num_samples);

/// True iff 30 <= num_frames <= 35.
bool filter_clip(int64_t num_frames);
inline bool filter_clip(const Clip& clip) { return filter_clip(clip.num_frames()); }

/// Proportional text/frame split: m = round(M * k / N) clamped to [0, M - 1].
AlignmentSpec align_text(int64_t num_tokens, int64_t k, int64_t num_frames);

}  // namespace textface
