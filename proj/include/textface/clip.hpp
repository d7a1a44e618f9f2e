#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace textface {

inline constexpr int64_t kFrameSize = 96;
inline constexpr int64_t kSampleRate = 16000;
inline constexpr int64_t kMelWindow = 800;
inline constexpr int64_t kMelHop = 200;
inline constexpr int64_t kMelBins = 80;
inline constexpr double kLogMelFloor = 1e-5;

// Audio/video correspondence used by the sync expert: one video frame spans
// four mel frames. Synthetic clips run at 20 fps so that 16000 / 200 / 20 = 4
// holds exactly.
inline constexpr int64_t kMelFramesPerVideoFrame = 4;
inline constexpr int64_t kSyncWindow = 5;
inline constexpr double kSyntheticFps = 20.0;

inline constexpr int64_t kMinClipFrames = 30;
inline constexpr int64_t kMaxClipFrames = 35;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

using Landmarks = std::vector<Point2>;

/// One aligned sample: frames, audio, caption tokens and optional ground truth.
///
/// Frames are stored as a float32 tensor of shape [N, 3, H, W] with values in
/// [0, 1]. Quantization to 8 bits only happens when frames are written to disk.
struct Clip {
  std::string id;
  torch::Tensor frames;
  std::vector<float> audio;  // mono, kSampleRate; empty when unavailable
  std::vector<int64_t> tokens;
  std::optional<std::vector<Landmarks>> landmarks;
  std::optional<int64_t> identity_id;
  double fps = kSyntheticFps;

  int64_t num_frames() const { return frames.defined() ? frames.size(0) : 0; }
  int64_t height() const { return frames.size(2); }
  int64_t width() const { return frames.size(3); }
};

/// Throws Error(InvalidInput) when a clip violates its structural invariants.
void validate(const Clip& clip);

struct AlignmentSpec {
  int64_t k = 0;              // reference frames
  int64_t m = 0;              // tokens 1..m pair with the reference frames
  int64_t num_tokens = 0;     // M
  int64_t num_generated = 0;  // N - k

  // Linguistic slice is tokens m+1..M (1-based), i.e. [m, M) 0-based.
  int64_t slice_begin() const { return m; }
  int64_t slice_length() const { return num_tokens - m; }
};

struct MelSpectrogram {
  torch::Tensor values;  // [frames, kMelBins] float32, natural-log magnitude
  int64_t sample_rate = kSampleRate;
  int64_t window = kMelWindow;
  int64_t hop = kMelHop;

  int64_t num_frames() const { return values.size(0); }
};

}  // namespace textface
