#pragma once

#include <textface/clip.hpp>

#include <array>

namespace textface {

/// Procedural talking-face scene parameters.
struct SynthConfig {
  int64_t num_frames = 32;
  int64_t size = kFrameSize;
  int64_t caption_length = 14;
  int64_t mouth_levels = 6;     // token id % mouth_levels selects the opening level
  double max_opening = 20.0;    // mouth gap in pixels at 96 px resolution
  int64_t identity = -1;        // < 0 derives the identity from the seed
  std::vector<int64_t> caption; // explicit token ids; empty draws a random caption
};

/// Per-identity appearance, fully determined by the identity id.
struct FaceGeometry {
  std::array<float, 3> background{};
  std::array<float, 3> skin{};
  std::array<float, 3> lip{};
  double center_x = 0, center_y = 0;
  double radius_x = 0, radius_y = 0;
  double eye_spacing = 0, eye_radius = 0;
  double mouth_half_width = 0;
  double mouth_rest_y = 0;      // mouth center when closed
};

// Landmark layout emitted per frame.
inline constexpr size_t kLeftEye = 0;
inline constexpr size_t kRightEye = 1;
inline constexpr size_t kOuterLipBegin = 2;
inline constexpr size_t kOuterLipCount = 12;
inline constexpr size_t kInnerLipBegin = kOuterLipBegin + kOuterLipCount;
inline constexpr size_t kInnerLipCount = 8;
inline constexpr size_t kLandmarkCount = kInnerLipBegin + kInnerLipCount;
inline constexpr double kLipThickness = 2.0;

FaceGeometry face_geometry(int64_t identity, int64_t size = kFrameSize);

/// Mouth opening (pixels) selected by a token.
double mouth_opening(int64_t token, const SynthConfig& config);

/// Analytic landmarks for a face with the given mouth opening.
Landmarks face_landmarks(const FaceGeometry& geometry, double opening);

/// Renders one [3, size, size] frame.
torch::Tensor render_face(const FaceGeometry& geometry, double opening, int64_t size);

/// Vertical distance between the inner-lip midpoints.
double mouth_gap(const Landmarks& landmarks);

/// Lip landmarks only (outer then inner contour).
std::vector<Point2> lip_points(const Landmarks& landmarks);

/// Distance between the two eye centers.
double inter_ocular_distance(const Landmarks& landmarks);

/// Token index spoken during `frame` (proportional timing over the clip).
int64_t token_index_for_frame(int64_t frame, int64_t num_frames, int64_t num_tokens);

/// Deterministic synthetic clip: procedural face whose mouth follows the
/// caption, analytic landmarks, identity label and a waveform whose per-frame
/// energy tracks the mouth opening. Audio holds 800 * N + 600 samples so the
/// mel spectrogram has exactly 4 * N frames.
Clip synth_clip(uint64_t seed, const SynthConfig& config = {});

}  // namespace textface
