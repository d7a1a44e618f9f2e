#include <textface/synth.hpp>

#include <textface/error.hpp>
#include <textface/tokenizer.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace textface {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  // Fixed 53-bit mapping; std::uniform_real_distribution is not pinned across libraries.
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

// Anti-aliased ellipse coverage with roughly one pixel of transition.
float coverage(double x, double y, double cx, double cy, double rx, double ry) {
  if (rx <= 0.0 || ry <= 0.0) return 0.0f;
  const double dx = (x - cx) / rx;
  const double dy = (y - cy) / ry;
  const double d = std::sqrt(dx * dx + dy * dy);
  const double a = 0.5 - (d - 1.0) * std::min(rx, ry);
  return static_cast<float>(std::clamp(a, 0.0, 1.0));
}

void blend(std::array<float, 3>& pixel, const std::array<float, 3>& color, float alpha) {
  for (size_t c = 0; c < 3; ++c) pixel[c] = pixel[c] * (1.0f - alpha) + color[c] * alpha;
}

constexpr std::array<float, 3> kEyeColor{0.10f, 0.10f, 0.15f};
constexpr std::array<float, 3> kMouthInterior{0.08f, 0.02f, 0.04f};

}  // namespace

FaceGeometry face_geometry(int64_t identity, int64_t size) {
  std::mt19937_64 rng(0x5eedfaceull + static_cast<uint64_t>(identity) * 7919ull);
  const double s = static_cast<double>(size) / kFrameSize;
  FaceGeometry g;
  for (auto& c : g.background) c = static_cast<float>(uniform(rng, 0.10, 0.40));
  for (auto& c : g.skin) c = static_cast<float>(uniform(rng, 0.50, 0.90));
  g.lip = {static_cast<float>(uniform(rng, 0.50, 0.80)), static_cast<float>(uniform(rng, 0.10, 0.25)),
           static_cast<float>(uniform(rng, 0.15, 0.30))};
  g.center_x = s * (48.0 + uniform(rng, -3.0, 3.0));
  g.center_y = s * (44.0 + uniform(rng, -3.0, 3.0));
  g.radius_x = s * uniform(rng, 28.0, 33.0);
  g.radius_y = s * uniform(rng, 33.0, 38.0);
  g.eye_spacing = s * uniform(rng, 12.0, 16.0);
  g.eye_radius = s * uniform(rng, 3.0, 4.5);
  g.mouth_half_width = s * uniform(rng, 15.0, 19.0);
  g.mouth_rest_y = g.center_y + 0.45 * g.radius_y;
  return g;
}

double mouth_opening(int64_t token, const SynthConfig& config) {
  const int64_t levels = std::max<int64_t>(config.mouth_levels, 2);
  const int64_t level = ((token % levels) + levels) % levels;
  const double scale = static_cast<double>(config.size) / kFrameSize;
  return scale * config.max_opening * static_cast<double>(level) / static_cast<double>(levels - 1);
}

Landmarks face_landmarks(const FaceGeometry& g, double opening) {
  Landmarks points(kLandmarkCount);
  const double eye_y = g.center_y - 10.0 * g.radius_y / 35.5;
  points[kLeftEye] = {g.center_x - g.eye_spacing, eye_y};
  points[kRightEye] = {g.center_x + g.eye_spacing, eye_y};
  const double mouth_y = g.mouth_rest_y + 0.25 * opening;
  const double outer_h = 0.5 * opening + kLipThickness;
  for (size_t i = 0; i < kOuterLipCount; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / kOuterLipCount;
    points[kOuterLipBegin + i] = {g.center_x + g.mouth_half_width * std::cos(t), mouth_y - outer_h * std::sin(t)};
  }
  for (size_t i = 0; i < kInnerLipCount; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / kInnerLipCount;
    points[kInnerLipBegin + i] = {g.center_x + 0.8 * g.mouth_half_width * std::cos(t),
                                  mouth_y - 0.5 * opening * std::sin(t)};
  }
  return points;
}

torch::Tensor render_face(const FaceGeometry& g, double opening, int64_t size) {
  auto frame = torch::empty({3, size, size}, torch::kFloat32);
  auto acc = frame.accessor<float, 3>();
  const double eye_y = g.center_y - 10.0 * g.radius_y / 35.5;
  const double mouth_y = g.mouth_rest_y + 0.25 * opening;
  for (int64_t row = 0; row < size; ++row) {
    const double y = static_cast<double>(row) + 0.5;
    // the jaw drops with the mouth: lower half of the head stretches
    const double head_ry = y < g.center_y ? g.radius_y : g.radius_y + 0.5 * opening;
    for (int64_t col = 0; col < size; ++col) {
      const double x = static_cast<double>(col) + 0.5;
      std::array<float, 3> px = g.background;
      blend(px, g.skin, coverage(x, y, g.center_x, g.center_y, g.radius_x, head_ry));
      blend(px, kEyeColor, coverage(x, y, g.center_x - g.eye_spacing, eye_y, g.eye_radius, 0.8 * g.eye_radius));
      blend(px, kEyeColor, coverage(x, y, g.center_x + g.eye_spacing, eye_y, g.eye_radius, 0.8 * g.eye_radius));
      blend(px, g.lip, coverage(x, y, g.center_x, mouth_y, g.mouth_half_width, 0.5 * opening + kLipThickness));
      if (opening > 0.0) {
        blend(px, kMouthInterior, coverage(x, y, g.center_x, mouth_y, 0.8 * g.mouth_half_width, 0.5 * opening));
      }
      for (int64_t c = 0; c < 3; ++c) acc[c][row][col] = px[static_cast<size_t>(c)];
    }
  }
  return frame;
}

double mouth_gap(const Landmarks& landmarks) {
  require(landmarks.size() == kLandmarkCount, "unexpected landmark layout");
  const auto& top = landmarks[kInnerLipBegin + kInnerLipCount / 4];
  const auto& bottom = landmarks[kInnerLipBegin + 3 * kInnerLipCount / 4];
  return std::hypot(top.x - bottom.x, top.y - bottom.y);
}

std::vector<Point2> lip_points(const Landmarks& landmarks) {
  require(landmarks.size() == kLandmarkCount, "unexpected landmark layout");
  return {landmarks.begin() + kOuterLipBegin, landmarks.end()};
}

double inter_ocular_distance(const Landmarks& landmarks) {
  require(landmarks.size() == kLandmarkCount, "unexpected landmark layout");
  const auto& l = landmarks[kLeftEye];
  const auto& r = landmarks[kRightEye];
  return std::hypot(r.x - l.x, r.y - l.y);
}

int64_t token_index_for_frame(int64_t frame, int64_t num_frames, int64_t num_tokens) {
  return std::min(num_tokens - 1, frame * num_tokens / num_frames);
}

Clip synth_clip(uint64_t seed, const SynthConfig& config) {
  require(config.num_frames >= 1, "synthetic clip needs at least one frame");
  require(config.size >= 16, "synthetic frame size too small");
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull);

  Clip clip;
  clip.id = "synth_" + std::to_string(seed);
  clip.fps = kSyntheticFps;
  const int64_t identity = config.identity >= 0 ? config.identity : static_cast<int64_t>(seed % 1000);
  clip.identity_id = identity;

  if (!config.caption.empty()) {
    for (auto t : config.caption) require(t >= 0 && t < ToyTokenizer::kVocabSize, "caption token outside vocabulary");
    clip.tokens = config.caption;
  } else {
    require(config.caption_length >= 1, "caption_length must be positive");
    for (int64_t i = 0; i < config.caption_length; ++i) {
      clip.tokens.push_back(static_cast<int64_t>(rng() % ToyTokenizer::kVocabSize));
    }
  }

  const auto geometry = face_geometry(identity, config.size);
  const int64_t n = config.num_frames;
  const auto m = static_cast<int64_t>(clip.tokens.size());
  std::vector<double> openings(n);
  std::vector<int64_t> frame_tokens(n);
  std::vector<torch::Tensor> frames;
  std::vector<Landmarks> landmarks;
  for (int64_t f = 0; f < n; ++f) {
    frame_tokens[f] = clip.tokens[token_index_for_frame(f, n, m)];
    openings[f] = mouth_opening(frame_tokens[f], config);
    frames.push_back(render_face(geometry, openings[f], config.size));
    landmarks.push_back(face_landmarks(geometry, openings[f]));
  }
  clip.frames = torch::stack(frames);
  clip.landmarks = std::move(landmarks);

  // Voiced waveform: amplitude follows the mouth opening, pitch follows the token.
  const int64_t per_frame = kMelHop * kMelFramesPerVideoFrame;
  const int64_t total = per_frame * n + (kMelWindow - kMelHop);
  clip.audio.resize(static_cast<size_t>(total));
  const double full = std::max(1e-9, config.max_opening * static_cast<double>(config.size) / kFrameSize);
  auto frame_amp = [&](int64_t f) { return 0.02 + 0.6 * openings[std::clamp<int64_t>(f, 0, n - 1)] / full; };
  double phase = 0.0;
  for (int64_t i = 0; i < total; ++i) {
    const int64_t f = std::min(n - 1, i / per_frame);
    const int64_t offset = i - f * per_frame;
    // ramp between frame amplitudes over the first hop of every frame
    const double ramp = std::min(1.0, static_cast<double>(offset) / kMelHop);
    const double amp = frame_amp(f - 1) + (frame_amp(f) - frame_amp(f - 1)) * ramp;
    const double pitch = 110.0 + 15.0 * static_cast<double>(frame_tokens[f] % 16);
    phase += 2.0 * std::numbers::pi * pitch / kSampleRate;
    const double voiced = (std::sin(phase) + 0.4 * std::sin(2.0 * phase) + 0.2 * std::sin(3.0 * phase)) / 1.6;
    const double noise = uniform(rng, -0.005, 0.005);
    clip.audio[static_cast<size_t>(i)] = static_cast<float>(amp * voiced + noise);
  }
  return clip;
}

}  // namespace textface
