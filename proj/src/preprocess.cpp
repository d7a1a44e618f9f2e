#include <textface/preprocess.hpp>

#include <textface/error.hpp>

#include <cmath>
#include <numbers>

namespace textface {

namespace F = torch::nn::functional;

void validate(const Clip& clip) {
  require(clip.frames.defined() && clip.frames.dim() == 4 && clip.frames.size(1) == 3,
          "clip " + clip.id + ": frames must be [N, 3, H, W]");
  require(clip.num_frames() >= 1, "clip " + clip.id + ": needs at least one frame");
  require(!clip.tokens.empty(), "clip " + clip.id + ": caption has no tokens");
  if (clip.landmarks) {
    require(static_cast<int64_t>(clip.landmarks->size()) == clip.num_frames(),
            "clip " + clip.id + ": one landmark list per frame expected");
  }
}

FaceBox full_frame_box(const torch::Tensor& frame) {
  return {0, 0, frame.size(-1), frame.size(-2)};
}

torch::Tensor crop_and_resize(const torch::Tensor& frame, const FaceBox& box, int64_t out_size) {
  require(frame.dim() == 3 && frame.size(0) == 3, "crop_and_resize expects a [3, H, W] frame");
  require(box.width > 0 && box.height > 0, "degenerate face box (zero area)");
  require(box.x >= 0 && box.y >= 0 && box.x + box.width <= frame.size(2) &&
              box.y + box.height <= frame.size(1),
          "face box lies outside the frame");
  using torch::indexing::Slice;
  auto crop = frame.index({Slice(), Slice(box.y, box.y + box.height), Slice(box.x, box.x + box.width)})
                  .to(torch::kFloat32);
  if (box.width == out_size && box.height == out_size) return crop.clamp(0.0, 1.0).contiguous();
  auto resized = F::interpolate(crop.unsqueeze(0), F::InterpolateFuncOptions()
                                                       .size(std::vector<int64_t>{out_size, out_size})
                                                       .mode(torch::kBilinear)
                                                       .align_corners(false));
  return resized.squeeze(0).clamp(0.0, 1.0).contiguous();
}

torch::Tensor crop_frames(const torch::Tensor& frames, const FaceDetector& detector, int64_t out_size) {
  std::vector<torch::Tensor> out;
  out.reserve(frames.size(0));
  for (int64_t i = 0; i < frames.size(0); ++i) {
    auto frame = frames[i];
    out.push_back(crop_and_resize(frame, detector(frame), out_size));
  }
  return torch::stack(out);
}

int64_t mel_frame_count(int64_t num_samples) {
  if (num_samples < kMelWindow) return 0;
  return 1 + (num_samples - kMelWindow) / kMelHop;
}

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular HTK filterbank, [kMelBins, n_fft / 2 + 1].
torch::Tensor mel_filterbank() {
  constexpr double kFmin = 55.0;
  constexpr double kFmax = 7600.0;
  const int64_t n_bins = kMelWindow / 2 + 1;
  const double lo = hz_to_mel(kFmin);
  const double hi = hz_to_mel(kFmax);
  std::vector<double> edges(kMelBins + 2);
  for (int64_t i = 0; i < kMelBins + 2; ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / (kMelBins + 1));
  }
  auto bank = torch::zeros({kMelBins, n_bins}, torch::kFloat64);
  auto acc = bank.accessor<double, 2>();
  for (int64_t m = 0; m < kMelBins; ++m) {
    for (int64_t b = 0; b < n_bins; ++b) {
      const double hz = static_cast<double>(b) * kSampleRate / kMelWindow;
      const double up = (hz - edges[m]) / (edges[m + 1] - edges[m]);
      const double down = (edges[m + 2] - hz) / (edges[m + 2] - edges[m + 1]);
      acc[m][b] = std::max(0.0, std::min(up, down));
    }
  }
  return bank;
}

}  // namespace

MelSpectrogram mel_spectrogram(std::span<const float> audio) {
  const auto n = static_cast<int64_t>(audio.size());
  require(n >= kMelWindow, "waveform shorter than one mel window (800 samples)");
  static const torch::Tensor bank = mel_filterbank();
  static const torch::Tensor window = torch::hann_window(kMelWindow, /*periodic=*/true, torch::kFloat64);

  auto wave = torch::from_blob(const_cast<float*>(audio.data()), {n}, torch::kFloat32).to(torch::kFloat64);
  auto spec = torch::stft(wave, kMelWindow, kMelHop, kMelWindow, window, /*center=*/false,
                          /*pad_mode=*/"constant", /*normalized=*/false, /*onesided=*/true,
                          /*return_complex=*/true);
  auto magnitude = spec.abs();                    // [bins, frames]
  auto mel = torch::matmul(bank, magnitude);      // [mels, frames]
  auto log_mel = torch::log(torch::clamp_min(mel, kLogMelFloor)).transpose(0, 1).contiguous();

  MelSpectrogram out;
  out.values = log_mel.to(torch::kFloat32);
  return out;
}

bool filter_clip(int64_t num_frames) {
  return num_frames >= kMinClipFrames && num_frames <= kMaxClipFrames;
}

AlignmentSpec align_text(int64_t num_tokens, int64_t k, int64_t num_frames) {
  require(num_tokens >= 1, "caption must contain at least one token");
  require(k >= 1 && k < num_frames, "alignment requires 1 <= k < N");
  // round-half-up of M * k / N in integer arithmetic
  int64_t m = (2 * num_tokens * k + num_frames) / (2 * num_frames);
  m = std::clamp<int64_t>(m, 0, num_tokens - 1);
  return AlignmentSpec{k, m, num_tokens, num_frames - k};
}

}  // namespace textface
