#include <textface/dataset.hpp>
#include <textface/error.hpp>
#include <textface/io.hpp>
#include <textface/preprocess.hpp>
#include <textface/synth.hpp>
#include <textface/tokenizer.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace fs = std::filesystem;
using namespace textface;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("textface_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Independent log-mel for one frame: direct DFT and a filterbank rebuilt from
// the HTK formula.
std::vector<double> reference_mel_frame(const std::vector<float>& audio, int64_t start) {
  const int64_t n = kMelWindow;
  std::vector<double> magnitude(n / 2 + 1);
  for (int64_t b = 0; b <= n / 2; ++b) {
    double re = 0, im = 0;
    for (int64_t t = 0; t < n; ++t) {
      const double w = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * t / n);
      const double x = audio[start + t] * w;
      re += x * std::cos(2 * std::numbers::pi * b * t / n);
      im -= x * std::sin(2 * std::numbers::pi * b * t / n);
    }
    magnitude[b] = std::hypot(re, im);
  }
  auto to_mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto to_hz = [](double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); };
  std::vector<double> out(kMelBins);
  for (int64_t m = 0; m < kMelBins; ++m) {
    const double lo = to_hz(to_mel(55.0) + (to_mel(7600.0) - to_mel(55.0)) * m / (kMelBins + 1.0));
    const double mid = to_hz(to_mel(55.0) + (to_mel(7600.0) - to_mel(55.0)) * (m + 1) / (kMelBins + 1.0));
    const double hi = to_hz(to_mel(55.0) + (to_mel(7600.0) - to_mel(55.0)) * (m + 2) / (kMelBins + 1.0));
    double energy = 0;
    for (int64_t b = 0; b <= n / 2; ++b) {
      const double hz = b * 16000.0 / n;
      double weight = 0;
      if (hz > lo && hz <= mid) weight = (hz - lo) / (mid - lo);
      if (hz > mid && hz < hi) weight = (hi - hz) / (hi - mid);
      energy += weight * magnitude[b];
    }
    out[m] = std::log(std::max(energy, 1e-5));
  }
  return out;
}

}  // namespace

TEST(CropAndResize, IdentityAtTargetSize) {
  auto frame = torch::rand({3, 96, 96});
  auto out = crop_and_resize(frame, full_frame_box(frame));
  EXPECT_TRUE(torch::equal(out, frame));
}

TEST(CropAndResize, UpscalesConstantCrop) {
  auto frame = torch::zeros({3, 120, 160});
  frame.index_put_({torch::indexing::Slice(), torch::indexing::Slice(10, 58), torch::indexing::Slice(20, 68)}, 0.25);
  auto out = crop_and_resize(frame, {20, 10, 48, 48});
  EXPECT_EQ(out.sizes(), (std::vector<int64_t>{3, 96, 96}));
  EXPECT_NEAR(out.min().item<double>(), 0.25, 1e-6);
  EXPECT_NEAR(out.max().item<double>(), 0.25, 1e-6);
}

TEST(CropAndResize, RejectsDegenerateBoxes) {
  auto frame = torch::rand({3, 64, 64});
  EXPECT_THROW(crop_and_resize(frame, {0, 0, 0, 10}), Error);
  EXPECT_THROW(crop_and_resize(frame, {40, 40, 30, 30}), Error);
}

TEST(MelSpectrogram, FrameCountMatchesWindowEnumeration) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int64_t> length(800, 1000000);
  for (int i = 0; i < 1000; ++i) {
    const int64_t n = length(rng);
    int64_t windows = 0;
    for (int64_t start = 0; start + kMelWindow <= n; start += kMelHop) ++windows;
    ASSERT_EQ(mel_frame_count(n), windows) << n;
  }
  EXPECT_EQ(mel_frame_count(799), 0);
}

TEST(MelSpectrogram, ShapeAndFloor) {
  std::vector<float> silence(16000, 0.0f);
  auto mel = mel_spectrogram(silence);
  EXPECT_EQ(mel.num_frames(), 77);
  EXPECT_EQ(mel.values.size(1), 80);
  EXPECT_NEAR(mel.values.max().item<double>(), std::log(1e-5), 1e-5);
  std::vector<float> short_audio(799, 0.1f);
  EXPECT_THROW(mel_spectrogram(short_audio), Error);
}

TEST(MelSpectrogram, MatchesDirectDft) {
  std::mt19937_64 rng(11);
  std::normal_distribution<float> noise(0.0f, 0.1f);
  std::vector<float> audio(1400);
  for (size_t t = 0; t < audio.size(); ++t) {
    audio[t] = 0.3f * std::sin(2.0f * std::numbers::pi_v<float> * 440.0f * t / 16000.0f) + noise(rng);
  }
  auto mel = mel_spectrogram(audio).values;
  ASSERT_EQ(mel.size(0), 4);
  for (int64_t f = 0; f < 4; ++f) {
    auto expected = reference_mel_frame(audio, f * kMelHop);
    for (int64_t m = 0; m < kMelBins; ++m) {
      EXPECT_NEAR(mel[f][m].item<double>(), expected[m], 1e-4) << f << "," << m;
    }
  }
}

TEST(FilterClip, AdmitsExactlyClosedInterval) {
  for (int64_t n = 0; n <= 100; ++n) EXPECT_EQ(filter_clip(n), n >= 30 && n <= 35) << n;
}

TEST(AlignText, Examples) {
  EXPECT_EQ(align_text(14, 5, 32).m, 2);
  EXPECT_EQ(align_text(10, 5, 30).m, 2);
  EXPECT_EQ(align_text(1, 5, 30).m, 0);
  EXPECT_EQ(align_text(14, 5, 32).num_generated, 27);
  EXPECT_THROW(align_text(0, 5, 30), Error);
  EXPECT_THROW(align_text(5, 30, 30), Error);
}

TEST(AlignText, SliceNonEmptyAndEndsAtLastToken) {
  for (int64_t m_tokens = 1; m_tokens <= 40; ++m_tokens) {
    for (int64_t n = 2; n <= 40; ++n) {
      for (int64_t k = 1; k < n; ++k) {
        auto a = align_text(m_tokens, k, n);
        ASSERT_GE(a.slice_length(), 1);
        ASSERT_EQ(a.slice_begin() + a.slice_length(), m_tokens);
        const auto rounded = static_cast<int64_t>(std::floor(static_cast<double>(m_tokens) * k / n + 0.5 + 1e-12));
        ASSERT_EQ(a.m, std::min(rounded, m_tokens - 1));
      }
    }
  }
}

TEST(Tokenizer, RoundTripAndUnknownWords) {
  ToyTokenizer tok;
  auto ids = tok.encode("ba mo ti  ne");
  EXPECT_EQ(ids.size(), 4u);
  EXPECT_EQ(tok.decode(ids), "ba mo ti ne");
  auto unknown = tok.encode("hello");
  ASSERT_EQ(unknown.size(), 1u);
  EXPECT_GE(unknown[0], 0);
  EXPECT_LT(unknown[0], ToyTokenizer::kVocabSize);
  EXPECT_EQ(tok.encode("hello"), unknown);
}

TEST(Synth, DeterministicAndConsistent) {
  auto a = synth_clip(5);
  auto b = synth_clip(5);
  EXPECT_TRUE(torch::equal(a.frames, b.frames));
  EXPECT_EQ(a.audio, b.audio);
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_EQ(a.num_frames(), 32);
  EXPECT_EQ(static_cast<int64_t>(a.audio.size()), 800 * 32 + 600);
  EXPECT_EQ(mel_frame_count(static_cast<int64_t>(a.audio.size())), 4 * 32);
  ASSERT_TRUE(a.landmarks.has_value());
  EXPECT_EQ((*a.landmarks)[0].size(), kLandmarkCount);
  auto c = synth_clip(6);
  EXPECT_FALSE(torch::equal(a.frames, c.frames));
}

TEST(Synth, MouthFollowsCaption) {
  SynthConfig config;
  config.caption = {0, 5, 0, 5, 0, 5, 0, 5};
  auto clip = synth_clip(1, config);
  for (int64_t f = 0; f < clip.num_frames(); ++f) {
    const auto token = config.caption[token_index_for_frame(f, clip.num_frames(), 8)];
    EXPECT_NEAR(mouth_gap((*clip.landmarks)[f]), mouth_opening(token, config), 1e-9);
  }
}

TEST(Io, PngRoundTripQuantizes) {
  auto dir = scratch("png");
  auto frame = torch::rand({3, 20, 30});
  io::write_png(dir / "a.png", frame);
  auto back = io::read_png(dir / "a.png");
  EXPECT_EQ(back.sizes(), frame.sizes());
  EXPECT_LE((back - frame).abs().max().item<double>(), 0.5 / 255.0 + 1e-6);
}

TEST(Io, WavRoundTrip) {
  auto dir = scratch("wav");
  std::vector<float> samples{0.0f, 0.5f, -0.5f, 0.25f};
  io::write_wav(dir / "a.wav", samples, 16000);
  auto back = io::read_wav(dir / "a.wav");
  EXPECT_EQ(back.sample_rate, 16000);
  ASSERT_EQ(back.samples.size(), samples.size());
  for (size_t i = 0; i < samples.size(); ++i) EXPECT_NEAR(back.samples[i], samples[i], 1.0 / 32767);
}

TEST(Io, TensorFileRoundTrip) {
  auto dir = scratch("tensor");
  auto t = torch::randn({2, 3, 4});
  io::write_tensor_file(dir / "t.bin", t);
  EXPECT_TRUE(torch::equal(io::read_tensor_file(dir / "t.bin"), t));
}

TEST(Dataset, EmptyRootYieldsNothing) {
  auto dir = scratch("empty");
  EXPECT_TRUE(load_dataset(dir, "train").clips.empty());
}

TEST(Dataset, ReadsOneValidClip) {
  auto dir = scratch("one");
  auto clip = synth_clip(2);
  write_clip(clip, dir / "train" / "clip_a");
  auto load = load_dataset(dir, "train");
  ASSERT_EQ(load.clips.size(), 1u);
  const auto& back = load.clips[0];
  EXPECT_EQ(back.id, "clip_a");
  EXPECT_EQ(back.tokens, clip.tokens);
  EXPECT_EQ(back.num_frames(), 32);
  EXPECT_EQ(back.identity_id, clip.identity_id);
  ASSERT_TRUE(back.landmarks.has_value());
  EXPECT_EQ(*back.landmarks, *clip.landmarks);
  EXPECT_LE((back.frames - clip.frames).abs().max().item<double>(), 0.5 / 255.0 + 1e-6);
  EXPECT_EQ(back.audio.size(), clip.audio.size());
}

TEST(Dataset, MissingCaptionIsSkippedWithWarning) {
  auto dir = scratch("missing");
  write_clip(synth_clip(3), dir / "train" / "a");
  write_clip(synth_clip(4), dir / "train" / "b");
  fs::remove(dir / "train" / "a" / "caption.txt");
  auto load = load_dataset(dir, "train");
  ASSERT_EQ(load.clips.size(), 1u);
  EXPECT_EQ(load.clips[0].id, "b");
  EXPECT_EQ(load.warnings, 1);
}

TEST(Dataset, FiltersByLengthAndSortsByName) {
  auto dir = scratch("filter");
  SynthConfig short_config;
  short_config.num_frames = 20;
  write_clip(synth_clip(1, short_config), dir / "train" / "c");
  write_clip(synth_clip(2), dir / "train" / "b");
  write_clip(synth_clip(3), dir / "train" / "a");
  auto load = load_dataset(dir, "train");
  ASSERT_EQ(load.clips.size(), 2u);
  EXPECT_EQ(load.clips[0].id, "a");
  EXPECT_EQ(load.clips[1].id, "b");
  EXPECT_EQ(load.filtered, 1);
  EXPECT_EQ(load.warnings, 0);
}
