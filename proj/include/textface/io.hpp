#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <span>
#include <vector>

namespace textface::io {

namespace fs = std::filesystem;

/// Writes a [3, H, W] float frame in [0, 1] as 8-bit RGB PNG.
void write_png(const fs::path& path, const torch::Tensor& frame);

/// Reads an RGB (or gray) PNG as a [3, H, W] float32 tensor in [0, 1].
torch::Tensor read_png(const fs::path& path);

/// 16-bit PCM mono WAV.
void write_wav(const fs::path& path, std::span<const float> samples, int64_t sample_rate);

struct WavData {
  std::vector<float> samples;
  int64_t sample_rate = 0;
};

/// Reads 16-bit PCM WAV; multi-channel input is averaged to mono.
WavData read_wav(const fs::path& path);

/// Binary tensor container: u64 little-endian header length, a JSON header
/// {"shape": [...], "dtype": "float32"}, then raw little-endian values.
void write_tensor_file(const fs::path& path, const torch::Tensor& tensor);
torch::Tensor read_tensor_file(const fs::path& path);

/// Writes `contents` atomically (temporary file + rename).
void write_text_file(const fs::path& path, const std::string& contents);
std::string read_text_file(const fs::path& path);

}  // namespace textface::io
