#include <textface/io.hpp>

#include <textface/error.hpp>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace textface::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorKind::Io, "unexpected end of file");
  return value;
}

}  // namespace

void write_png(const fs::path& path, const torch::Tensor& frame) {
  require(frame.dim() == 3 && frame.size(0) == 3, "write_png expects a [3, H, W] frame");
  auto bytes = (frame.detach().to(torch::kFloat32).clamp(0.0, 1.0) * 255.0)
                   .round()
                   .to(torch::kUInt8)
                   .permute({1, 2, 0})
                   .flip({2})  // RGB -> BGR
                   .contiguous();
  cv::Mat image(static_cast<int>(bytes.size(0)), static_cast<int>(bytes.size(1)), CV_8UC3, bytes.data_ptr());
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), image)) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

torch::Tensor read_png(const fs::path& path) {
  cv::Mat image = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (image.empty()) throw Error(ErrorKind::Io, "cannot read image " + path.string());
  cv::cvtColor(image, image, cv::COLOR_BGR2RGB);
  auto tensor = torch::from_blob(image.data, {image.rows, image.cols, 3}, torch::kUInt8).clone();
  return tensor.permute({2, 0, 1}).to(torch::kFloat32).div(255.0).contiguous();
}

void write_wav(const fs::path& path, std::span<const float> samples, int64_t sample_rate) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  const auto data_bytes = static_cast<uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put<uint32_t>(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put<uint32_t>(out, 16);
  put<uint16_t>(out, 1);  // PCM
  put<uint16_t>(out, 1);  // mono
  put<uint32_t>(out, static_cast<uint32_t>(sample_rate));
  put<uint32_t>(out, static_cast<uint32_t>(sample_rate * 2));
  put<uint16_t>(out, 2);
  put<uint16_t>(out, 16);
  out.write("data", 4);
  put<uint32_t>(out, data_bytes);
  for (float s : samples) {
    const float clamped = std::clamp(s, -1.0f, 1.0f);
    put<int16_t>(out, static_cast<int16_t>(std::lround(clamped * 32767.0f)));
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

WavData read_wav(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0) throw Error(ErrorKind::Io, path.string() + ": not a RIFF file");
  get<uint32_t>(in);
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0) throw Error(ErrorKind::Io, path.string() + ": not a WAVE file");

  uint16_t channels = 0, bits = 0, format = 0;
  uint32_t rate = 0;
  while (in.read(tag, 4)) {
    const auto size = get<uint32_t>(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = get<uint16_t>(in);
      channels = get<uint16_t>(in);
      rate = get<uint32_t>(in);
      get<uint32_t>(in);
      get<uint16_t>(in);
      bits = get<uint16_t>(in);
      in.seekg(size - 16, std::ios::cur);
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (format != 1 || bits != 16 || channels == 0) {
        throw Error(ErrorKind::Io, path.string() + ": only 16-bit PCM is supported");
      }
      const size_t frames = size / (2u * channels);
      WavData wav;
      wav.sample_rate = rate;
      wav.samples.resize(frames);
      for (size_t i = 0; i < frames; ++i) {
        float sum = 0.0f;
        for (uint16_t c = 0; c < channels; ++c) sum += static_cast<float>(get<int16_t>(in)) / 32767.0f;
        wav.samples[i] = sum / channels;
      }
      return wav;
    } else {
      in.seekg(size + (size & 1u), std::ios::cur);
    }
  }
  throw Error(ErrorKind::Io, path.string() + ": missing data chunk");
}

void write_tensor_file(const fs::path& path, const torch::Tensor& tensor) {
  auto values = tensor.detach().to(torch::kFloat32).contiguous();
  nlohmann::json header{{"shape", values.sizes().vec()}, {"dtype", "float32"}};
  const std::string text = header.dump();
  std::ostringstream out(std::ios::binary);
  put<uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(values.data_ptr<float>()),
            static_cast<std::streamsize>(values.numel() * sizeof(float)));
  write_text_file(path, out.str());
}

torch::Tensor read_tensor_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  const auto length = get<uint64_t>(in);
  if (length > (1u << 20)) throw Error(ErrorKind::Io, path.string() + ": implausible header length");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  const auto header = nlohmann::json::parse(text);
  if (header.at("dtype") != "float32") throw Error(ErrorKind::Io, path.string() + ": unsupported dtype");
  const auto shape = header.at("shape").get<std::vector<int64_t>>();
  auto tensor = torch::empty(shape, torch::kFloat32);
  in.read(reinterpret_cast<char*>(tensor.data_ptr<float>()), static_cast<std::streamsize>(tensor.numel() * sizeof(float)));
  if (!in) throw Error(ErrorKind::Io, path.string() + ": truncated tensor data");
  return tensor;
}

void write_text_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto temporary = path;
  temporary += ".tmp";
  {
    std::ofstream out(temporary, std::ios::binary);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
      out.close();
      fs::remove(temporary);
      throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
  }
  fs::rename(temporary, path);
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace textface::io
