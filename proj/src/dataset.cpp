#include <textface/dataset.hpp>

#include <textface/error.hpp>
#include <textface/io.hpp>
#include <textface/preprocess.hpp>
#include <textface/tokenizer.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace textface {

namespace {

std::string frame_name(int64_t index) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%05lld.png", static_cast<long long>(index));
  return buffer;
}

}  // namespace

void write_clip(const Clip& clip, const fs::path& clip_dir) {
  validate(clip);
  fs::create_directories(clip_dir / "frames");
  for (int64_t i = 0; i < clip.num_frames(); ++i) {
    io::write_png(clip_dir / "frames" / frame_name(i), clip.frames[i]);
  }
  if (!clip.audio.empty()) io::write_wav(clip_dir / "audio.wav", clip.audio, kSampleRate);
  io::write_text_file(clip_dir / "caption.txt", ToyTokenizer{}.decode(clip.tokens) + "\n");
  if (clip.landmarks) {
    std::string lines;
    for (const auto& frame : *clip.landmarks) {
      nlohmann::json row = nlohmann::json::array();
      for (const auto& p : frame) row.push_back({p.x, p.y});
      lines += row.dump() + "\n";
    }
    io::write_text_file(clip_dir / "landmarks.jsonl", lines);
  }
  nlohmann::json meta{{"fps", clip.fps}};
  if (clip.identity_id) meta["identity_id"] = *clip.identity_id;
  io::write_text_file(clip_dir / "meta.json", meta.dump(2) + "\n");
}

Clip read_clip(const fs::path& clip_dir) {
  Clip clip;
  clip.id = clip_dir.filename().string();

  const auto caption_path = clip_dir / "caption.txt";
  if (!fs::exists(caption_path)) throw Error(ErrorKind::Io, clip.id + ": missing caption.txt");
  auto caption = io::read_text_file(caption_path);
  if (auto newline = caption.find('\n'); newline != std::string::npos) caption.resize(newline);
  clip.tokens = ToyTokenizer{}.encode(caption);

  const auto frames_dir = clip_dir / "frames";
  if (!fs::is_directory(frames_dir)) throw Error(ErrorKind::Io, clip.id + ": missing frames/");
  std::vector<fs::path> frame_paths;
  for (const auto& entry : fs::directory_iterator(frames_dir)) {
    if (entry.path().extension() == ".png") frame_paths.push_back(entry.path());
  }
  std::sort(frame_paths.begin(), frame_paths.end());
  if (frame_paths.empty()) throw Error(ErrorKind::Io, clip.id + ": no frames");
  std::vector<torch::Tensor> frames;
  for (const auto& path : frame_paths) {
    frames.push_back(io::read_png(path));
    if (frames.back().sizes() != frames.front().sizes()) {
      throw Error(ErrorKind::InvalidInput, clip.id + ": frames differ in size");
    }
  }
  clip.frames = torch::stack(frames);

  if (fs::exists(clip_dir / "audio.wav")) {
    auto wav = io::read_wav(clip_dir / "audio.wav");
    if (wav.sample_rate != kSampleRate) throw Error(ErrorKind::InvalidInput, clip.id + ": audio must be 16 kHz");
    clip.audio = std::move(wav.samples);
  }

  if (fs::exists(clip_dir / "landmarks.jsonl")) {
    std::istringstream lines(io::read_text_file(clip_dir / "landmarks.jsonl"));
    std::vector<Landmarks> all;
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      Landmarks frame;
      for (const auto& p : nlohmann::json::parse(line)) frame.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      all.push_back(std::move(frame));
    }
    clip.landmarks = std::move(all);
  }

  if (fs::exists(clip_dir / "meta.json")) {
    const auto meta = nlohmann::json::parse(io::read_text_file(clip_dir / "meta.json"));
    if (meta.contains("identity_id")) clip.identity_id = meta["identity_id"].get<int64_t>();
    if (meta.contains("fps")) clip.fps = meta["fps"].get<double>();
  }
  validate(clip);
  return clip;
}

DatasetReader::DatasetReader(const fs::path& root, const std::string& split, bool apply_filter)
    : apply_filter_(apply_filter) {
  const auto dir = root / split;
  if (!fs::is_directory(dir)) return;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) clip_dirs_.push_back(entry.path());
  }
  std::sort(clip_dirs_.begin(), clip_dirs_.end());
}

std::optional<Clip> DatasetReader::next() {
  while (cursor_ < clip_dirs_.size()) {
    const auto& dir = clip_dirs_[cursor_++];
    try {
      auto clip = read_clip(dir);
      if (apply_filter_ && !filter_clip(clip)) {
        ++filtered_;
        continue;
      }
      return clip;
    } catch (const std::exception& e) {
      diagnostics_.push_back(dir.filename().string() + ": " + e.what());
    }
  }
  return std::nullopt;
}

DatasetLoad load_dataset(const fs::path& root, const std::string& split, bool apply_filter) {
  DatasetReader reader(root, split, apply_filter);
  DatasetLoad out;
  while (auto clip = reader.next()) out.clips.push_back(std::move(*clip));
  out.warnings = reader.warning_count();
  out.filtered = reader.filtered_count();
  out.diagnostics = reader.diagnostics();
  return out;
}

}  // namespace textface
