#pragma once

#include <textface/clip.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace textface {

namespace fs = std::filesystem;

/// Writes a clip in the on-disk layout:
///   <dir>/frames/%05d.png, audio.wav, caption.txt, landmarks.jsonl (optional),
///   meta.json (identity_id, fps; optional).
void write_clip(const Clip& clip, const fs::path& clip_dir);

/// Reads one clip directory. Throws Error(Io) or Error(InvalidInput) when the
/// directory is malformed.
Clip read_clip(const fs::path& clip_dir);

/// Streams `<root>/<split>/<clip_id>` directories in lexicographic order.
/// Malformed clips are skipped with a diagnostic; clips outside the admitted
/// frame-count range are dropped silently (counted in filtered_count()).
class DatasetReader {
 public:
  DatasetReader(const fs::path& root, const std::string& split, bool apply_filter = true);

  std::optional<Clip> next();

  int64_t warning_count() const { return static_cast<int64_t>(diagnostics_.size()); }
  int64_t filtered_count() const { return filtered_; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<fs::path> clip_dirs_;
  size_t cursor_ = 0;
  bool apply_filter_ = true;
  int64_t filtered_ = 0;
  std::vector<std::string> diagnostics_;
};

struct DatasetLoad {
  std::vector<Clip> clips;
  int64_t warnings = 0;
  int64_t filtered = 0;
  std::vector<std::string> diagnostics;
};

DatasetLoad load_dataset(const fs::path& root, const std::string& split, bool apply_filter = true);

}  // namespace textface
