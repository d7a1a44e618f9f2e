#include <textface/cli.hpp>
#include <textface/io.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <algorithm>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace textface;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("textface_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const char* kTinyConfig = R"(preset = desk
seed = 3
epochs = 1
batch_size = 2
k = 5
num_generated = 27
d_model = 8
heads = 2
encoder_channels = 4,4,8,8,8,8
decoder_channels = 8,8,4,4,4,4
emotion_width = 6
linguistic_width = 6
disc_base_channels = 4
disc_frames_per_clip = 2
use_syn_loss = false
)";

}  // namespace

class HelpSnapshot : public ::testing::TestWithParam<std::string> {};

TEST_P(HelpSnapshot, MatchesStoredText) {
  const std::string command = GetParam();
  const fs::path path = fs::path(TEXTFACE_SNAPSHOT_DIR) / ((command.empty() ? "main" : command) + ".txt");
  const auto text = cli::help_text(command);
  if (std::getenv("TEXTFACE_UPDATE_SNAPSHOTS")) io::write_text_file(path, text);
  ASSERT_TRUE(fs::exists(path)) << "missing snapshot " << path;
  EXPECT_EQ(text, slurp(path));
}

INSTANTIATE_TEST_SUITE_P(Commands, HelpSnapshot,
                         ::testing::Values("", "synth-data", "preprocess", "train", "generate", "evaluate",
                                           "attn-viz", "count-params"),
                         [](const auto& info) {
                           std::string name = info.param.empty() ? "main" : info.param;
                           std::replace(name.begin(), name.end(), '-', '_');
                           return name;
                         });

TEST(Cli, HelpExitsZero) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("synth-data"), std::string::npos);
  EXPECT_EQ(run({"train", "--help"}).code, cli::kExitOk);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"synth-data"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"synth-data", "--out", "x", "--clips", "-1"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"generate", "--ckpt", "/nonexistent.pt", "--data", "d", "--out", "o"}).code, cli::kExitUsage);
}

TEST(Cli, RuntimeFailuresExitOneWithCategory) {
  TempDir dir("failures");
  auto r = run({"evaluate", "--data", (dir.path / "empty").string(), "--gt-as-generated", "--out",
                (dir.path / "r.json").string()});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_EQ(r.err.rfind("insufficient-data: ", 0), 0u) << r.err;

  io::write_text_file(dir.path / "bad.txt", "no_such_key = 1\n");
  r = run({"count-params", "--config", (dir.path / "bad.txt").string()});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_EQ(r.err.rfind("invalid-input: ", 0), 0u) << r.err;
}

TEST(Cli, SynthDataIsByteIdentical) {
  TempDir dir("synth");
  for (const char* name : {"a", "b"}) {
    auto r = run({"synth-data", "--out", (dir.path / name).string(), "--clips", "2", "--seed", "4"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir.path / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir.path / "a");
    ASSERT_TRUE(fs::exists(dir.path / "b" / rel)) << rel;
    EXPECT_EQ(slurp(entry.path()), slurp(dir.path / "b" / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 60u);
  EXPECT_TRUE(fs::exists(dir.path / "a" / "train" / "clip_0001"));
}

TEST(Cli, GroundTruthReport) {
  TempDir dir("gt");
  ASSERT_EQ(run({"synth-data", "--out", (dir.path / "data").string(), "--clips", "2"}).code, 0);
  const auto report = dir.path / "report.json";
  auto r = run({"evaluate", "--data", (dir.path / "data").string(), "--gt-as-generated", "--out", report.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto json = nlohmann::json::parse(slurp(report));
  EXPECT_EQ(json["psnr"]["mean"].get<double>(), 100.0);
  EXPECT_NEAR(json["ssim"]["mean"].get<double>(), 1.0, 1e-9);
  EXPECT_EQ(json["lpips"]["mean"].get<double>(), 0.0);
  EXPECT_NEAR(json["fid"]["mean"].get<double>(), 0.0, 1e-6);
  EXPECT_EQ(json["lip_lmd"]["mean"].get<double>(), 0.0);
  EXPECT_NEAR(json["csim"]["mean"].get<double>(), 1.0, 1e-9);
  EXPECT_EQ(json["meta"]["n_clips"].get<int>(), 2);
}

TEST(Cli, CountParams) {
  TempDir dir("count");
  auto r = run({"count-params", "--out", (dir.path / "counts.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto json = nlohmann::json::parse(slurp(dir.path / "counts.json"));
  EXPECT_EQ(json["generator"].get<int64_t>(), json["visual_encoder"].get<int64_t>() +
                                                  json["text_projections"].get<int64_t>() +
                                                  json["fusion"].get<int64_t>() + json["decoder"].get<int64_t>());
  auto ablated = run({"count-params", "--ablate", "global_ca,local_ca"});
  EXPECT_NE(ablated.out.find("fusion 0"), std::string::npos) << ablated.out;
}

TEST(Cli, TrainGenerateEvaluateAttention) {
  TempDir dir("pipeline");
  const auto data = (dir.path / "data").string();
  ASSERT_EQ(run({"synth-data", "--out", data, "--clips", "2", "--identities", "1"}).code, 0);
  auto pre = run({"preprocess", "--data", data, "--out", (dir.path / "pre").string()});
  ASSERT_EQ(pre.code, 0) << pre.err;
  EXPECT_TRUE(fs::exists(dir.path / "pre" / "preprocess.json"));
  EXPECT_TRUE(fs::exists(dir.path / "pre" / "train" / "clip_0000" / "mel.bin"));

  io::write_text_file(dir.path / "tiny.txt", kTinyConfig);
  const auto run_dir = dir.path / "run";
  auto train = run({"train", "--config", (dir.path / "tiny.txt").string(), "--data", data, "--out", run_dir.string()});
  ASSERT_EQ(train.code, 0) << train.err;
  const auto ckpt = (run_dir / "final.pt").string();
  ASSERT_TRUE(fs::exists(ckpt));
  EXPECT_TRUE(fs::exists(run_dir / "train_log.csv"));

  auto gen = run({"generate", "--ckpt", ckpt, "--data", data, "--out", (dir.path / "gen").string()});
  ASSERT_EQ(gen.code, 0) << gen.err;
  EXPECT_TRUE(fs::exists(dir.path / "gen" / "clip_0000" / "frames" / "00005.png"));
  EXPECT_FALSE(fs::exists(dir.path / "gen" / "clip_0000" / "frames" / "00004.png"));
  auto meta = nlohmann::json::parse(slurp(dir.path / "gen" / "clip_0000" / "meta.json"));
  EXPECT_EQ(meta["first_frame"].get<int>(), 5);

  auto eval = run({"evaluate", "--ckpt", ckpt, "--data", data, "--out", (dir.path / "eval.json").string()});
  ASSERT_EQ(eval.code, 0) << eval.err;
  auto report = nlohmann::json::parse(slurp(dir.path / "eval.json"));
  EXPECT_LT(report["psnr"]["mean"].get<double>(), 100.0);

  auto attn = run({"attn-viz", "--ckpt", ckpt, "--data", data, "--clip", "clip_0001", "--out",
                   (dir.path / "attn").string()});
  ASSERT_EQ(attn.code, 0) << attn.err;
  EXPECT_TRUE(fs::exists(dir.path / "attn" / "clip_0001" / "global_overlay.png"));
  EXPECT_TRUE(fs::exists(dir.path / "attn" / "clip_0001" / "local_weights.bin"));
  EXPECT_FALSE(fs::exists(dir.path / "attn" / "clip_0000"));

  auto missing = run({"attn-viz", "--ckpt", ckpt, "--data", data, "--clip", "nope", "--out",
                      (dir.path / "attn").string()});
  EXPECT_EQ(missing.code, cli::kExitFailure);
}
