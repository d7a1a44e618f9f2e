#include <textface/error.hpp>
#include <textface/io.hpp>
#include <textface/synth.hpp>
#include <textface/trainer.hpp>

#include <gtest/gtest.h>

#include <fstream>

using namespace textface;

namespace {

TrainConfig tiny_config() {
  TrainConfig config;
  config.preset = "desk";
  config.model = ModelConfig::desk();
  config.model.encoder_channels = {4, 4, 8, 8, 8, 8};
  config.model.decoder_channels = {8, 8, 4, 4, 4, 4};
  config.model.d_model = 8;
  config.model.heads = 2;
  config.model.emotion_width = 6;
  config.model.linguistic_width = 6;
  config.disc_base_channels = 4;
  config.disc_frames_per_clip = 2;
  config.batch_size = 2;
  config.k = 2;
  config.num_generated = 6;
  config.learning_rate = 1e-3;
  config.use_syn_loss = false;
  config.sync_pretrain_steps = 20;
  config.sync_batch_size = 4;
  config.sync_base_channels = 2;
  config.sync_embedding = 8;
  return config;
}

std::vector<Clip> tiny_clips(int n) {
  std::vector<Clip> clips;
  for (int i = 0; i < n; ++i) {
    SynthConfig synth;
    synth.num_frames = 10;
    synth.caption_length = 6;
    clips.push_back(synth_clip(100 + i, synth));
    clips.back().id = "clip_" + std::to_string(i);
  }
  return clips;
}

Batch tiny_batch(const TrainConfig& config) {
  std::vector<TrainingSample> samples;
  for (const auto& clip : tiny_clips(2)) samples.push_back(prepare_sample(clip, config.k, config.num_generated));
  return collate(samples);
}

SyncExpert tiny_expert() {
  SyncExpertOptions options;
  options.embedding = 8;
  options.base_channels = 2;
  return SyncExpert(options);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("textface_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(TrainConfig, SerializeRoundTrip) {
  auto config = tiny_config();
  config.seed = 42;
  config.global_ca = false;
  config.data_root = "some/dir";
  auto again = TrainConfig::parse(config.serialize());
  EXPECT_EQ(again.serialize(), config.serialize());
  EXPECT_EQ(again.seed, 42u);
  EXPECT_FALSE(again.global_ca);
  EXPECT_EQ(again.model.encoder_channels, config.model.encoder_channels);
}

TEST(TrainConfig, PresetsAndComments) {
  auto full = TrainConfig::parse("# nothing\n");
  EXPECT_EQ(full.model.d_model, 512);
  EXPECT_EQ(full.batch_size, 4);
  EXPECT_EQ(full.epochs, 600);
  EXPECT_DOUBLE_EQ(full.learning_rate, 1e-4);
  auto desk = TrainConfig::parse("d_model = 128 # inline\npreset = desk\n");
  EXPECT_EQ(desk.model.encoder_channels, ModelConfig::desk().encoder_channels);
}

TEST(TrainConfig, RejectsBadInput) {
  EXPECT_THROW(TrainConfig::parse("learning_rte = 1e-4\n"), Error);
  EXPECT_THROW(TrainConfig::parse("seed = 1\nseed = 2\n"), Error);
  EXPECT_THROW(TrainConfig::parse("batch_size = four\n"), Error);
  EXPECT_THROW(TrainConfig::parse("batch_size\n"), Error);
  EXPECT_THROW(TrainConfig::parse("k = 6\n"), Error);
  EXPECT_THROW(TrainConfig::parse("preset = huge\n"), Error);
}

TEST(TrainConfig, Ablations) {
  auto config = tiny_config();
  config.apply_ablations("global_ca,disc");
  EXPECT_FALSE(config.global_ca);
  EXPECT_TRUE(config.local_ca);
  EXPECT_FALSE(config.use_disc_loss);
  EXPECT_FALSE(config.model_config().flags.global_ca);
  EXPECT_THROW(config.apply_ablations("everything"), Error);
}

TEST(TrainConfig, CosineScheduleDecaysToOnePercent) {
  auto config = tiny_config();
  config.epochs = 10;
  EXPECT_THROW(TrainConfig::parse("lr_schedule = linear\n"), Error);
  Trainer constant(config);
  EXPECT_DOUBLE_EQ(constant.generator_learning_rate(7), 1e-3);
  config.lr_schedule = "cosine";
  Trainer cosine(config);
  EXPECT_DOUBLE_EQ(cosine.generator_learning_rate(0), 1e-3);
  EXPECT_NEAR(cosine.generator_learning_rate(5), 0.505e-3, 1e-15);
  EXPECT_NEAR(cosine.generator_learning_rate(10), 1e-5, 1e-15);
  EXPECT_NEAR(cosine.generator_learning_rate(12), 1e-5, 1e-15);
}

TEST(CountParameters, AffineMap) {
  torch::nn::Linear linear(10, 5);
  EXPECT_EQ(count_parameters(*linear), 55);
  linear->bias.set_requires_grad(false);
  EXPECT_EQ(count_parameters(*linear), 50);
}

TEST(TrainingSample, PadsAndMasks) {
  SynthConfig synth;
  synth.num_frames = 6;
  auto clip = synth_clip(1, synth);
  auto sample = prepare_sample(clip, 2, 6);
  EXPECT_EQ(sample.reference.sizes(), (std::vector<int64_t>{6, 96, 96}));
  EXPECT_EQ(sample.target.sizes(), (std::vector<int64_t>{6, 3, 96, 96}));
  EXPECT_TRUE(torch::equal(sample.mask, torch::tensor({1.f, 1.f, 1.f, 1.f, 0.f, 0.f})));
  EXPECT_TRUE(torch::equal(sample.target[5], clip.frames[5]));
  EXPECT_EQ(sample.mel.sizes(), (std::vector<int64_t>{32, kMelBins}));
}

TEST(Trainer, GenOnlyTotalIsWeightedGen) {
  auto config = tiny_config();
  config.use_disc_loss = false;
  Trainer trainer(config);
  auto report = trainer.train_step(tiny_batch(config));
  EXPECT_EQ(report.syn, 0.0);
  EXPECT_EQ(report.disc, 0.0);
  EXPECT_NEAR(report.total, report.weights.gen * report.gen, 1e-12);
  EXPECT_EQ(report.weights.gen, 0.7);
}

TEST(Trainer, DisabledDiscriminatorStaysPut) {
  auto config = tiny_config();
  config.use_disc_loss = false;
  Trainer trainer(config);
  const auto before = module_checksum(*trainer.discriminator());
  const auto gen_before = module_checksum(*trainer.generator());
  auto batch = tiny_batch(config);
  trainer.train_step(batch);
  trainer.train_step(batch);
  EXPECT_EQ(module_checksum(*trainer.discriminator()), before);
  EXPECT_NE(module_checksum(*trainer.generator()), gen_before);
  EXPECT_EQ(trainer.step(), 2);
}

TEST(Trainer, FullLossUpdatesBothAndKeepsExpertFrozen) {
  auto config = tiny_config();
  config.use_syn_loss = true;
  auto expert = tiny_expert();
  const auto expert_before = module_checksum(*expert);
  Trainer trainer(config, expert);
  const auto disc_before = module_checksum(*trainer.discriminator());
  auto batch = tiny_batch(config);
  for (int i = 0; i < 3; ++i) {
    auto report = trainer.train_step(batch);
    EXPECT_GT(report.syn, 0.0);
    EXPECT_GT(report.disc, 0.0);
    EXPECT_NEAR(report.total, report.weights.gen * report.gen + report.weights.syn * report.syn +
                                  report.weights.disc * report.disc,
                1e-6);
  }
  EXPECT_NE(module_checksum(*trainer.discriminator()), disc_before);
  EXPECT_EQ(module_checksum(*expert), expert_before);
  EXPECT_GT(trainer.last_discriminator_loss(), 0.0);
}

TEST(Trainer, SyncLossWithoutExpertIsRejected) {
  auto config = tiny_config();
  config.use_syn_loss = true;
  EXPECT_THROW(Trainer{config}, Error);
}

TEST(Trainer, SameSeedSameParameters) {
  auto config = tiny_config();
  config.seed = 5;
  auto batch = tiny_batch(config);
  Trainer a(config), b(config);
  for (int i = 0; i < 10; ++i) {
    a.train_step(batch);
    b.train_step(batch);
  }
  EXPECT_EQ(module_checksum(*a.generator()), module_checksum(*b.generator()));
  EXPECT_EQ(module_checksum(*a.discriminator()), module_checksum(*b.discriminator()));
}

TEST(Trainer, CheckpointRoundTripResumesExactly) {
  TempDir dir("ckpt_roundtrip");
  auto config = tiny_config();
  config.use_syn_loss = true;
  auto batch = tiny_batch(config);
  Trainer trainer(config, tiny_expert());
  trainer.train_step(batch);
  trainer.set_epoch(3);
  trainer.save(dir.path / "a.pt");

  auto restored = Trainer::load(dir.path / "a.pt");
  EXPECT_EQ(restored.step(), 1);
  EXPECT_EQ(restored.epoch(), 3);
  EXPECT_EQ(restored.config().serialize(), config.serialize());
  EXPECT_EQ(module_checksum(*restored.generator()), module_checksum(*trainer.generator()));
  EXPECT_EQ(module_checksum(*restored.discriminator()), module_checksum(*trainer.discriminator()));
  EXPECT_EQ(module_checksum(**restored.expert()), module_checksum(**trainer.expert()));

  auto r1 = trainer.train_step(batch);
  auto r2 = restored.train_step(batch);
  EXPECT_NEAR(r1.total, r2.total, 1e-6);
  auto pa = trainer.generator()->parameters(), pb = restored.generator()->parameters();
  for (size_t i = 0; i < pa.size(); ++i) EXPECT_TRUE(torch::allclose(pa[i], pb[i], 0, 1e-6));
}

TEST(Trainer, LoadRejectsMissingOrForeignFiles) {
  TempDir dir("ckpt_bad");
  EXPECT_THROW(Trainer::load(dir.path / "missing.pt"), Error);
  io::write_text_file(dir.path / "junk.pt", "not a checkpoint");
  try {
    Trainer::load(dir.path / "junk.pt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

TEST(Fit, ZeroEpochsWritesInitialCheckpoint) {
  TempDir dir("fit_zero");
  auto config = tiny_config();
  config.epochs = 0;
  auto result = fit(config, tiny_clips(2), dir.path);
  EXPECT_TRUE(fs::exists(result.path));
  EXPECT_EQ(result.step, 0);
  auto trainer = Trainer::load(result.path);
  Trainer fresh(config);
  EXPECT_EQ(module_checksum(*trainer.generator()), module_checksum(*fresh.generator()));
  EXPECT_TRUE(fs::exists(dir.path / "config.txt"));
}

TEST(Fit, CheckpointCadenceAndLog) {
  TempDir dir("fit_cadence");
  auto config = tiny_config();
  config.epochs = 2;
  config.batch_size = 1;
  config.checkpoint_every = 2;
  std::vector<int64_t> steps;
  FitOptions options;
  options.on_step = [&](const Trainer& t, const LossReport&) { steps.push_back(t.step()); };
  auto result = fit(config, tiny_clips(2), dir.path, options);
  EXPECT_EQ(result.step, 4);
  EXPECT_EQ(result.epoch, 2);
  EXPECT_EQ(steps, (std::vector<int64_t>{1, 2, 3, 4}));
  EXPECT_TRUE(fs::exists(dir.path / "checkpoint_2.pt"));
  EXPECT_TRUE(fs::exists(dir.path / "checkpoint_4.pt"));
  EXPECT_FALSE(fs::exists(dir.path / "checkpoint_1.pt"));
  EXPECT_TRUE(fs::exists(dir.path / "final.pt"));

  std::ifstream log(dir.path / "train_log.csv");
  std::string line;
  std::getline(log, line);
  EXPECT_EQ(line, "step,epoch,gen,syn,disc,total,lambda1,lambda2,lambda3");
  int rows = 0;
  while (std::getline(log, line)) {
    ++rows;
    std::vector<double> values;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) values.push_back(std::stod(cell));
    ASSERT_EQ(values.size(), 9u);
    EXPECT_NEAR(values[5], values[6] * values[2] + values[7] * values[3] + values[8] * values[4], 1e-6);
  }
  EXPECT_EQ(rows, 4);
}

TEST(Fit, PretrainsExpertWhenSyncIsOn) {
  TempDir dir("fit_sync");
  auto config = tiny_config();
  config.use_syn_loss = true;
  config.epochs = 1;
  auto result = fit(config, tiny_clips(2), dir.path);
  auto trainer = Trainer::load(result.path);
  ASSERT_TRUE(trainer.expert().has_value());
  EXPECT_TRUE((*trainer.expert())->frozen());
}
