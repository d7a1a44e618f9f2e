#include <textface/cli.hpp>

#include <textface/dataset.hpp>
#include <textface/error.hpp>
#include <textface/io.hpp>
#include <textface/metrics.hpp>
#include <textface/synth.hpp>
#include <textface/trainer.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

namespace textface::cli {

namespace {

struct Options {
  uint64_t seed = 0;
  std::string out;
  std::string data;
  std::string split = "train";
  std::string config;
  std::string ckpt;
  std::string ablate;
  std::string clip;
  int64_t clips = 4;
  int64_t frames = 32;
  int64_t identities = 0;
  int64_t caption_length = 14;
  int64_t epochs = -1;
  int64_t k = -1;
  bool gt_as_generated = false;
  bool seed_given = false;
};

struct Commands {
  CLI::App* synth = nullptr;
  CLI::App* preprocess = nullptr;
  CLI::App* train = nullptr;
  CLI::App* generate = nullptr;
  CLI::App* evaluate = nullptr;
  CLI::App* attn = nullptr;
  CLI::App* count = nullptr;
};

void add_common(CLI::App* app, Options& o, bool out_required, const std::string& out_help) {
  app->add_option("--seed", o.seed, "Random seed")->each([&o](const std::string&) { o.seed_given = true; });
  auto* out = app->add_option("--out", o.out, out_help);
  if (out_required) out->required();
}

Commands build(CLI::App& app, Options& o) {
  app.require_subcommand(1);
  app.fallthrough(false);
  Commands c;

  c.synth = app.add_subcommand("synth-data", "Write a deterministic synthetic talking-face dataset");
  add_common(c.synth, o, true, "Dataset root to create");
  c.synth->add_option("--clips", o.clips, "Number of clips")->check(CLI::PositiveNumber)->capture_default_str();
  c.synth->add_option("--frames", o.frames, "Frames per clip")->check(CLI::PositiveNumber)->capture_default_str();
  c.synth->add_option("--identities", o.identities, "Distinct faces, cycled over clips (0 = one per clip)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  c.synth->add_option("--caption-length", o.caption_length, "Tokens per caption")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c.synth->add_option("--split", o.split, "Split directory name")->capture_default_str();

  c.preprocess = app.add_subcommand("preprocess", "Crop frames to 96x96, filter clips and export log-mel spectrograms");
  add_common(c.preprocess, o, true, "Output dataset root");
  c.preprocess->add_option("--data", o.data, "Input dataset root")->required();
  c.preprocess->add_option("--split", o.split, "Split directory name")->capture_default_str();

  c.train = app.add_subcommand("train", "Train the generator, discriminator and sync expert");
  add_common(c.train, o, true, "Run directory for logs and checkpoints");
  c.train->add_option("--config", o.config, "Key-value training config")->required()->check(CLI::ExistingFile);
  c.train->add_option("--data", o.data, "Dataset root (overrides data_root)");
  c.train->add_option("--split", o.split, "Split directory name")->capture_default_str();
  c.train->add_option("--ablate", o.ablate, "Comma list of global_ca, local_ca, syn, disc to disable");
  c.train->add_option("--epochs", o.epochs, "Override the configured epoch count")->check(CLI::NonNegativeNumber);

  c.generate = app.add_subcommand("generate", "Generate frames k+1..N for every clip as PNG sequences");
  add_common(c.generate, o, true, "Output directory");
  c.generate->add_option("--ckpt", o.ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  c.generate->add_option("--data", o.data, "Dataset root")->required();
  c.generate->add_option("--split", o.split, "Split directory name")->capture_default_str();
  c.generate->add_option("--k", o.k, "Reference frames (default: checkpoint config)")->check(CLI::PositiveNumber);

  c.evaluate = app.add_subcommand("evaluate", "Score generated frames against ground truth and write a JSON report");
  add_common(c.evaluate, o, true, "Report file (JSON)");
  c.evaluate->add_option("--ckpt", o.ckpt, "Checkpoint file")->check(CLI::ExistingFile);
  c.evaluate->add_option("--data", o.data, "Dataset root")->required();
  c.evaluate->add_option("--split", o.split, "Split directory name")->capture_default_str();
  c.evaluate->add_option("--k", o.k, "Reference frames (default: checkpoint config, else 5)")
      ->check(CLI::PositiveNumber);
  c.evaluate->add_flag("--gt-as-generated", o.gt_as_generated,
                       "Score ground truth against itself instead of running a checkpoint");

  c.attn = app.add_subcommand("attn-viz", "Export cross-attention heat maps as PNG overlays and tensor files");
  add_common(c.attn, o, true, "Output directory");
  c.attn->add_option("--ckpt", o.ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  c.attn->add_option("--data", o.data, "Dataset root")->required();
  c.attn->add_option("--split", o.split, "Split directory name")->capture_default_str();
  c.attn->add_option("--clip", o.clip, "Only this clip id");

  c.count = app.add_subcommand("count-params", "Count trainable parameters per component");
  add_common(c.count, o, false, "Optional JSON file for the counts");
  c.count->add_option("--config", o.config, "Key-value training config (default: full preset)")
      ->check(CLI::ExistingFile);
  c.count->add_option("--ablate", o.ablate, "Comma list of global_ca, local_ca, syn, disc to disable");
  return c;
}

std::vector<Clip> load_clips(const Options& o, std::ostream& err) {
  auto load = load_dataset(o.data, o.split);
  for (const auto& d : load.diagnostics) err << "warning: " << d << "\n";
  require(!load.clips.empty(), "no usable clips under " + (fs::path(o.data) / o.split).string(),
          ErrorKind::InsufficientData);
  return std::move(load.clips);
}

Clip cropped(Clip clip) {
  if (clip.height() != kFrameSize || clip.width() != kFrameSize) clip.frames = crop_frames(clip.frames, full_frame_box);
  return clip;
}

int cmd_synth(const Options& o, std::ostream& out) {
  const fs::path root = fs::path(o.out) / o.split;
  for (int64_t i = 0; i < o.clips; ++i) {
    SynthConfig config;
    config.num_frames = o.frames;
    config.caption_length = o.caption_length;
    if (o.identities > 0) config.identity = i % o.identities;
    auto clip = synth_clip(o.seed * 100003ULL + static_cast<uint64_t>(i), config);
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%04lld", static_cast<long long>(i));
    clip.id = name;
    write_clip(clip, root / name);
  }
  out << "wrote " << o.clips << " clips to " << root.string() << "\n";
  return kExitOk;
}

int cmd_preprocess(const Options& o, std::ostream& out, std::ostream& err) {
  auto load = load_dataset(o.data, o.split);
  for (const auto& d : load.diagnostics) err << "warning: " << d << "\n";
  const fs::path root = fs::path(o.out) / o.split;
  for (auto& clip : load.clips) {
    auto c = cropped(std::move(clip));
    write_clip(c, root / c.id);
    if (c.audio.size() >= static_cast<size_t>(kMelWindow)) {
      io::write_tensor_file(root / c.id / "mel.bin", mel_spectrogram(c.audio).values);
    }
  }
  nlohmann::ordered_json summary{{"clips", load.clips.size()},
                                 {"filtered", load.filtered},
                                 {"warnings", load.warnings}};
  io::write_text_file(fs::path(o.out) / "preprocess.json", summary.dump(2) + "\n");
  out << "kept " << load.clips.size() << " clips, filtered " << load.filtered << ", skipped " << load.warnings << "\n";
  return kExitOk;
}

int cmd_train(Options o, std::ostream& out, std::ostream& err) {
  auto config = TrainConfig::load(o.config);
  if (o.seed_given) config.seed = o.seed;
  if (o.epochs >= 0) config.epochs = o.epochs;
  if (!o.ablate.empty()) config.apply_ablations(o.ablate);
  if (!o.data.empty()) config.data_root = o.data;
  config.out_dir = o.out;
  config.validate();
  require(!config.data_root.empty(), "no dataset given (--data or data_root)");
  o.data = config.data_root;
  const auto clips = load_clips(o, err);
  FitOptions options;
  options.on_step = [&out](const Trainer& trainer, const LossReport& report) {
    if (trainer.step() % 50 == 0) {
      out << "step " << trainer.step() << " epoch " << trainer.epoch() << " total " << report.total << "\n";
    }
  };
  const auto checkpoint = fit(config, clips, o.out, options);
  out << "final checkpoint " << checkpoint.path.string() << " at step " << checkpoint.step << "\n";
  return kExitOk;
}

int cmd_generate(const Options& o, std::ostream& out, std::ostream& err) {
  auto trainer = Trainer::load(o.ckpt);
  const int64_t k = o.k > 0 ? o.k : trainer.config().k;
  const auto clips = load_clips(o, err);
  torch::NoGradGuard no_grad;
  trainer.generator()->eval();
  for (const auto& raw : clips) {
    auto clip = cropped(raw);
    auto frames = generate_for_clip(trainer.generator(), clip, k).frames[0];
    const fs::path dir = fs::path(o.out) / clip.id;
    fs::create_directories(dir / "frames");
    for (int64_t i = 0; i < frames.size(0); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "%05lld.png", static_cast<long long>(k + i));
      io::write_png(dir / "frames" / name, frames[i]);
    }
    nlohmann::ordered_json meta{{"clip_id", clip.id},
                                {"fps", clip.fps},
                                {"k", k},
                                {"first_frame", k},
                                {"num_generated", frames.size(0)}};
    io::write_text_file(dir / "meta.json", meta.dump(2) + "\n");
  }
  out << "generated " << clips.size() << " clips under " << o.out << "\n";
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
  require(o.gt_as_generated || !o.ckpt.empty(), "evaluate needs --ckpt or --gt-as-generated");
  const auto clips = load_clips(o, err);
  const auto providers = EvaluationProviders::toy(o.seed);
  MetricsReport report;
  if (o.gt_as_generated) {
    const int64_t k = o.k > 0 ? o.k : 5;
    std::vector<EvaluationItem> items;
    for (const auto& raw : clips) {
      auto clip = cropped(raw);
      require(k < clip.num_frames(), "clip " + clip.id + " is shorter than k + 1 frames");
      auto generated = clip.frames.narrow(0, k, clip.num_frames() - k).clone();
      items.push_back({generated, std::move(clip), k});
    }
    report = evaluate_items(items, providers);
  } else {
    auto trainer = Trainer::load(o.ckpt);
    report = evaluate(trainer.generator(), clips, o.k > 0 ? o.k : trainer.config().k, providers);
  }
  const fs::path path(o.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  io::write_text_file(path, report.to_json());
  out << "psnr " << report.metrics["psnr"].mean.value_or(0.0) << " ssim " << report.metrics["ssim"].mean.value_or(0.0)
      << " over " << report.n_clips << " clips\n";
  return kExitOk;
}

int cmd_attn(const Options& o, std::ostream& out, std::ostream& err) {
  auto trainer = Trainer::load(o.ckpt);
  const int64_t k = trainer.config().k;
  const auto clips = load_clips(o, err);
  torch::NoGradGuard no_grad;
  trainer.generator()->eval();
  int64_t written = 0;
  for (const auto& raw : clips) {
    if (!o.clip.empty() && raw.id != o.clip) continue;
    auto clip = cropped(raw);
    auto result = generate_for_clip(trainer.generator(), clip, k);
    const auto& grid = result.fused.concat;
    const int64_t h = grid.size(2), w = grid.size(3);
    const fs::path dir = fs::path(o.out) / clip.id;
    fs::create_directories(dir);
    const auto base = clip.frames[k - 1];
    for (const auto& [name, branch] : {std::pair{"global", &result.fused.emo}, std::pair{"local", &result.fused.ling}}) {
      if (branch->weights.empty()) {
        out << clip.id << ": " << name << " cross-attention disabled in this checkpoint\n";
        continue;
      }
      const auto& weights = branch->weights.front();
      io::write_tensor_file(dir / (std::string(name) + "_weights.bin"), weights.to(torch::kFloat32));
      auto map = upsample_map(attention_map(weights, h, w), kFrameSize);
      io::write_png(dir / (std::string(name) + "_overlay.png"), overlay_heatmap(base, map));
    }
    ++written;
  }
  require(written > 0, "clip '" + o.clip + "' not found", ErrorKind::InvalidInput);
  out << "wrote attention maps for " << written << " clips under " << o.out << "\n";
  return kExitOk;
}

int cmd_count(const Options& o, std::ostream& out) {
  TrainConfig config = o.config.empty() ? TrainConfig{} : TrainConfig::load(o.config);
  if (!o.ablate.empty()) config.apply_ablations(o.ablate);
  torch::manual_seed(o.seed);
  TalkingFaceGenerator generator(config.model_config());
  DiscriminatorOptions disc_options;
  disc_options.base_channels = config.disc_base_channels;
  Discriminator discriminator(disc_options);

  nlohmann::ordered_json counts;
  counts["visual_encoder"] = count_parameters(*generator->visual_encoder());
  counts["text_projections"] =
      count_parameters(*generator->emotion_encoder()) + count_parameters(*generator->linguistic_encoder());
  counts["fusion"] = count_parameters(*generator->fusion());
  counts["decoder"] = count_parameters(*generator->decoder());
  counts["generator"] = count_parameters(*generator);
  counts["discriminator"] = count_parameters(*discriminator);
  for (const auto& [name, value] : counts.items()) out << name << " " << value.get<int64_t>() << "\n";
  if (!o.out.empty()) {
    const fs::path path(o.out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    io::write_text_file(path, counts.dump(2) + "\n");
  }
  return kExitOk;
}

std::unique_ptr<CLI::App> make_app(Options& o, Commands& c) {
  auto app = std::make_unique<CLI::App>("Text-driven talking-face generation", "textface");
  c = build(*app, o);
  return app;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  Commands c;
  auto app = make_app(o, c);
  std::vector<std::string> storage{"textface"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app->parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app->exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app->exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app->exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (c.synth->parsed()) return cmd_synth(o, out);
    if (c.preprocess->parsed()) return cmd_preprocess(o, out, err);
    if (c.train->parsed()) return cmd_train(o, out, err);
    if (c.generate->parsed()) return cmd_generate(o, out, err);
    if (c.evaluate->parsed()) return cmd_evaluate(o, out, err);
    if (c.attn->parsed()) return cmd_attn(o, out, err);
    if (c.count->parsed()) return cmd_count(o, out);
  } catch (const Error& e) {
    err << to_string(e.kind()) << ": " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::string message = e.what();
    if (auto newline = message.find('\n'); newline != std::string::npos) message.resize(newline);
    err << "internal: " << message << "\n";
    return kExitFailure;
  }
  err << "usage: no command given\n";
  return kExitUsage;
}

std::string help_text(const std::string& command) {
  Options o;
  Commands c;
  auto app = make_app(o, c);
  if (command.empty()) return app->help();
  return app->get_subcommand(command)->help();
}

}  // namespace textface::cli
