#include <textface/trainer.hpp>

#include <charconv>
#include <numbers>

#include <textface/error.hpp>
#include <textface/io.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

namespace textface {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const auto v = std::stoll(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::InvalidInput, "config key '" + key + "' expects an integer, got '" + value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const auto v = std::stod(value, &used);
    if (used == value.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::InvalidInput, "config key '" + key + "' expects a number, got '" + value + "'");
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(ErrorKind::InvalidInput, "config key '" + key + "' expects true or false, got '" + value + "'");
}

std::vector<int64_t> parse_list(const std::string& key, const std::string& value) {
  std::vector<int64_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
  require(!out.empty(), "config key '" + key + "' expects a comma-separated list");
  return out;
}

std::string format_list(const std::vector<int64_t>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

using Setter = std::function<void(TrainConfig&, const std::string&)>;
using Getter = std::function<std::string(const TrainConfig&)>;

struct Key {
  const char* name;
  Setter set;
  Getter get;
};

#define TF_INT(field)                                                                          \
  Key {                                                                                        \
    #field, [](TrainConfig& c, const std::string& v) { c.field = parse_int(#field, v); },      \
        [](const TrainConfig& c) { return std::to_string(c.field); }                           \
  }
#define TF_DOUBLE(field)                                                                       \
  Key {                                                                                        \
    #field, [](TrainConfig& c, const std::string& v) { c.field = parse_double(#field, v); },   \
        [](const TrainConfig& c) { return format_double(c.field); }                            \
  }
#define TF_BOOL(field)                                                                         \
  Key {                                                                                        \
    #field, [](TrainConfig& c, const std::string& v) { c.field = parse_bool(#field, v); },     \
        [](const TrainConfig& c) { return std::string(c.field ? "true" : "false"); }           \
  }
#define TF_STRING(field)                                                                       \
  Key {                                                                                        \
    #field, [](TrainConfig& c, const std::string& v) { c.field = v; },                         \
        [](const TrainConfig& c) { return c.field; }                                           \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      TF_STRING(preset),
      {"seed", [](TrainConfig& c, const std::string& v) { c.seed = static_cast<uint64_t>(parse_int("seed", v)); },
       [](const TrainConfig& c) { return std::to_string(c.seed); }},
      TF_INT(batch_size),
      TF_INT(epochs),
      TF_DOUBLE(learning_rate),
      TF_DOUBLE(beta1),
      TF_DOUBLE(beta2),
      TF_DOUBLE(disc_learning_rate),
      TF_STRING(lr_schedule),
      TF_INT(k),
      TF_INT(num_generated),
      TF_BOOL(global_ca),
      TF_BOOL(local_ca),
      TF_BOOL(use_syn_loss),
      TF_BOOL(use_disc_loss),
      {"d_model", [](TrainConfig& c, const std::string& v) { c.model.d_model = parse_int("d_model", v); },
       [](const TrainConfig& c) { return std::to_string(c.model.d_model); }},
      {"heads", [](TrainConfig& c, const std::string& v) { c.model.heads = parse_int("heads", v); },
       [](const TrainConfig& c) { return std::to_string(c.model.heads); }},
      {"encoder_channels",
       [](TrainConfig& c, const std::string& v) { c.model.encoder_channels = parse_list("encoder_channels", v); },
       [](const TrainConfig& c) { return format_list(c.model.encoder_channels); }},
      {"decoder_channels",
       [](TrainConfig& c, const std::string& v) { c.model.decoder_channels = parse_list("decoder_channels", v); },
       [](const TrainConfig& c) { return format_list(c.model.decoder_channels); }},
      {"emotion_width", [](TrainConfig& c, const std::string& v) { c.model.emotion_width = parse_int("emotion_width", v); },
       [](const TrainConfig& c) { return std::to_string(c.model.emotion_width); }},
      {"linguistic_width",
       [](TrainConfig& c, const std::string& v) { c.model.linguistic_width = parse_int("linguistic_width", v); },
       [](const TrainConfig& c) { return std::to_string(c.model.linguistic_width); }},
      {"text_seed",
       [](TrainConfig& c, const std::string& v) { c.model.text_seed = static_cast<uint64_t>(parse_int("text_seed", v)); },
       [](const TrainConfig& c) { return std::to_string(c.model.text_seed); }},
      TF_INT(disc_base_channels),
      TF_INT(disc_frames_per_clip),
      TF_INT(sync_pretrain_steps),
      TF_INT(sync_batch_size),
      TF_DOUBLE(sync_learning_rate),
      TF_INT(sync_embedding),
      TF_INT(sync_base_channels),
      TF_INT(checkpoint_every),
      TF_STRING(data_root),
      TF_STRING(out_dir),
  };
  return table;
}

#undef TF_INT
#undef TF_DOUBLE
#undef TF_BOOL
#undef TF_STRING

ModelConfig preset_model(const std::string& preset) {
  if (preset == "full") return ModelConfig{};
  if (preset == "desk") return ModelConfig::desk();
  throw Error(ErrorKind::InvalidInput, "unknown preset '" + preset + "' (expected full or desk)");
}

torch::Tensor pad_rows(const torch::Tensor& x, int64_t rows) {
  if (x.size(0) >= rows) return x.narrow(0, 0, rows);
  auto last = x.narrow(0, x.size(0) - 1, 1);
  std::vector<int64_t> repeat(static_cast<size_t>(x.dim()), 1);
  repeat[0] = rows - x.size(0);
  return torch::cat({x, last.repeat(repeat)}, 0);
}

void write_module(torch::serialize::OutputArchive& archive, const std::string& key, const torch::nn::Module& module) {
  torch::serialize::OutputArchive sub;
  module.save(sub);
  archive.write(key, sub);
}

void read_module(torch::serialize::InputArchive& archive, const std::string& key, torch::nn::Module& module) {
  torch::serialize::InputArchive sub;
  archive.read(key, sub);
  module.load(sub);
}

std::string read_string(torch::serialize::InputArchive& archive, const std::string& key) {
  c10::IValue value;
  archive.read(key, value);
  return value.toStringRef();
}

int64_t read_int(torch::serialize::InputArchive& archive, const std::string& key) {
  c10::IValue value;
  archive.read(key, value);
  return value.toInt();
}

}  // namespace

TrainConfig TrainConfig::parse(const std::string& text) {
  std::map<std::string, std::string> values;
  std::vector<std::string> order;
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, "config line " + std::to_string(line_number) + " is not 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto& table = keys();
    require(std::any_of(table.begin(), table.end(), [&](const Key& k) { return key == k.name; }),
            "unknown config key '" + key + "'");
    require(!values.count(key), "config key '" + key + "' given twice");
    values[key] = value;
    order.push_back(key);
  }

  TrainConfig config;
  if (auto it = values.find("preset"); it != values.end()) {
    config.preset = it->second;
    config.model = preset_model(config.preset);
  }
  for (const auto& key : order) {
    if (key == "preset") continue;
    for (const auto& k : keys()) {
      if (key == k.name) k.set(config, values[key]);
    }
  }
  config.validate();
  return config;
}

TrainConfig TrainConfig::load(const fs::path& path) { return parse(io::read_text_file(path)); }

std::string TrainConfig::serialize() const {
  std::string out;
  for (const auto& k : keys()) out += std::string(k.name) + " = " + k.get(*this) + "\n";
  return out;
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig config = model;
  config.flags = fusion_flags();
  config.max_reference_frames = std::max<int64_t>(config.max_reference_frames, k);
  config.max_generated = std::max<int64_t>(config.max_generated, num_generated);
  return config;
}

void TrainConfig::validate() const {
  require(batch_size >= 1, "batch_size must be positive");
  require(epochs >= 0, "epochs must be non-negative");
  require(learning_rate > 0 && disc_learning_rate > 0, "learning rates must be positive");
  require(lr_schedule == "constant" || lr_schedule == "cosine", "lr_schedule must be 'constant' or 'cosine'");
  require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, "betas must lie in [0, 1)");
  require(k >= 1 && k <= model.max_reference_frames, "k must lie in [1, max_reference_frames]");
  require(num_generated >= 1, "num_generated must be positive");
  require(!use_syn_loss || num_generated >= kSyncWindow, "the sync loss needs num_generated >= 5");
  require(disc_base_channels >= 1 && disc_frames_per_clip >= 0, "invalid discriminator settings");
  require(sync_pretrain_steps >= 0 && sync_batch_size >= 2 && sync_learning_rate > 0, "invalid sync expert settings");
  require(sync_embedding >= 1 && sync_base_channels >= 1, "invalid sync expert widths");
  require(checkpoint_every >= 0, "checkpoint_every must be non-negative");
  model_config().validate();
}

void TrainConfig::apply_ablations(const std::string& list) {
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    if (item == "global_ca") {
      global_ca = false;
    } else if (item == "local_ca") {
      local_ca = false;
    } else if (item == "syn") {
      use_syn_loss = false;
    } else if (item == "disc") {
      use_disc_loss = false;
    } else {
      throw Error(ErrorKind::InvalidInput, "unknown ablation '" + item + "' (expected global_ca, local_ca, syn, disc)");
    }
  }
}

TrainingSample prepare_sample(const Clip& clip, int64_t k, int64_t num_generated, const FaceDetector& detector) {
  validate(clip);
  const int64_t n = clip.num_frames();
  require(k < n, "clip " + clip.id + " has no frames after the references");
  auto frames = (clip.height() == kFrameSize && clip.width() == kFrameSize) ? clip.frames
                                                                          : crop_frames(clip.frames, detector);
  const auto alignment = align_text(static_cast<int64_t>(clip.tokens.size()), k, n);

  TrainingSample sample;
  sample.id = clip.id;
  sample.reference = frames.narrow(0, 0, k).reshape({3 * k, kFrameSize, kFrameSize});
  const int64_t real = std::min(n - k, num_generated);
  sample.target = pad_rows(frames.narrow(0, k, real), num_generated);
  sample.mask = torch::zeros({num_generated});
  sample.mask.narrow(0, 0, real).fill_(1.0);

  const int64_t mel_rows = kMelFramesPerVideoFrame * (k + num_generated);
  if (clip.audio.size() >= static_cast<size_t>(kMelWindow)) {
    sample.mel = pad_rows(mel_spectrogram(clip.audio).values, mel_rows);
  } else {
    sample.mel = torch::full({mel_rows, kMelBins}, std::log(kLogMelFloor));
  }
  sample.caption = clip.tokens;
  sample.slice.assign(clip.tokens.begin() + alignment.slice_begin(), clip.tokens.end());
  return sample;
}

Batch collate(const std::vector<TrainingSample>& samples, size_t begin, size_t end) {
  require(begin < end && end <= samples.size(), "empty batch");
  std::vector<torch::Tensor> reference, target, mask, mels;
  Batch batch;
  for (size_t i = begin; i < end; ++i) {
    reference.push_back(samples[i].reference);
    target.push_back(samples[i].target);
    mask.push_back(samples[i].mask);
    mels.push_back(samples[i].mel);
    batch.captions.push_back(samples[i].caption);
    batch.slices.push_back(samples[i].slice);
  }
  batch.reference = torch::stack(reference);
  batch.target = torch::stack(target);
  batch.mask = torch::stack(mask);
  batch.mels = torch::stack(mels);
  batch.k = batch.reference.size(1) / 3;
  return batch;
}

Batch collate(const std::vector<TrainingSample>& samples) { return collate(samples, 0, samples.size()); }

int64_t count_parameters(const torch::nn::Module& module) {
  int64_t total = 0;
  for (const auto& p : module.parameters()) {
    if (p.requires_grad()) total += p.numel();
  }
  return total;
}

Trainer::Trainer(TrainConfig config, std::optional<SyncExpert> expert)
    : config_(std::move(config)), expert_(std::move(expert)), rng_(config_.seed) {
  config_.validate();
  require(!config_.use_syn_loss || expert_.has_value(), "the sync loss is enabled but no sync expert was supplied",
          ErrorKind::ExpertNotReady);
  torch::manual_seed(config_.seed);
  generator_ = TalkingFaceGenerator(config_.model_config());
  DiscriminatorOptions disc_options;
  disc_options.base_channels = config_.disc_base_channels;
  discriminator_ = Discriminator(disc_options);
  if (expert_) (*expert_)->freeze();

  generator_optimizer_ = std::make_unique<torch::optim::Adam>(
      generator_->parameters(),
      torch::optim::AdamOptions(config_.learning_rate).betas({config_.beta1, config_.beta2}));
  discriminator_optimizer_ = std::make_unique<torch::optim::Adam>(
      discriminator_->parameters(),
      torch::optim::AdamOptions(config_.disc_learning_rate).betas({config_.beta1, config_.beta2}));
}

double Trainer::generator_learning_rate(int64_t epoch) const {
  if (config_.lr_schedule != "cosine" || config_.epochs <= 0) return config_.learning_rate;
  const double progress = std::clamp(static_cast<double>(epoch) / static_cast<double>(config_.epochs), 0.0, 1.0);
  const double floor = 0.01 * config_.learning_rate;
  return floor + 0.5 * (config_.learning_rate - floor) * (1.0 + std::cos(std::numbers::pi * progress));
}

std::vector<int64_t> Trainer::sample_frames(const torch::Tensor& mask_row) {
  std::vector<int64_t> real;
  auto accessor = mask_row.accessor<float, 1>();
  for (int64_t i = 0; i < mask_row.size(0); ++i) {
    if (accessor[i] > 0) real.push_back(i);
  }
  const auto want = static_cast<size_t>(config_.disc_frames_per_clip);
  if (want == 0 || want >= real.size()) return real;
  std::vector<int64_t> picked;
  std::sample(real.begin(), real.end(), std::back_inserter(picked), want, rng_);
  return picked;
}

LossReport Trainer::train_step(const Batch& batch) {
  require(batch.k == config_.k, "batch reference count does not match the configuration");
  require(batch.target.size(1) == config_.num_generated, "batch length does not match num_generated");
  auto weights = schedule_weights(epoch_);
  if (!config_.use_syn_loss) weights.syn = 0.0;
  if (!config_.use_disc_loss) weights.disc = 0.0;

  const double lr = generator_learning_rate(epoch_);
  for (auto& group : generator_optimizer_->param_groups()) {
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
  }

  generator_->train();
  auto out = generator_->forward(batch.reference, batch.captions, batch.slices, config_.num_generated);
  const auto& generated = out.frames;

  auto gen = gen_loss(generated, batch.target, batch.mask);
  auto syn = config_.use_syn_loss ? sync_loss(generated, batch.mels, config_.k, *expert_, batch.mask)
                                  : torch::zeros({}, generated.options());

  std::vector<torch::Tensor> fake_frames, real_frames;
  for (int64_t b = 0; b < batch.size(); ++b) {
    for (auto i : sample_frames(batch.mask[b])) {
      fake_frames.push_back(generated[b][i]);
      real_frames.push_back(batch.target[b][i]);
    }
  }

  torch::Tensor adversarial = torch::zeros({}, generated.options());
  if (config_.use_disc_loss) {
    for (auto& p : discriminator_->parameters()) p.requires_grad_(false);
    auto fake = torch::stack(fake_frames);
    // Generator side: flipped target, generated frames labelled as ground truth.
    adversarial = disc_loss(discriminator_->forward(fake), torch::zeros({fake.size(0)}, fake.options()));
    for (auto& p : discriminator_->parameters()) p.requires_grad_(true);
  }

  LossReport report = total_loss(gen.item<double>(), syn.item<double>(), adversarial.item<double>(), weights);
  auto total = weighted_total(gen, syn, adversarial, weights);
  generator_optimizer_->zero_grad();
  total.backward();
  generator_optimizer_->step();

  last_disc_update_ = 0.0;
  if (config_.use_disc_loss) {
    auto fake = torch::stack(fake_frames).detach();
    auto real = torch::stack(real_frames);
    auto predictions = discriminator_->forward(torch::cat({fake, real}, 0));
    auto labels = torch::cat({torch::ones({fake.size(0)}), torch::zeros({real.size(0)})}, 0);
    auto loss = disc_loss(predictions, labels);
    const double value = loss.item<double>();
    require(std::isfinite(value), "discriminator loss is not finite at step " + std::to_string(step_),
            ErrorKind::NonFinite);
    discriminator_optimizer_->zero_grad();
    loss.backward();
    discriminator_optimizer_->step();
    last_disc_update_ = value;
  }
  ++step_;
  return report;
}

void Trainer::save(const fs::path& path) const {
  torch::serialize::OutputArchive archive;
  archive.write("version", c10::IValue(std::string(kCheckpointVersion)));
  archive.write("config", c10::IValue(config_.serialize()));
  archive.write("step", c10::IValue(step_));
  archive.write("epoch", c10::IValue(epoch_));
  std::ostringstream rng_state;
  rng_state << rng_;
  archive.write("rng", c10::IValue(rng_state.str()));
  archive.write("has_expert", c10::IValue(static_cast<int64_t>(expert_.has_value())));

  write_module(archive, "generator", *generator_);
  write_module(archive, "discriminator", *discriminator_);
  if (expert_) {
    write_module(archive, "expert", **expert_);
    torch::serialize::OutputArchive options;
    options.write("embedding", c10::IValue((*expert_)->options().embedding));
    options.write("base_channels", c10::IValue((*expert_)->options().base_channels));
    archive.write("expert_options", options);
  }
  torch::serialize::OutputArchive g_opt, d_opt;
  generator_optimizer_->save(g_opt);
  discriminator_optimizer_->save(d_opt);
  archive.write("generator_optimizer", g_opt);
  archive.write("discriminator_optimizer", d_opt);

  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  try {
    archive.save_to(tmp.string());
    fs::rename(tmp, path);
  } catch (const std::exception& e) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw Error(ErrorKind::Io, "cannot write checkpoint " + path.string() + ": " + e.what());
  }
}

Trainer Trainer::load(const fs::path& path) {
  require(fs::is_regular_file(path), "checkpoint not found: " + path.string(), ErrorKind::Io);
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Io, "cannot read checkpoint " + path.string() + ": " + e.what());
  }
  const auto version = read_string(archive, "version");
  require(version == kCheckpointVersion, "unsupported checkpoint version '" + version + "'", ErrorKind::Io);
  auto config = TrainConfig::parse(read_string(archive, "config"));

  std::optional<SyncExpert> expert;
  if (read_int(archive, "has_expert") != 0) {
    torch::serialize::InputArchive options_archive;
    archive.read("expert_options", options_archive);
    SyncExpertOptions options;
    options.embedding = read_int(options_archive, "embedding");
    options.base_channels = read_int(options_archive, "base_channels");
    SyncExpert loaded(options);
    read_module(archive, "expert", *loaded);
    loaded->freeze();
    expert = loaded;
  }

  Trainer trainer(config, expert);
  read_module(archive, "generator", *trainer.generator_);
  read_module(archive, "discriminator", *trainer.discriminator_);
  torch::serialize::InputArchive g_opt, d_opt;
  archive.read("generator_optimizer", g_opt);
  archive.read("discriminator_optimizer", d_opt);
  trainer.generator_optimizer_->load(g_opt);
  trainer.discriminator_optimizer_->load(d_opt);
  trainer.step_ = read_int(archive, "step");
  trainer.epoch_ = read_int(archive, "epoch");
  std::istringstream rng_state(read_string(archive, "rng"));
  rng_state >> trainer.rng_;
  return trainer;
}

Checkpoint fit(const TrainConfig& config, const std::vector<Clip>& clips, const fs::path& out_dir, FitOptions options) {
  config.validate();
  require(!clips.empty(), "training needs at least one clip", ErrorKind::InsufficientData);
  try {
    fs::create_directories(out_dir);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Io, "cannot create output directory " + out_dir.string() + ": " + e.what());
  }
  io::write_text_file(out_dir / "config.txt", config.serialize());

  std::vector<TrainingSample> samples;
  samples.reserve(clips.size());
  for (const auto& clip : clips) samples.push_back(prepare_sample(clip, config.k, config.num_generated));

  auto expert = options.expert;
  if (config.use_syn_loss && !expert) {
    std::vector<Clip> cropped;
    for (const auto& clip : clips) {
      Clip c = clip;
      if (c.height() != kFrameSize || c.width() != kFrameSize) c.frames = crop_frames(c.frames, full_frame_box);
      cropped.push_back(std::move(c));
    }
    SyncPretrainOptions sync_options;
    sync_options.steps = config.sync_pretrain_steps;
    sync_options.batch_size = config.sync_batch_size;
    sync_options.learning_rate = config.sync_learning_rate;
    sync_options.seed = config.seed;
    SyncExpertOptions expert_options;
    expert_options.embedding = config.sync_embedding;
    expert_options.base_channels = config.sync_base_channels;
    expert = pretrain_sync_expert(cropped, sync_options, expert_options);
  }

  Trainer trainer(config, expert);
  const auto log_path = out_dir / "train_log.csv";
  const bool fresh_log = !fs::exists(log_path);
  std::ofstream log(log_path, std::ios::app);
  require(log.good(), "cannot open training log " + log_path.string(), ErrorKind::Io);
  if (fresh_log) log << "step,epoch,gen,syn,disc,total,lambda1,lambda2,lambda3\n";

  std::vector<size_t> order(samples.size());
  bool stopped = false;
  for (int64_t epoch = 0; epoch < config.epochs && !stopped; ++epoch) {
    trainer.set_epoch(epoch);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(config.seed * 0x9e3779b97f4a7c15ULL + static_cast<uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    std::vector<TrainingSample> epoch_samples;
    for (auto i : order) epoch_samples.push_back(samples[i]);

    for (size_t begin = 0; begin < epoch_samples.size(); begin += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(epoch_samples.size(), begin + static_cast<size_t>(config.batch_size));
      const auto report = trainer.train_step(collate(epoch_samples, begin, end));
      log << trainer.step() << ',' << epoch << ',' << format_double(report.gen) << ',' << format_double(report.syn)
          << ',' << format_double(report.disc) << ',' << format_double(report.total) << ','
          << report.weights.gen << ',' << report.weights.syn << ',' << report.weights.disc << '\n';
      log.flush();
      if (options.on_step) options.on_step(trainer, report);
      if (config.checkpoint_every > 0 && trainer.step() % config.checkpoint_every == 0) {
        trainer.save(out_dir / ("checkpoint_" + std::to_string(trainer.step()) + ".pt"));
      }
      if (options.stop && options.stop(trainer)) {
        stopped = true;
        break;
      }
    }
    if (!stopped) trainer.set_epoch(epoch + 1);
  }
  const auto final_path = out_dir / "final.pt";
  trainer.save(final_path);
  return {final_path, trainer.step(), trainer.epoch()};
}

}  // namespace textface
