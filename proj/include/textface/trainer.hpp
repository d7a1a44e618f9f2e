#pragma once

#include <textface/discriminator.hpp>
#include <textface/losses.hpp>
#include <textface/model.hpp>
#include <textface/preprocess.hpp>

#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace textface {

namespace fs = std::filesystem;

/// Training run description. Stored as `key = value` text next to every
/// checkpoint; see README for the key list.
struct TrainConfig {
  uint64_t seed = 0;
  int64_t batch_size = 4;
  int64_t epochs = 600;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double disc_learning_rate = 1e-4;
  std::string lr_schedule = "constant";  // or "cosine": generator rate decays to 1% over `epochs`
  int64_t k = 5;
  int64_t num_generated = kMaxClipFrames - 5;

  bool global_ca = true;
  bool local_ca = true;
  bool use_syn_loss = true;
  bool use_disc_loss = true;

  std::string preset = "full";  // "full" or "desk"; base for the model keys below
  ModelConfig model;

  int64_t disc_base_channels = 32;
  int64_t disc_frames_per_clip = 0;  // 0 = every generated frame

  int64_t sync_pretrain_steps = 1500;
  int64_t sync_batch_size = 32;
  double sync_learning_rate = 1e-3;
  int64_t sync_embedding = 64;
  int64_t sync_base_channels = 16;

  int64_t checkpoint_every = 0;  // steps; 0 = final checkpoint only
  std::string data_root;
  std::string out_dir;

  /// Parses `key = value` lines; `#` starts a comment. Unknown keys and
  /// malformed values throw Error(InvalidInput). A `preset` key is applied
  /// before every other key regardless of position.
  static TrainConfig parse(const std::string& text);
  static TrainConfig load(const fs::path& path);
  std::string serialize() const;

  /// Model description with the ablation flags and generation length applied.
  ModelConfig model_config() const;
  FusionFlags fusion_flags() const { return {global_ca, local_ca}; }
  void validate() const;

  /// Applies a comma-separated ablation list (global_ca, local_ca, syn, disc).
  void apply_ablations(const std::string& list);
};

/// One clip prepared for training: cropped, aligned, padded and masked.
struct TrainingSample {
  std::string id;
  torch::Tensor reference;  // [3k, 96, 96]
  torch::Tensor target;     // [G, 3, 96, 96]; padded with the last frame
  torch::Tensor mask;       // [G]; 1 = real frame
  torch::Tensor mel;        // [4 (k + G), 80]
  std::vector<int64_t> caption;
  std::vector<int64_t> slice;
};

TrainingSample prepare_sample(const Clip& clip, int64_t k, int64_t num_generated,
                              const FaceDetector& detector = full_frame_box);

struct Batch {
  torch::Tensor reference;  // [B, 3k, 96, 96]
  torch::Tensor target;     // [B, G, 3, 96, 96]
  torch::Tensor mask;       // [B, G]
  torch::Tensor mels;       // [B, F, 80]
  std::vector<std::vector<int64_t>> captions;
  std::vector<std::vector<int64_t>> slices;
  int64_t k = 0;

  int64_t size() const { return reference.size(0); }
};

Batch collate(const std::vector<TrainingSample>& samples, size_t begin, size_t end);
Batch collate(const std::vector<TrainingSample>& samples);

/// Trainable scalars only; frozen providers and experts do not count.
int64_t count_parameters(const torch::nn::Module& module);

inline constexpr const char* kCheckpointVersion = "textface-checkpoint-1";

/// Generator, discriminator, frozen sync expert and their optimizers.
class Trainer {
 public:
  /// Seeds torch with config.seed before constructing any module. Without an
  /// expert the sync term must be disabled.
  explicit Trainer(TrainConfig config, std::optional<SyncExpert> expert = std::nullopt);

  /// One generator update on the weighted total loss, then one discriminator
  /// update. Throws Error(NonFinite) before touching parameters if any loss
  /// term is not finite.
  LossReport train_step(const Batch& batch);

  /// Discriminator loss of the most recent update (0 when disabled).
  double last_discriminator_loss() const { return last_disc_update_; }

  /// Generator learning rate used for updates in `epoch`.
  double generator_learning_rate(int64_t epoch) const;

  void save(const fs::path& path) const;
  static Trainer load(const fs::path& path);

  TalkingFaceGenerator& generator() { return generator_; }
  Discriminator& discriminator() { return discriminator_; }
  std::optional<SyncExpert>& expert() { return expert_; }
  const TrainConfig& config() const { return config_; }

  int64_t step() const { return step_; }
  int64_t epoch() const { return epoch_; }
  void set_epoch(int64_t epoch) { epoch_ = epoch; }

 private:
  std::vector<int64_t> sample_frames(const torch::Tensor& mask_row);

  TrainConfig config_;
  TalkingFaceGenerator generator_{nullptr};
  Discriminator discriminator_{nullptr};
  std::optional<SyncExpert> expert_;
  std::unique_ptr<torch::optim::Adam> generator_optimizer_;
  std::unique_ptr<torch::optim::Adam> discriminator_optimizer_;
  std::mt19937_64 rng_;
  int64_t step_ = 0;
  int64_t epoch_ = 0;
  double last_disc_update_ = 0.0;
};

struct Checkpoint {
  fs::path path;
  int64_t step = 0;
  int64_t epoch = 0;
};

struct FitOptions {
  /// Pretrained expert to reuse; when absent and the sync term is enabled,
  /// one is pretrained on the training clips.
  std::optional<SyncExpert> expert;
  /// Called after every step with the trainer and its report.
  std::function<void(const Trainer&, const LossReport&)> on_step;
  /// Checked after every step; returning true ends training early.
  std::function<bool(Trainer&)> stop;
};

/// Runs config.epochs epochs over `clips` with schedule_weights(epoch),
/// appending one CSV row per step to <out>/train_log.csv. Writes
/// <out>/config.txt, periodic <out>/checkpoint_<step>.pt and <out>/final.pt.
Checkpoint fit(const TrainConfig& config, const std::vector<Clip>& clips, const fs::path& out_dir,
               FitOptions options = {});

}  // namespace textface
