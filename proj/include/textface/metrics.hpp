#pragma once

#include <textface/model.hpp>
#include <textface/synth.hpp>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace textface {

/// Aggregation stand-in for the infinite PSNR of identical frames.
inline constexpr double kPsnrCap = 100.0;

/// Mean over frames of 10 log10(max_val^2 / MSE), each frame capped at 100 dB.
/// Accepts [3, H, W] or [N, 3, H, W].
double psnr(const torch::Tensor& a, const torch::Tensor& b, double max_val = 1.0);

inline constexpr int64_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Gaussian-windowed SSIM on the channel-mean gray image, averaged over every
/// fully contained 11x11 window and over frames.
double ssim(const torch::Tensor& a, const torch::Tensor& b);

/// Layered perceptual features for LPIPS.
class PerceptualEmbedder {
 public:
  virtual ~PerceptualEmbedder() = default;
  /// [N, 3, H, W] -> one [N, C_l, H_l, W_l] map per layer.
  virtual std::vector<torch::Tensor> features(const torch::Tensor& frames) const = 0;
  virtual std::string name() const = 0;
};

/// Fixed seeded stack of random 3x3 convolutions with ReLU and stride 2.
class RandomConvEmbedder final : public PerceptualEmbedder {
 public:
  explicit RandomConvEmbedder(uint64_t seed = 0, std::vector<int64_t> widths = {16, 32, 64});
  std::vector<torch::Tensor> features(const torch::Tensor& frames) const override;
  std::string name() const override { return "random-conv"; }

 private:
  std::vector<torch::Tensor> weights_;
};

/// Sum over layers of the spatially averaged squared distance between
/// channel-normalized features, averaged over frames. Throws
/// Error(ProviderUnavailable) without an embedder.
double lpips(const torch::Tensor& a, const torch::Tensor& b, const PerceptualEmbedder* embedder);

/// Frame-level feature vectors for FID.
class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  /// [N, 3, H, W] -> [N, D] float64.
  virtual torch::Tensor features(const torch::Tensor& frames) const = 0;
  virtual std::string name() const = 0;
};

/// Seeded Gaussian random projection of raw pixels.
class RandomProjectionFeatures final : public FeatureProvider {
 public:
  explicit RandomProjectionFeatures(uint64_t seed = 0, int64_t dim = 64, int64_t frame_size = kFrameSize);
  torch::Tensor features(const torch::Tensor& frames) const override;
  std::string name() const override { return "random-projection"; }

 private:
  torch::Tensor projection_;  // [3 * H * W, D]
};

struct GaussianStats {
  torch::Tensor mean;  // [D] float64
  torch::Tensor cov;   // [D, D] float64
};

/// Sample mean and unbiased covariance of [n, D] features. When n <= D the
/// covariance is shrunk towards (tr / D) I with weight D / (n + D) if
/// `regularize`, otherwise Error(InsufficientData) is thrown.
GaussianStats fit_gaussian(const torch::Tensor& features, bool regularize = true);

/// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).
double fid_from_stats(const GaussianStats& a, const GaussianStats& b);

double fid(const torch::Tensor& features_a, const torch::Tensor& features_b, bool regularize = true);

/// Square root of a symmetric PSD matrix by eigendecomposition; eigenvalues
/// down to -1e-8 (relative to the largest) are clipped to zero, anything more
/// negative throws Error(NonFinite).
torch::Tensor sqrt_psd(const torch::Tensor& matrix);

/// Mean Euclidean distance over lip points and frames, divided by norm_len.
double lip_lmd(const std::vector<std::vector<Point2>>& generated, const std::vector<std::vector<Point2>>& ground_truth,
               double norm_len);

class LandmarkDetector {
 public:
  virtual ~LandmarkDetector() = default;
  /// Full landmark layout (eyes, outer lip, inner lip) for a [3, H, W] frame.
  virtual Landmarks detect(const torch::Tensor& frame) const = 0;
  virtual std::string name() const = 0;
};

/// Fits the synthetic face model of a known identity: picks the mouth opening
/// whose rendering is closest in squared error and returns its landmarks.
class SyntheticLandmarkFitter final : public LandmarkDetector {
 public:
  explicit SyntheticLandmarkFitter(int64_t identity, double max_opening = SynthConfig{}.max_opening,
                                   double resolution = 0.25);
  Landmarks detect(const torch::Tensor& frame) const override;
  std::string name() const override { return "synthetic-fit"; }

 private:
  FaceGeometry geometry_;
  std::vector<double> openings_;
  torch::Tensor renders_;  // [K, 3 * H * W]
};

/// Cosine similarity; zero vectors throw Error(InvalidInput).
double csim(const torch::Tensor& a, const torch::Tensor& b);

class IdentityProvider {
 public:
  virtual ~IdentityProvider() = default;
  /// [3, H, W] -> [D] identity vector.
  virtual torch::Tensor embed(const torch::Tensor& frame) const = 0;
  virtual std::string name() const = 0;
};

/// Mean color followed by per-channel 8-bin intensity histograms, centered
/// on 0.5 so that distinct palettes point in distinct directions.
class ColorHistogramIdentity final : public IdentityProvider {
 public:
  torch::Tensor embed(const torch::Tensor& frame) const override;
  std::string name() const override { return "color-histogram"; }
};

struct EvaluationProviders {
  std::shared_ptr<const PerceptualEmbedder> perceptual;
  std::shared_ptr<const FeatureProvider> features;
  std::shared_ptr<const IdentityProvider> identity;
  bool synthetic_landmarks = true;

  /// Seeded toy providers for every metric.
  static EvaluationProviders toy(uint64_t seed = 0);
};

struct MetricValue {
  std::optional<double> mean;
  std::vector<std::optional<double>> per_clip;
  std::string reason;  // why the metric is null
};

struct MetricsReport {
  std::map<std::string, MetricValue> metrics;
  int64_t n_clips = 0;
  int64_t n_frames = 0;
  std::map<std::string, std::string> providers;

  /// {metric: {mean, per_clip}, meta: {n_clips, n_frames, providers}}.
  std::string to_json() const;
};

/// Generated frames paired with the clip they reproduce (frames k..N-1).
struct EvaluationItem {
  torch::Tensor generated;  // [G, 3, 96, 96]
  Clip clip;                // frames already 96x96
  int64_t k = 0;
};

MetricsReport evaluate_items(const std::vector<EvaluationItem>& items, const EvaluationProviders& providers);

/// Generates every clip from its first k frames and scores frames k..N-1.
MetricsReport evaluate(TalkingFaceGenerator& generator, const std::vector<Clip>& clips, int64_t k,
                       const EvaluationProviders& providers);

}  // namespace textface
