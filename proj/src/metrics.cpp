#include <textface/metrics.hpp>

#include <textface/error.hpp>
#include <textface/preprocess.hpp>

#include <json.hpp>

#include <cmath>
#include <numeric>

namespace textface {

namespace F = torch::nn::functional;

namespace {

torch::Tensor as_batch(const torch::Tensor& frames) {
  require(frames.dim() == 3 || frames.dim() == 4, "expected [3, H, W] or [N, 3, H, W] frames");
  auto x = frames.dim() == 3 ? frames.unsqueeze(0) : frames;
  require(x.size(1) == 3, "frames must have three channels");
  return x.to(torch::kFloat64);
}

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b) {
  require(a.sizes() == b.sizes(), "frame shapes differ");
}

torch::Tensor gaussian_window() {
  auto x = torch::arange(kSsimWindow, torch::kFloat64) - static_cast<double>(kSsimWindow / 2);
  auto g = torch::exp(-(x * x) / (2.0 * kSsimSigma * kSsimSigma));
  g = g / g.sum();
  return torch::outer(g, g).reshape({1, 1, kSsimWindow, kSsimWindow});
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  int64_t count = 0;
  for (const auto& v : values) {
    if (!v) return std::nullopt;
    sum += *v;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

}  // namespace

double psnr(const torch::Tensor& a, const torch::Tensor& b, double max_val) {
  auto x = as_batch(a), y = as_batch(b);
  require_same_shape(x, y);
  require(max_val > 0, "max_val must be positive");
  auto mse = (x - y).pow(2).mean({1, 2, 3});
  double total = 0.0;
  for (int64_t i = 0; i < mse.size(0); ++i) {
    const double m = mse[i].item<double>();
    const double value = m > 0 ? 10.0 * std::log10(max_val * max_val / m) : kPsnrCap;
    total += std::min(value, kPsnrCap);
  }
  return total / static_cast<double>(mse.size(0));
}

double ssim(const torch::Tensor& a, const torch::Tensor& b) {
  auto x = as_batch(a), y = as_batch(b);
  require_same_shape(x, y);
  require(x.size(2) >= kSsimWindow && x.size(3) >= kSsimWindow, "frames are smaller than the 11x11 SSIM window");
  auto ga = x.mean(1, true), gb = y.mean(1, true);
  static const auto window = gaussian_window();
  auto filter = [&](const torch::Tensor& t) { return F::conv2d(t, window); };
  auto mu_a = filter(ga), mu_b = filter(gb);
  auto var_a = filter(ga * ga) - mu_a * mu_a;
  auto var_b = filter(gb * gb) - mu_b * mu_b;
  auto cov = filter(ga * gb) - mu_a * mu_b;
  auto map = ((2 * mu_a * mu_b + kSsimC1) * (2 * cov + kSsimC2)) /
             ((mu_a * mu_a + mu_b * mu_b + kSsimC1) * (var_a + var_b + kSsimC2));
  return map.mean().item<double>();
}

RandomConvEmbedder::RandomConvEmbedder(uint64_t seed, std::vector<int64_t> widths) {
  require(!widths.empty(), "embedder needs at least one layer");
  auto generator = at::detail::createCPUGenerator(seed);
  int64_t in = 3;
  for (auto out : widths) {
    auto w = at::randn({out, in, 3, 3}, generator, torch::TensorOptions().dtype(torch::kFloat64));
    weights_.push_back(w * std::sqrt(2.0 / static_cast<double>(in * 9)));
    in = out;
  }
}

std::vector<torch::Tensor> RandomConvEmbedder::features(const torch::Tensor& frames) const {
  torch::NoGradGuard no_grad;
  auto x = as_batch(frames) * 2.0 - 1.0;
  std::vector<torch::Tensor> out;
  for (const auto& w : weights_) {
    x = torch::relu(F::conv2d(x, w, F::Conv2dFuncOptions().stride(2).padding(1)));
    out.push_back(x);
  }
  return out;
}

double lpips(const torch::Tensor& a, const torch::Tensor& b, const PerceptualEmbedder* embedder) {
  if (embedder == nullptr) throw Error(ErrorKind::ProviderUnavailable, "LPIPS needs a perceptual embedder");
  auto x = as_batch(a), y = as_batch(b);
  require_same_shape(x, y);
  auto fa = embedder->features(x), fb = embedder->features(y);
  require(fa.size() == fb.size() && !fa.empty(), "embedder returned inconsistent layers");
  auto per_frame = torch::zeros({x.size(0)}, torch::kFloat64);
  for (size_t l = 0; l < fa.size(); ++l) {
    auto na = fa[l] / (fa[l].pow(2).sum(1, true).sqrt() + 1e-10);
    auto nb = fb[l] / (fb[l].pow(2).sum(1, true).sqrt() + 1e-10);
    per_frame += (na - nb).pow(2).sum(1).mean({1, 2});
  }
  return per_frame.mean().item<double>();
}

RandomProjectionFeatures::RandomProjectionFeatures(uint64_t seed, int64_t dim, int64_t frame_size) {
  require(dim >= 1 && frame_size >= 1, "projection sizes must be positive");
  auto generator = at::detail::createCPUGenerator(seed);
  const int64_t in = 3 * frame_size * frame_size;
  projection_ = at::randn({in, dim}, generator, torch::TensorOptions().dtype(torch::kFloat64)) /
                std::sqrt(static_cast<double>(in));
}

torch::Tensor RandomProjectionFeatures::features(const torch::Tensor& frames) const {
  auto x = as_batch(frames).flatten(1);
  require(x.size(1) == projection_.size(0), "frame size does not match the projection");
  return x.matmul(projection_);
}

GaussianStats fit_gaussian(const torch::Tensor& features, bool regularize) {
  require(features.dim() == 2 && features.size(0) >= 1, "features must be a non-empty [n, D] matrix");
  auto x = features.to(torch::kFloat64);
  const int64_t n = x.size(0), d = x.size(1);
  GaussianStats stats;
  stats.mean = x.mean(0);
  auto centered = x - stats.mean;
  stats.cov = n > 1 ? centered.t().matmul(centered) / static_cast<double>(n - 1)
                    : torch::zeros({d, d}, torch::kFloat64);
  if (n <= d) {
    if (!regularize) {
      throw Error(ErrorKind::InsufficientData, "covariance of " + std::to_string(n) + " samples in " +
                                                   std::to_string(d) + " dimensions is degenerate");
    }
    const double alpha = static_cast<double>(d) / static_cast<double>(n + d);
    const double scale = stats.cov.trace().item<double>() / static_cast<double>(d);
    stats.cov = (1.0 - alpha) * stats.cov + alpha * scale * torch::eye(d, torch::kFloat64);
  }
  return stats;
}

torch::Tensor sqrt_psd(const torch::Tensor& matrix) {
  require(matrix.dim() == 2 && matrix.size(0) == matrix.size(1), "matrix square root needs a square matrix");
  auto sym = (matrix.to(torch::kFloat64) + matrix.to(torch::kFloat64).t()) / 2.0;
  auto [values, vectors] = torch::linalg_eigh(sym);
  const double largest = std::max(1.0, values.abs().max().item<double>());
  const double lowest = values.min().item<double>();
  require(lowest >= -1e-8 * largest, "matrix is not positive semidefinite (eigenvalue " + std::to_string(lowest) + ")",
          ErrorKind::NonFinite);
  auto root = values.clamp_min(0.0).sqrt();
  return vectors.matmul(torch::diag(root)).matmul(vectors.t());
}

double fid_from_stats(const GaussianStats& a, const GaussianStats& b) {
  require(a.mean.sizes() == b.mean.sizes() && a.cov.sizes() == b.cov.sizes(), "feature dimensions differ");
  auto diff = (a.mean - b.mean).to(torch::kFloat64);
  auto root_a = sqrt_psd(a.cov);
  // Tr (S_a S_b)^(1/2) = Tr (S_a^(1/2) S_b S_a^(1/2))^(1/2), which is symmetric.
  auto inner = sqrt_psd(root_a.matmul(b.cov.to(torch::kFloat64)).matmul(root_a));
  const double value = diff.dot(diff).item<double>() + a.cov.trace().item<double>() +
                       b.cov.trace().item<double>() - 2.0 * inner.trace().item<double>();
  require(std::isfinite(value), "FID is not finite", ErrorKind::NonFinite);
  return std::max(value, 0.0);
}

double fid(const torch::Tensor& features_a, const torch::Tensor& features_b, bool regularize) {
  return fid_from_stats(fit_gaussian(features_a, regularize), fit_gaussian(features_b, regularize));
}

double lip_lmd(const std::vector<std::vector<Point2>>& generated, const std::vector<std::vector<Point2>>& ground_truth,
               double norm_len) {
  require(norm_len > 0, "LipLMD normalization length must be positive");
  require(!generated.empty() && generated.size() == ground_truth.size(), "landmark frame counts differ");
  double total = 0.0;
  int64_t count = 0;
  for (size_t f = 0; f < generated.size(); ++f) {
    require(generated[f].size() == ground_truth[f].size() && !generated[f].empty(), "landmark counts differ");
    for (size_t i = 0; i < generated[f].size(); ++i) {
      total += std::hypot(generated[f][i].x - ground_truth[f][i].x, generated[f][i].y - ground_truth[f][i].y);
      ++count;
    }
  }
  return total / static_cast<double>(count) / norm_len;
}

SyntheticLandmarkFitter::SyntheticLandmarkFitter(int64_t identity, double max_opening, double resolution)
    : geometry_(face_geometry(identity)) {
  require(resolution > 0 && max_opening >= 0, "invalid fitter grid");
  std::vector<torch::Tensor> renders;
  for (double o = 0.0; o <= max_opening + 1e-9; o += resolution) {
    openings_.push_back(o);
    renders.push_back(render_face(geometry_, o, kFrameSize).flatten().to(torch::kFloat64));
  }
  renders_ = torch::stack(renders);
}

Landmarks SyntheticLandmarkFitter::detect(const torch::Tensor& frame) const {
  require(frame.dim() == 3 && frame.size(0) == 3 && frame.size(1) == kFrameSize && frame.size(2) == kFrameSize,
          "landmark fitter expects a [3, 96, 96] frame");
  auto x = frame.flatten().to(torch::kFloat64);
  auto errors = (renders_ - x).pow(2).sum(1);
  const auto best = errors.argmin().item<int64_t>();
  return face_landmarks(geometry_, openings_[static_cast<size_t>(best)]);
}

double csim(const torch::Tensor& a, const torch::Tensor& b) {
  require(a.numel() == b.numel() && a.numel() > 0, "identity vectors must have equal non-zero length");
  auto x = a.flatten().to(torch::kFloat64), y = b.flatten().to(torch::kFloat64);
  const double na = x.norm().item<double>(), nb = y.norm().item<double>();
  require(na > 0 && nb > 0, "identity vector is zero");
  return std::clamp(x.dot(y).item<double>() / (na * nb), -1.0, 1.0);
}

torch::Tensor ColorHistogramIdentity::embed(const torch::Tensor& frame) const {
  require(frame.dim() == 3 && frame.size(0) == 3, "identity provider expects a [3, H, W] frame");
  auto x = frame.to(torch::kFloat64).clamp(0.0, 1.0);
  std::vector<torch::Tensor> parts{x.mean({1, 2}) - 0.5};
  const double pixels = static_cast<double>(x.size(1) * x.size(2));
  for (int64_t c = 0; c < 3; ++c) {
    parts.push_back(torch::histc(x[c], 8, 0.0, 1.0) / pixels - 0.125);
  }
  return torch::cat(parts);
}

EvaluationProviders EvaluationProviders::toy(uint64_t seed) {
  EvaluationProviders providers;
  providers.perceptual = std::make_shared<RandomConvEmbedder>(seed);
  providers.features = std::make_shared<RandomProjectionFeatures>(seed);
  providers.identity = std::make_shared<ColorHistogramIdentity>();
  providers.synthetic_landmarks = true;
  return providers;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json root;
  for (const auto& [name, value] : metrics) {
    nlohmann::ordered_json entry;
    entry["mean"] = value.mean ? nlohmann::ordered_json(*value.mean) : nlohmann::ordered_json(nullptr);
    auto per_clip = nlohmann::ordered_json::array();
    for (const auto& v : value.per_clip) per_clip.push_back(v ? nlohmann::ordered_json(*v) : nullptr);
    entry["per_clip"] = per_clip;
    if (!value.reason.empty()) entry["reason"] = value.reason;
    root[name] = entry;
  }
  nlohmann::ordered_json meta;
  meta["n_clips"] = n_clips;
  meta["n_frames"] = n_frames;
  meta["providers"] = providers;
  root["meta"] = meta;
  return root.dump(2) + "\n";
}

MetricsReport evaluate_items(const std::vector<EvaluationItem>& items, const EvaluationProviders& providers) {
  require(!items.empty(), "evaluation needs at least one clip", ErrorKind::InsufficientData);
  MetricsReport report;
  auto& psnr_m = report.metrics["psnr"];
  auto& ssim_m = report.metrics["ssim"];
  auto& lpips_m = report.metrics["lpips"];
  auto& fid_m = report.metrics["fid"];
  auto& lmd_m = report.metrics["lip_lmd"];
  auto& csim_m = report.metrics["csim"];

  report.providers["lpips"] = providers.perceptual ? providers.perceptual->name() : "none";
  report.providers["fid"] = providers.features ? providers.features->name() : "none";
  report.providers["csim"] = providers.identity ? providers.identity->name() : "none";
  report.providers["lip_lmd"] = providers.synthetic_landmarks ? "synthetic-fit" : "none";

  for (const auto& item : items) {
    const auto& clip = item.clip;
    const int64_t g = item.generated.size(0);
    require(item.k >= 1 && item.k + g <= clip.num_frames(), "generated frames exceed clip " + clip.id);
    auto generated = item.generated.detach().to(torch::kFloat64);
    auto truth = clip.frames.narrow(0, item.k, g).to(torch::kFloat64);
    require_same_shape(generated, truth);
    report.n_clips += 1;
    report.n_frames += g;

    psnr_m.per_clip.push_back(psnr(generated, truth));
    ssim_m.per_clip.push_back(ssim(generated, truth));

    if (providers.perceptual) {
      lpips_m.per_clip.push_back(lpips(generated, truth, providers.perceptual.get()));
    } else {
      lpips_m.per_clip.push_back(std::nullopt);
      lpips_m.reason = "no perceptual embedder";
    }

    if (providers.features) {
      fid_m.per_clip.push_back(fid(providers.features->features(generated), providers.features->features(truth)));
    } else {
      fid_m.per_clip.push_back(std::nullopt);
      fid_m.reason = "no feature provider";
    }

    if (providers.synthetic_landmarks && clip.identity_id) {
      SyntheticLandmarkFitter fitter(*clip.identity_id);
      std::vector<std::vector<Point2>> gen_lips, gt_lips;
      double norm = 0.0;
      for (int64_t f = 0; f < g; ++f) {
        const auto gt = clip.landmarks ? (*clip.landmarks)[static_cast<size_t>(item.k + f)] : fitter.detect(truth[f]);
        gen_lips.push_back(lip_points(fitter.detect(generated[f])));
        gt_lips.push_back(lip_points(gt));
        norm += inter_ocular_distance(gt);
      }
      lmd_m.per_clip.push_back(lip_lmd(gen_lips, gt_lips, norm / static_cast<double>(g)));
    } else {
      lmd_m.per_clip.push_back(std::nullopt);
      lmd_m.reason = providers.synthetic_landmarks ? "clip " + clip.id + " has no synthetic identity"
                                                   : "no landmark provider";
    }

    if (providers.identity) {
      double total = 0.0;
      for (int64_t f = 0; f < g; ++f) {
        total += csim(providers.identity->embed(generated[f]), providers.identity->embed(truth[f]));
      }
      csim_m.per_clip.push_back(total / static_cast<double>(g));
    } else {
      csim_m.per_clip.push_back(std::nullopt);
      csim_m.reason = "no identity provider";
    }
  }
  for (auto& [name, value] : report.metrics) {
    value.mean = mean_of(value.per_clip);
    if (value.mean) value.reason.clear();
  }
  return report;
}

MetricsReport evaluate(TalkingFaceGenerator& generator, const std::vector<Clip>& clips, int64_t k,
                       const EvaluationProviders& providers) {
  require(!clips.empty(), "evaluation needs at least one clip", ErrorKind::InsufficientData);
  torch::NoGradGuard no_grad;
  generator->eval();
  std::vector<EvaluationItem> items;
  for (const auto& clip : clips) {
    Clip cropped = clip;
    if (cropped.height() != kFrameSize || cropped.width() != kFrameSize) {
      cropped.frames = crop_frames(cropped.frames, full_frame_box);
    }
    auto out = generate_for_clip(generator, cropped, k);
    items.push_back({out.frames[0].to(torch::kFloat32), std::move(cropped), k});
  }
  return evaluate_items(items, providers);
}

}  // namespace textface
