#include <textface/attention.hpp>

#include <textface/error.hpp>

#include <opencv2/imgproc.hpp>

#include <cmath>

namespace textface {

namespace F = torch::nn::functional;

AttentionCore cross_attention(const torch::Tensor& query, const torch::Tensor& key, const torch::Tensor& value,
                              int64_t heads) {
  auto q = query.dim() == 2 ? query.unsqueeze(0) : query;
  auto k = key.dim() == 2 ? key.unsqueeze(0) : key;
  auto v = value.dim() == 2 ? value.unsqueeze(0) : value;
  require(q.dim() == 3 && k.dim() == 3 && v.dim() == 3, "attention inputs must be [T, d] or [B, T, d]");
  const int64_t batch = q.size(0), t = q.size(1), d = q.size(2), s = k.size(1);
  require(k.size(0) == batch && v.size(0) == batch, "attention batch sizes differ");
  require(k.size(2) == d && v.size(2) == d, "attention feature widths differ");
  require(v.size(1) == s && s >= 1 && t >= 1, "keys and values must share a nonempty length");
  require(heads >= 1 && d % heads == 0, "model width must be divisible by the head count");
  const int64_t dh = d / heads;

  auto split = [&](const torch::Tensor& x, int64_t len) { return x.reshape({batch, len, heads, dh}).transpose(1, 2); };
  auto qh = split(q, t), kh = split(k, s), vh = split(v, s);
  auto logits = torch::matmul(qh, kh.transpose(-1, -2)) / std::sqrt(static_cast<double>(dh));
  auto weights = torch::softmax(logits, -1);                         // [B, h, T, S]
  auto text_out = torch::matmul(weights, vh);                        // [B, h, T, dh]
  auto spatial = torch::matmul(weights.transpose(-1, -2), text_out); // [B, h, S, dh]

  auto merge = [&](const torch::Tensor& x, int64_t len) { return x.transpose(1, 2).reshape({batch, len, d}); };
  return {weights, merge(text_out, t), merge(spatial, s)};
}

CrossAttentionImpl::CrossAttentionImpl(int64_t d_model, int64_t heads) : heads_(heads) {
  require(heads >= 1 && d_model % heads == 0, "model width must be divisible by the head count");
  query_ = register_module("query", torch::nn::Linear(d_model, d_model));
  key_ = register_module("key", torch::nn::Linear(d_model, d_model));
  value_ = register_module("value", torch::nn::Linear(d_model, d_model));
  output_ = register_module("output", torch::nn::Linear(d_model, d_model));
}

AttentionResult CrossAttentionImpl::forward(const torch::Tensor& text, const torch::Tensor& grid) {
  require(grid.dim() == 4 && grid.size(0) == 1, "cross-attention expects a single [1, C, H, W] grid");
  require(text.dim() == 2 && text.size(1) == grid.size(1), "text width must match the grid channels");
  const int64_t c = grid.size(1), h = grid.size(2), w = grid.size(3);
  auto tokens = grid.flatten(2).transpose(1, 2);  // [1, S, C]
  auto core = cross_attention(query_(text).unsqueeze(0), key_(tokens), value_(tokens), heads_);
  auto fused = output_(core.spatial).transpose(1, 2).reshape({1, c, h, w});
  return {fused, {core.weights.squeeze(0)}};
}

MultiScaleFusionImpl::MultiScaleFusionImpl(int64_t d_model, int64_t heads, FusionFlags flags) : flags_(flags) {
  global_ = register_module("global_attention", CrossAttention(d_model, heads));
  local_ = register_module("local_attention", CrossAttention(d_model, heads));
  set_flags(flags);
}

void MultiScaleFusionImpl::set_flags(FusionFlags flags) {
  flags_ = flags;
  for (auto& p : global_->parameters()) p.set_requires_grad(flags_.global_ca);
  for (auto& p : local_->parameters()) p.set_requires_grad(flags_.local_ca);
}

FusedFeatures MultiScaleFusionImpl::forward(const VisualFeatures& visual, const std::vector<TextFeatures>& emotion,
                                            const std::vector<TextFeatures>& linguistic) {
  const auto& grid = visual.grid;
  require(grid.dim() == 4, "fusion expects a [B, C, H, W] visual grid");
  const auto batch = static_cast<size_t>(grid.size(0));
  require(emotion.size() == batch && linguistic.size() == batch, "one caption per visual grid expected");

  auto branch = [&](CrossAttention& attention, const std::vector<TextFeatures>& text, bool enabled) {
    if (!enabled) return AttentionResult{grid, {}};
    std::vector<torch::Tensor> fused;
    AttentionResult out;
    for (size_t b = 0; b < batch; ++b) {
      auto r = attention->forward(text[b].tokens, grid.narrow(0, static_cast<int64_t>(b), 1));
      fused.push_back(r.fused_grid);
      out.weights.push_back(r.weights.front());
    }
    out.fused_grid = torch::cat(fused, 0);
    return out;
  };

  FusedFeatures out;
  out.emo = branch(global_, emotion, flags_.global_ca);
  out.ling = branch(local_, linguistic, flags_.local_ca);
  out.concat = torch::cat({out.emo.fused_grid, out.ling.fused_grid}, 1);
  return out;
}

FusedFeatures fuse_multiscale(MultiScaleFusion& fusion, const VisualFeatures& visual,
                              const std::vector<TextFeatures>& emotion, const std::vector<TextFeatures>& linguistic) {
  return fusion->forward(visual, emotion, linguistic);
}

torch::Tensor attention_map(const torch::Tensor& weights, int64_t grid_height, int64_t grid_width) {
  require(weights.dim() == 3, "attention weights must be [heads, T, S]");
  require(weights.size(2) == grid_height * grid_width, "attention weights do not match the grid size");
  auto map = weights.detach().to(torch::kFloat64).mean({0, 1}).reshape({grid_height, grid_width});
  const double lo = map.min().item<double>();
  const double hi = map.max().item<double>();
  if (!(hi - lo > 1e-12)) return torch::zeros({grid_height, grid_width}, torch::kFloat64);
  return ((map - lo) / (hi - lo)).clamp(0.0, 1.0);
}

torch::Tensor upsample_map(const torch::Tensor& map, int64_t size) {
  require(map.dim() == 2, "heat map must be [H, W]");
  auto up = F::interpolate(map.unsqueeze(0).unsqueeze(0).to(torch::kFloat64),
                           F::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{size, size})
                               .mode(torch::kBilinear)
                               .align_corners(false));
  return up.squeeze(0).squeeze(0).clamp(0.0, 1.0);
}

torch::Tensor overlay_heatmap(const torch::Tensor& frame, const torch::Tensor& map, double alpha) {
  require(frame.dim() == 3 && frame.size(0) == 3, "overlay expects a [3, H, W] frame");
  require(map.dim() == 2 && map.size(0) == frame.size(1) && map.size(1) == frame.size(2),
          "heat map must match the frame resolution");
  auto gray = (map.to(torch::kFloat32).clamp(0.0, 1.0) * 255.0).round().to(torch::kUInt8).contiguous();
  cv::Mat heat(static_cast<int>(gray.size(0)), static_cast<int>(gray.size(1)), CV_8UC1, gray.data_ptr());
  cv::Mat colored;
  cv::applyColorMap(heat, colored, cv::COLORMAP_JET);
  auto color = torch::from_blob(colored.data, {colored.rows, colored.cols, 3}, torch::kUInt8)
                   .clone()
                   .flip({2})  // BGR -> RGB
                   .permute({2, 0, 1})
                   .to(torch::kFloat32)
                   .div(255.0);
  return (frame.to(torch::kFloat32) * (1.0 - alpha) + color * alpha).clamp(0.0, 1.0);
}

}  // namespace textface
