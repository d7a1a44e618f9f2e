#include <textface/attention.hpp>
#include <textface/error.hpp>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace textface;

TEST(CrossAttention, RowsSumToOneAndShapes) {
  torch::manual_seed(0);
  auto core = cross_attention(torch::randn({3, 8}), torch::randn({5, 8}), torch::randn({5, 8}), 2);
  EXPECT_EQ(core.weights.sizes(), (std::vector<int64_t>{1, 2, 3, 5}));
  EXPECT_EQ(core.text_out.sizes(), (std::vector<int64_t>{1, 3, 8}));
  EXPECT_EQ(core.spatial.sizes(), (std::vector<int64_t>{1, 5, 8}));
  EXPECT_TRUE(torch::allclose(core.weights.sum(-1), torch::ones({1, 2, 3}), 0, 1e-6));
}

TEST(CrossAttention, MatchesPerHeadLoops) {
  torch::manual_seed(1);
  const int64_t t = 2, s = 4, d = 6, heads = 3, dh = 2;
  auto q = torch::randn({t, d}, torch::kFloat64), k = torch::randn({s, d}, torch::kFloat64),
       v = torch::randn({s, d}, torch::kFloat64);
  auto core = cross_attention(q, k, v, heads);
  for (int64_t h = 0; h < heads; ++h) {
    for (int64_t i = 0; i < t; ++i) {
      std::vector<double> logits(s);
      double max_logit = -1e300, total = 0;
      for (int64_t j = 0; j < s; ++j) {
        double dot = 0;
        for (int64_t c = 0; c < dh; ++c) dot += q[i][h * dh + c].item<double>() * k[j][h * dh + c].item<double>();
        logits[j] = dot / std::sqrt(static_cast<double>(dh));
        max_logit = std::max(max_logit, logits[j]);
      }
      for (auto& l : logits) total += std::exp(l - max_logit);
      for (int64_t j = 0; j < s; ++j) {
        EXPECT_NEAR(core.weights[0][h][i][j].item<double>(), std::exp(logits[j] - max_logit) / total, 1e-12);
      }
    }
    // spatial = A^T (A V) for this head
    auto a = core.weights[0][h];
    auto vh = v.narrow(1, h * dh, dh);
    auto expected = a.t().matmul(a.matmul(vh));
    EXPECT_TRUE(torch::allclose(core.spatial[0].narrow(1, h * dh, dh), expected, 1e-12, 1e-12));
  }
}

TEST(CrossAttention, RejectsIndivisibleHeads) {
  EXPECT_THROW(cross_attention(torch::randn({2, 6}), torch::randn({3, 6}), torch::randn({3, 6}), 4), Error);
}

TEST(CrossAttention, GradientCheck) {
  torch::manual_seed(2);
  auto weight_t = torch::randn({1, 3, 4}, torch::kFloat64);
  auto weight_s = torch::randn({1, 4, 4}, torch::kFloat64);
  const double err = textface::testing::gradient_error(
      [&](const std::vector<torch::Tensor>& in) {
        auto core = cross_attention(in[0], in[1], in[2], 2);
        return (core.text_out * weight_t).sum() + (core.spatial * weight_s).sum();
      },
      {torch::randn({3, 4}), torch::randn({4, 4}), torch::randn({4, 4})});
  EXPECT_LT(err, 1e-4);
}

TEST(Fusion, ConcatHasTwiceTheChannels) {
  torch::manual_seed(3);
  MultiScaleFusion fusion(8, 2);
  VisualFeatures visual{torch::randn({2, 8, 6, 6}), 5};
  std::vector<TextFeatures> emo{{torch::randn({1, 8}), TextKind::Emotion}, {torch::randn({1, 8}), TextKind::Emotion}};
  std::vector<TextFeatures> ling{{torch::randn({4, 8}), TextKind::Linguistic},
                                 {torch::randn({2, 8}), TextKind::Linguistic}};
  auto fused = fuse_multiscale(fusion, visual, emo, ling);
  EXPECT_EQ(fused.concat.sizes(), (std::vector<int64_t>{2, 16, 6, 6}));
  ASSERT_EQ(fused.emo.weights.size(), 2u);
  EXPECT_EQ(fused.emo.weights[0].sizes(), (std::vector<int64_t>{2, 1, 36}));
  EXPECT_EQ(fused.ling.weights[1].sizes(), (std::vector<int64_t>{2, 2, 36}));
}

TEST(Fusion, DisabledBranchPassesGridThrough) {
  torch::manual_seed(4);
  MultiScaleFusion fusion(8, 2, FusionFlags{false, false});
  VisualFeatures visual{torch::randn({1, 8, 6, 6}), 5};
  auto fused = fuse_multiscale(fusion, visual, {{torch::randn({1, 8}), TextKind::Emotion}},
                               {{torch::randn({3, 8}), TextKind::Linguistic}});
  EXPECT_TRUE(torch::equal(fused.concat, torch::cat({visual.grid, visual.grid}, 1)));
  EXPECT_TRUE(fused.emo.weights.empty());
  EXPECT_TRUE(fused.ling.weights.empty());
}

TEST(AttentionMap, UniformWeightsGiveZeros) {
  auto weights = torch::full({2, 3, 36}, 1.0 / 36);
  EXPECT_TRUE(torch::equal(attention_map(weights, 6, 6), torch::zeros({6, 6}, torch::kFloat64)));
}

TEST(AttentionMap, OneHotMarksItsCell) {
  auto weights = torch::zeros({1, 1, 36});
  weights[0][0][14] = 1.0;
  auto map = attention_map(weights, 6, 6);
  EXPECT_EQ(map[2][2].item<double>(), 1.0);
  EXPECT_EQ(map.sum().item<double>(), 1.0);
}

TEST(AttentionMap, RandomMapsStayInUnitRange) {
  torch::manual_seed(5);
  for (int i = 0; i < 20; ++i) {
    auto weights = torch::softmax(torch::randn({4, 3, 36}), -1);
    auto map = upsample_map(attention_map(weights, 6, 6));
    EXPECT_EQ(map.sizes(), (std::vector<int64_t>{96, 96}));
    EXPECT_GE(map.min().item<double>(), 0.0);
    EXPECT_LE(map.max().item<double>(), 1.0);
  }
}

TEST(AttentionMap, OverlayBlendsJetColors) {
  auto frame = torch::zeros({3, 8, 8});
  auto hot = overlay_heatmap(frame, torch::ones({8, 8}), 1.0);
  auto cold = overlay_heatmap(frame, torch::zeros({8, 8}), 1.0);
  EXPECT_GT(hot[0].mean().item<double>(), hot[2].mean().item<double>());
  EXPECT_GT(cold[2].mean().item<double>(), cold[0].mean().item<double>());
  EXPECT_TRUE(torch::equal(overlay_heatmap(frame, torch::ones({8, 8}), 0.0), frame));
}
