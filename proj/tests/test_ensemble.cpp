#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "irsr/ensemble.hpp"
#include "oracles/oracles.hpp"

#ifndef IRSR_STUB_ENGINE
#error "IRSR_STUB_ENGINE must point at the stub engine binary"
#endif

namespace irsr {
namespace {

FloatImage offset(const Image& img, double delta) {
  FloatImage f = to_float(img);
  for (auto& v : f.samples()) v += delta;
  return f;
}

Image bounded_random(std::mt19937& rng, int w, int h, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  std::vector<std::uint16_t> s(static_cast<std::size_t>(w) * h);
  for (auto& v : s) v = static_cast<std::uint16_t>(d(rng));
  return Image(w, h, 1, 8, std::move(s));
}

// --- TTA -------------------------------------------------------------------

TEST(TtaTest, BicubicEngineIsEquivariant) {
  std::mt19937 rng(50);
  const auto model = ModelSpec::builtin(Filter::bicubic());
  for (int trial = 0; trial < 5; ++trial) {
    const Image lr = oracle::random_image(rng, 9 + trial, 12 - trial);
    const FloatImage tta = tta_infer(model, lr);
    const Image plain = infer(model, lr);
    ASSERT_TRUE(tta.same_shape(to_float(plain)));
    for (std::size_t i = 0; i < tta.samples().size(); ++i) {
      ASSERT_NEAR(tta.samples()[i], plain.samples()[i], 1e-9);
    }
  }
}

TEST(TtaTest, NearestEngineMatchesExactly) {
  std::mt19937 rng(51);
  const auto model = ModelSpec::builtin(Filter::nearest());
  const Image lr = oracle::random_image(rng, 10, 6);
  EXPECT_EQ(tta_infer(model, lr), to_float(infer(model, lr)));
}

TEST(TtaTest, ConstantInputGivesConstantOutput) {
  for (const auto& f : {Filter::nearest(), Filter::bilinear(), Filter::bicubic(), Filter::lanczos3()}) {
    const FloatImage out = tta_infer(ModelSpec::builtin(f), Image(5, 7, 1, 8, std::uint16_t{99}));
    for (double v : out.samples()) EXPECT_EQ(v, 99.0);
  }
}

TEST(TtaTest, AveragesInFloatWithoutQuantizing) {
  // A 2x1 LR image through bilinear: some TTA branches disagree by rounding,
  // so the mean need not be an integer; the result must keep that fraction.
  std::mt19937 rng(52);
  const Image lr = oracle::random_image(rng, 7, 3);
  const FloatImage out = tta_infer(ModelSpec::builtin(Filter::lanczos3()), lr);
  for (double v : out.samples()) {
    EXPECT_EQ(std::fmod(v * 8.0, 1.0), 0.0);  // mean of eight integers
  }
}

TEST(TtaTest, ExternalEngineRunsOnceForAllEightCopies) {
  std::mt19937 rng(53);
  TempDir dir("irsr-tta-test");
  const auto counter = dir.path() / "calls";
  const auto model = ModelSpec::external("echo x >> " + counter.string() + " && " +
                                             IRSR_STUB_ENGINE + " {input_dir} {output_dir}",
                                         8, std::chrono::seconds{30});
  const std::vector<Image> lrs = {oracle::random_image(rng, 12, 9), oracle::random_image(rng, 5, 5)};
  const auto out = tta_infer_batch(model, lrs);
  ASSERT_EQ(out.size(), 2u);
  for (std::size_t i = 0; i < lrs.size(); ++i) {
    EXPECT_EQ(out[i], to_float(upscale_x4(lrs[i], Filter::nearest())));
  }
  std::ifstream in(counter);
  std::string line;
  int calls = 0;
  while (std::getline(in, line)) ++calls;
  EXPECT_EQ(calls, 1);
}

// --- Weights and fusion ------------------------------------------------------

TEST(EnsembleWeightsTest, Validation) {
  EXPECT_NO_THROW(EnsembleWeights({0.45, 0.55}));
  EXPECT_THROW(EnsembleWeights({0.5, 0.6}), ValidationError);
  EXPECT_THROW(EnsembleWeights({-0.1, 1.1}), ValidationError);
  EXPECT_THROW(EnsembleWeights(std::vector<double>{}), ValidationError);
  for (std::size_t n = 1; n < 12; ++n) EXPECT_NO_THROW(EnsembleWeights::uniform(n));
}

TEST(FuseTest, IdenticalOutputsReturnThatImage) {
  std::mt19937 rng(54);
  const Image img = oracle::random_image(rng, 9, 9);
  const std::vector<FloatImage> outs = {to_float(img), to_float(img)};
  for (double a : {0.0, 0.3, 0.45, 0.5, 1.0}) EXPECT_EQ(fuse(outs, EnsembleWeights::pair(a)), img);
}

TEST(FuseTest, AlphaArithmetic) {
  // 0.45 * 0 + 0.55 * 255 = 140.25 -> 140
  const std::vector<FloatImage> outs = {FloatImage(2, 2, 1, 8, 0.0), FloatImage(2, 2, 1, 8, 255.0)};
  EXPECT_EQ(fuse(outs, EnsembleWeights::pair(0.45)), Image(2, 2, 1, 8, std::uint16_t{140}));
}

TEST(FuseTest, FourWayEqualWeightsAverage) {
  const std::vector<FloatImage> outs = {FloatImage(3, 3, 1, 8, 10.0), FloatImage(3, 3, 1, 8, 20.0),
                                        FloatImage(3, 3, 1, 8, 30.0), FloatImage(3, 3, 1, 8, 41.0)};
  // (10 + 20 + 30 + 41) / 4 = 25.25
  EXPECT_EQ(fuse(outs, EnsembleWeights({0.25, 0.25, 0.25, 0.25})), Image(3, 3, 1, 8, std::uint16_t{25}));
}

TEST(FuseTest, UnitWeightSelectsFirst) {
  std::mt19937 rng(55);
  FloatImage a = to_float(oracle::random_image(rng, 6, 6));
  for (auto& v : a.samples()) v += 0.3;
  const FloatImage b = to_float(oracle::random_image(rng, 6, 6));
  EXPECT_EQ(fuse(std::vector{a, b}, EnsembleWeights({1.0, 0.0})), quantize(a));
}

TEST(FuseTest, ConvexityProperty) {
  std::mt19937 rng(56);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<FloatImage> outs;
    for (int m = 0; m < 3; ++m) {
      FloatImage f = to_float(oracle::random_image(rng, 5, 4));
      for (auto& v : f.samples()) v = v * 0.9 + u(rng) * 10.0;
      outs.push_back(std::move(f));
    }
    double w0 = u(rng), w1 = u(rng) * (1.0 - w0);
    const EnsembleWeights w({w0, w1, 1.0 - w0 - w1});
    const Image fused = fuse(outs, w);
    for (std::size_t i = 0; i < fused.samples().size(); ++i) {
      double lo = 1e9, hi = -1e9;
      for (const auto& o : outs) {
        lo = std::min(lo, o.samples()[i]);
        hi = std::max(hi, o.samples()[i]);
      }
      EXPECT_GE(fused.samples()[i], lo - 0.5);
      EXPECT_LE(fused.samples()[i], hi + 0.5);
    }
  }
}

TEST(FuseTest, Errors) {
  const std::vector<FloatImage> outs = {FloatImage(2, 2, 1, 8, 0.0), FloatImage(2, 3, 1, 8, 0.0)};
  EXPECT_THROW(fuse(outs, EnsembleWeights::pair(0.5)), ValidationError);
  const std::vector<FloatImage> one = {FloatImage(2, 2, 1, 8, 0.0)};
  EXPECT_THROW(fuse(one, EnsembleWeights::pair(0.5)), ValidationError);
}

// --- Search ----------------------------------------------------------------

TEST(SelectBestTest, SensitivityTableRows) {
  // (alpha, psnr, ssim, score) rows as published for the two-model ensemble.
  const double rows[][4] = {{0.40, 35.82, 0.9205, 54.228}, {0.42, 35.81, 0.9207, 54.228},
                            {0.43, 35.81, 0.9207, 54.228}, {0.45, 35.81, 0.9207, 54.229},
                            {0.50, 35.81, 0.9208, 54.222}, {0.55, 35.80, 0.9211, 54.219},
                            {0.60, 35.78, 0.9213, 54.208}};
  std::vector<WeightSearchRow> table;
  for (const auto& r : rows) table.push_back({EnsembleWeights::pair(r[0]), r[1], r[2], r[3]});
  std::ranges::reverse(table);  // input order must not matter
  const auto result = select_best(table);
  EXPECT_DOUBLE_EQ(result.best_weights[0], 0.45);
  EXPECT_DOUBLE_EQ(result.best().mean_score, 54.229);
  EXPECT_DOUBLE_EQ(result.table.front().weights[0], 0.40);
}

TEST(SelectBestTest, TiesGoToSmallestWeights) {
  std::vector<WeightSearchRow> table = {{EnsembleWeights::pair(0.6), 1, 1, 5},
                                        {EnsembleWeights::pair(0.3), 1, 1, 5},
                                        {EnsembleWeights::pair(0.5), 1, 1, 4}};
  EXPECT_DOUBLE_EQ(select_best(table).best_weights[0], 0.3);
}

TEST(AlphaGridTest, CoversInclusiveRange) {
  const auto g = alpha_grid(0.30, 0.60, 0.01);
  ASSERT_EQ(g.size(), 31u);
  EXPECT_EQ(g.front(), 0.30);
  EXPECT_EQ(g[15], 0.45);
  EXPECT_EQ(g.back(), 0.60);
  EXPECT_THROW(alpha_grid(0.6, 0.3, 0.01), ValidationError);
  EXPECT_THROW(alpha_grid(0.3, 0.6, 0.0), ValidationError);
}

TEST(GridSearchAlphaTest, OpposedOffsetsCancelAtHalf) {
  std::mt19937 rng(57);
  std::vector<Image> gt;
  std::vector<FloatImage> a, b;
  for (int i = 0; i < 3; ++i) {
    gt.push_back(bounded_random(rng, 16, 16, 40, 215));
    a.push_back(offset(gt.back(), 32.0));
    b.push_back(offset(gt.back(), -32.0));
  }
  const auto result = grid_search_alpha(a, b, gt, 0.30, 0.60, 0.01);
  EXPECT_EQ(result.table.size(), 31u);
  EXPECT_DOUBLE_EQ(result.best_weights[0], 0.50);
  EXPECT_EQ(result.best().mean_psnr, 100.0);
  // Independent re-scoring of the chosen weights.
  const auto check = score_weights({a, b}, gt, result.best_weights);
  EXPECT_EQ(check.mean_score, result.best().mean_score);
  for (const auto& row : result.table) EXPECT_LE(row.mean_score, result.best().mean_score);
}

TEST(GridSearchAlphaTest, IdenticalModelsTieToLo) {
  std::mt19937 rng(58);
  std::vector<Image> gt = {oracle::random_image(rng, 12, 12)};
  std::vector<FloatImage> a = {offset(oracle::random_image(rng, 12, 12), 0.0)};
  const auto result = grid_search_alpha(a, a, gt, 0.30, 0.60, 0.05);
  EXPECT_DOUBLE_EQ(result.best_weights[0], 0.30);
  for (const auto& row : result.table) EXPECT_EQ(row.mean_score, result.table.front().mean_score);
}

TEST(GridSearchAlphaTest, ExplicitCandidates) {
  std::mt19937 rng(59);
  std::vector<Image> gt = {bounded_random(rng, 12, 12, 40, 200)};
  std::vector<FloatImage> a = {offset(gt[0], 40.0)}, b = {offset(gt[0], -10.0)};
  // Error (50 alpha - 10) vanishes at alpha = 0.2.
  const std::vector<double> alphas = {0.6, 0.2, 0.4};
  const auto result = grid_search_alpha(a, b, gt, alphas);
  EXPECT_DOUBLE_EQ(result.best_weights[0], 0.2);
  EXPECT_DOUBLE_EQ(result.table[1].weights[0], 0.4);  // sorted ascending
}

TEST(GridSearchAlphaTest, MismatchedManifestsAreRejected) {
  std::vector<Image> gt = {Image(12, 12, 1, 8)};
  std::vector<FloatImage> a = {FloatImage(12, 12, 1, 8)}, b;
  EXPECT_THROW(grid_search_alpha(a, b, gt, 0.3, 0.6, 0.1), ValidationError);
  std::vector<FloatImage> c = {FloatImage(16, 12, 1, 8)};
  try {
    const std::vector<std::string> ids = {"frame_9"};
    grid_search_alpha(a, c, gt, 0.3, 0.6, 0.1, {}, 1, ids);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("frame_9"), std::string::npos);
  }
}

TEST(SimplexGridTest, SizesAndOrder) {
  EXPECT_EQ(simplex_grid(2, 0.1).size(), 11u);
  EXPECT_EQ(simplex_grid(3, 0.5).size(), 6u);
  const auto g4 = simplex_grid(4, 0.25);
  EXPECT_EQ(g4.size(), 35u);  // C(7, 3)
  EXPECT_NE(std::ranges::find(g4, EnsembleWeights({0.25, 0.25, 0.25, 0.25})), g4.end());
  for (std::size_t i = 1; i < g4.size(); ++i) EXPECT_LT(g4[i - 1].values(), g4[i].values());
  EXPECT_THROW(simplex_grid(3, 0.3), ValidationError);
  EXPECT_THROW(simplex_grid(8, 0.01, 1000), ValidationError);
  EXPECT_THROW(simplex_grid(1, 0.1), ValidationError);
}

TEST(GridSearchSimplexTest, TwoModelsReduceToAlphaSearch) {
  std::mt19937 rng(60);
  std::vector<Image> gt;
  std::vector<FloatImage> a, b;
  for (int i = 0; i < 2; ++i) {
    gt.push_back(oracle::random_image(rng, 14, 14));
    a.push_back(to_float(oracle::random_image(rng, 14, 14)));
    b.push_back(offset(gt.back(), 3.7));
  }
  const auto simplex = grid_search_simplex({a, b}, gt, 0.1);
  const auto alpha = grid_search_alpha(a, b, gt, 0.0, 1.0, 0.1);
  ASSERT_EQ(simplex.table.size(), alpha.table.size());
  for (std::size_t i = 0; i < alpha.table.size(); ++i) {
    EXPECT_EQ(simplex.table[i].weights, alpha.table[i].weights);
    EXPECT_EQ(simplex.table[i].mean_score, alpha.table[i].mean_score);
  }
  EXPECT_EQ(simplex.best_weights, alpha.best_weights);
}

TEST(GridSearchSimplexTest, ExactModelDominates) {
  std::mt19937 rng(61);
  std::vector<Image> gt;
  ModelOutputs outs(3);
  for (int i = 0; i < 2; ++i) {
    gt.push_back(bounded_random(rng, 13, 13, 0, 150));
    outs[0].push_back(to_float(gt.back()));
    outs[1].push_back(offset(gt.back(), 50.0));
    outs[2].push_back(offset(gt.back(), 70.0));
  }
  const auto result = grid_search_simplex(outs, gt, 0.1);
  EXPECT_EQ(result.best_weights, EnsembleWeights({1.0, 0.0, 0.0}));
  const auto check = score_weights(outs, gt, result.best_weights);
  EXPECT_EQ(check.mean_score, result.best().mean_score);
}

TEST(GridSearchTest, ParallelMatchesSerial) {
  std::mt19937 rng(62);
  std::vector<Image> gt;
  std::vector<FloatImage> a, b;
  for (int i = 0; i < 3; ++i) {
    gt.push_back(oracle::random_image(rng, 16, 16));
    a.push_back(to_float(oracle::random_image(rng, 16, 16)));
    b.push_back(offset(gt.back(), 5.5));
  }
  const auto serial = grid_search_alpha(a, b, gt, 0.3, 0.6, 0.01, {}, 1);
  const auto parallel = grid_search_alpha(a, b, gt, 0.3, 0.6, 0.01, {}, 4);
  std::ostringstream s1, s2;
  write_weight_table_csv(s1, serial);
  write_weight_table_csv(s2, parallel);
  EXPECT_EQ(s1.str(), s2.str());
  EXPECT_EQ(s1.str().substr(0, s1.str().find('\n')), "w0,w1,mean_psnr,mean_ssim,mean_score");
}

}  // namespace
}  // namespace irsr
