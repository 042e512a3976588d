#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "tae/enhance.hpp"
#include "tae/gradcheck.hpp"
#include "tae/losses.hpp"
#include "tae/model.hpp"

namespace {

using tae::Tape;
using tae::Tensor;

TEST(GammaCurve, MaskZeroGivesInputPlusEps) {
  Tensor i = Tensor::from_data({1, 1, 3}, {0.0, 0.4, 0.9});
  Tensor out = tae::gamma_curve(i, 0.3, Tensor::zeros({1, 1, 3}), nullptr);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(out[k], i[k] + 1e-3);
}

TEST(GammaCurve, AlphaOneIsIdentityPlusEps) {
  Tensor i = Tensor::from_data({1, 1, 3}, {0.1, 0.5, 0.8});
  Tensor m = Tensor::from_data({1, 1, 3}, {0.0, 0.5, 1.0});
  Tensor out = tae::gamma_curve(i, 1.0, m, nullptr);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(out[k], i[k] + 1e-3);
}

TEST(GammaCurve, ClosedFormValue) {
  Tensor out = tae::gamma_curve(Tensor::from_data({1, 1, 1}, {0.25}), 0.5,
                                Tensor::full({1, 1, 1}, 1.0), nullptr);
  EXPECT_NEAR(out.value(), std::sqrt(0.251), 1e-12);
  EXPECT_NEAR(out.value(), 0.500999, 1e-6);
}

TEST(GammaCurve, AlphaOutsideUnitIntervalRejected) {
  Tensor i = Tensor::full({1, 1, 1}, 0.5);
  Tensor m = Tensor::full({1, 1, 1}, 0.5);
  EXPECT_THROW(tae::gamma_curve(i, 0.0, m, nullptr), std::invalid_argument);
  EXPECT_THROW(tae::gamma_curve(i, 1.5, m, nullptr), std::invalid_argument);
}

TEST(GammaCurve, BrightensDarkPixels) {
  for (double alpha : {0.2, 0.5, 0.8}) {
    for (int k = 0; k < 100; ++k) {
      const double v = k / 100.0 * (1.0 - 1e-3 - 1e-9);
      Tensor out = tae::gamma_curve(Tensor::from_data({1, 1, 1}, {v}), alpha,
                                    Tensor::full({1, 1, 1}, 1.0), nullptr);
      EXPECT_GT(out.value(), v) << "alpha " << alpha << " v " << v;
    }
  }
}

TEST(LogCurve, EndpointsAndClosedForm) {
  Tensor i = Tensor::from_data({1, 1, 3}, {0.0, 0.1, 1.0});
  Tensor out = tae::log_curve(i, nullptr);
  EXPECT_DOUBLE_EQ(out[0], 0.0);
  EXPECT_NEAR(out[1], std::log(2.0) / std::log(11.0), 1e-12);
  EXPECT_NEAR(out[1], 0.289065, 1e-6);
  EXPECT_DOUBLE_EQ(out[2], 1.0);
}

TEST(SigmoidCurve, ClosedFormValues) {
  Tensor i = Tensor::from_data({1, 1, 3}, {0.0, 0.5, 1.0});
  Tensor out = tae::sigmoid_curve(i, nullptr);
  EXPECT_NEAR(out[0], 1.0 / (1.0 + std::exp(5.0)), 1e-12);
  EXPECT_NEAR(out[0], 0.00669285, 1e-7);
  EXPECT_DOUBLE_EQ(out[1], 0.5);
  EXPECT_NEAR(out[2], 0.99330715, 1e-7);
}

TEST(Curves, StrictMonotonicityOnGrid) {
  const std::size_t n = 1000;
  Tensor ramp = Tensor::zeros({1, 1, n});
  for (std::size_t k = 0; k < n; ++k) ramp[k] = static_cast<double>(k) / (n - 1);
  for (double mask_value : {0.0, 0.3, 1.0}) {
    Tensor gamma = tae::gamma_curve(ramp, 0.4, Tensor::full({1, 1, n}, mask_value), nullptr);
    for (std::size_t k = 0; k + 1 < n; ++k) EXPECT_LT(gamma[k], gamma[k + 1]);
  }
  Tensor lg = tae::log_curve(ramp, nullptr);
  Tensor sg = tae::sigmoid_curve(ramp, nullptr);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    EXPECT_LT(lg[k], lg[k + 1]);
    EXPECT_LT(sg[k], sg[k + 1]);
    EXPECT_GE(lg[k], 0.0);
    EXPECT_LE(lg[k + 1], 1.0);
    EXPECT_GE(sg[k], 0.0);
    EXPECT_LE(sg[k + 1], 1.0);
  }
}

tae::CurveParams make_params(double alpha, const std::array<double, 3>& logits) {
  tae::CurveParams p;
  p.alpha = Tensor::from_data({3}, {alpha, alpha, alpha});
  p.fusion_logits = Tensor::from_data({3, 3}, {logits[0], logits[1], logits[2],
                                               logits[0], logits[1], logits[2],
                                               logits[0], logits[1], logits[2]});
  return p;
}

TEST(FuseCurves, OneHotSelectsGamma) {
  Tensor image = Tensor::full({3, 4, 4}, 0.3);
  Tensor mask = Tensor::full({3, 4, 4}, 0.7);
  const auto params = make_params(0.5, {30.0, -30.0, -30.0});
  Tensor fused = tae::fuse_curves(image, mask, params, nullptr);
  Tensor gamma = tae::gamma_curve(image, params.alpha, mask, nullptr);
  for (std::size_t i = 0; i < fused.size(); ++i) EXPECT_NEAR(fused[i], gamma[i], 1e-9);
}

TEST(FuseCurves, EqualWeightClosedForm) {
  Tensor image = Tensor::full({3, 2, 2}, 0.1);
  Tensor mask = Tensor::zeros({3, 2, 2});
  const auto params = make_params(0.37, {0.0, 0.0, 0.0});  // alpha arbitrary, M = 0 kills it
  Tensor fused = tae::fuse_curves(image, mask, params, nullptr);
  const double expect = (0.101 + std::log(2.0) / std::log(11.0) +
                         1.0 / (1.0 + std::exp(4.0))) / 3.0;
  for (std::size_t i = 0; i < fused.size(); ++i) {
    EXPECT_NEAR(fused[i], expect, 1e-12);
    EXPECT_NEAR(fused[i], 0.136017, 1e-6);
  }
}

TEST(FuseCurves, RangeAndFiniteness) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0), logit(-4.0, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor image = Tensor::zeros({3, 5, 5});
    Tensor mask = Tensor::zeros({3, 5, 5});
    for (std::size_t i = 0; i < image.size(); ++i) {
      image[i] = unit(rng);
      mask[i] = unit(rng);
    }
    tae::CurveParams params;
    params.alpha = Tensor::from_data({3}, {unit(rng) * 0.99 + 0.005, unit(rng) * 0.99 + 0.005,
                                           unit(rng) * 0.99 + 0.005});
    params.fusion_logits = Tensor::zeros({3, 3});
    for (std::size_t i = 0; i < 9; ++i) params.fusion_logits[i] = logit(rng);
    Tensor fused = tae::fuse_curves(image, mask, params, nullptr);
    EXPECT_TRUE(tae::all_finite(fused));
    for (std::size_t i = 0; i < fused.size(); ++i) {
      EXPECT_GE(fused[i], 0.0);
      EXPECT_LE(fused[i], 1.0);
    }
  }
}

TEST(FuseCurves, LogitShiftInvariance) {
  Tensor image = Tensor::full({3, 3, 3}, 0.2);
  Tensor mask = Tensor::full({3, 3, 3}, 0.6);
  auto a = make_params(0.5, {0.3, -0.7, 1.1});
  auto b = make_params(0.5, {0.3 + 5.0, -0.7 + 5.0, 1.1 + 5.0});
  Tensor fa = tae::fuse_curves(image, mask, a, nullptr);
  Tensor fb = tae::fuse_curves(image, mask, b, nullptr);
  for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_NEAR(fa[i], fb[i], 1e-12);
}

TEST(FuseCurves, MonotoneInPixelIntensity) {
  // pre-clamp blend is a convex combination of strictly increasing curves
  const std::size_t n = 1000;
  Tensor ramp = Tensor::zeros({1, 1, n});
  for (std::size_t k = 0; k < n; ++k) ramp[k] = static_cast<double>(k) / (n - 1);
  Tensor mask = Tensor::full({1, 1, n}, 0.4);
  Tensor g = tae::gamma_curve(ramp, 0.5, mask, nullptr);
  Tensor l = tae::log_curve(ramp, nullptr);
  Tensor s = tae::sigmoid_curve(ramp, nullptr);
  const double w[3] = {0.2, 0.5, 0.3};
  double prev = -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double blended = w[0] * g[k] + w[1] * l[k] + w[2] * s[k];
    EXPECT_GT(blended, prev);
    prev = blended;
  }
}

TEST(Predictor, ZeroInitHeadGivesNeutralParams) {
  std::mt19937_64 rng(7);
  tae::PredictorNet net = tae::PredictorNet::init(rng);
  Tensor image = Tensor::full({3, 16, 16}, 0.15);
  const auto params = tae::predict_global_params(image, net, nullptr);
  ASSERT_EQ(params.alpha.shape(), (std::vector<std::size_t>{3}));
  ASSERT_EQ(params.fusion_logits.shape(), (std::vector<std::size_t>{3, 3}));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(params.alpha[i], 0.5);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(params.fusion_logits[i], 0.0);
}

TEST(Predictor, SmallInputRejected) {
  std::mt19937_64 rng(8);
  tae::PredictorNet net = tae::PredictorNet::init(rng);
  EXPECT_THROW(tae::predict_global_params(Tensor::full({3, 7, 16}, 0.1), net, nullptr),
               std::invalid_argument);
  EXPECT_NO_THROW(tae::predict_global_params(Tensor::full({3, 8, 8}, 0.1), net, nullptr));
}

TEST(Predictor, AlphaGradThroughConv1) {
  std::mt19937_64 rng(9);
  tae::PredictorNet net = tae::PredictorNet::init(rng);
  std::uniform_real_distribution<double> dist(-0.4, 0.4);
  for (std::size_t i = 0; i < net.head_w.size(); ++i) net.head_w[i] = dist(rng);
  Tensor image = Tensor::zeros({3, 8, 8});
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = (dist(rng) + 0.4) / 0.8;

  auto loss_fn = [&](Tape& t) {
    return tae::sum(tae::predict_global_params(image, net, &t).alpha, &t);
  };
  std::vector<std::size_t> coords;
  std::uniform_int_distribution<std::size_t> pick(0, net.conv1.weights.size() - 1);
  for (int i = 0; i < 20; ++i) coords.push_back(pick(rng));
  const auto report = tae::grad_check_param(loss_fn, net.conv1.weights, coords, 1e-5, 1e-3);
  EXPECT_TRUE(report.pass) << report.max_rel_error;
}

TEST(EnhanceImage, ShapesInAllModes) {
  tae::TaeModel model = tae::TaeModel::init(11);
  Tensor image = Tensor::full({3, 12, 10}, 0.08);
  for (auto mode : {tae::EnhanceMode::kBaseline, tae::EnhanceMode::kTargetAware,
                    tae::EnhanceMode::kTargetAwareMultiCurve}) {
    const auto r = model.enhance(image, mode, nullptr);
    EXPECT_EQ(r.enhanced.shape(), (std::vector<std::size_t>{3, 12, 10}));
    EXPECT_EQ(r.objectness.shape(), (std::vector<std::size_t>{1, 12, 10}));
    EXPECT_EQ(r.mask.shape(), (std::vector<std::size_t>{3, 12, 10}));
    EXPECT_EQ(r.params.alpha.size(), 3u);
    EXPECT_EQ(r.params.fusion_logits.size(), 9u);
    EXPECT_TRUE(tae::all_finite(r.enhanced));
  }
}

TEST(EnhanceImage, BaselineIsGlobalGamma) {
  tae::TaeModel model = tae::TaeModel::init(12);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (std::size_t i = 0; i < model.predictor.head_w.size(); ++i)
    model.predictor.head_w[i] = dist(rng);
  Tensor image = Tensor::full({3, 9, 9}, 0.1);
  const auto r = model.enhance(image, tae::EnhanceMode::kBaseline, nullptr);
  Tensor expect = tae::clamp(
      tae::gamma_curve(image, r.params.alpha, Tensor::full(image.shape(), 1.0), nullptr), 0.0, 1.0,
      nullptr);
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_DOUBLE_EQ(r.enhanced[i], expect[i]);
  for (std::size_t i = 0; i < r.mask.size(); ++i) EXPECT_DOUBLE_EQ(r.mask[i], 1.0);
}

// End-to-end gradient of the full training objective on a small image.
TEST(EnhanceImage, EndToEndGradCheck) {
  tae::TaeModel model = tae::TaeModel::init(14);
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> dist(-0.3, 0.3), unit(0.02, 0.3);
  // knock every parameter off its init: zero biases park the leaky-rectifier
  // pre-activations exactly on the kink, which finite differences straddle
  for (auto& [name, p] : model.named_params()) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += dist(rng) * 0.3;
  }
  Tensor image = Tensor::zeros({3, 8, 8});
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = unit(rng);
  const tae::BBox box{2, 2, 4, 4};
  const Tensor label = tae::gaussian_soft_label(box, 8, 8);
  const tae::LossWeights weights;
  const tae::ExposureConfig exposure;

  auto loss_fn = [&](Tape& t) {
    const auto r = model.enhance(image, tae::EnhanceMode::kTargetAwareMultiCurve, &t);
    Tensor loc = tae::loc_loss(r.objectness, label, &t);
    Tensor exp = tae::exposure_loss(r.enhanced, exposure, &t);
    Tensor col = tae::color_loss(r.enhanced, &t);
    Tensor tv = tae::tv_loss(r.mask, &t);
    return tae::total_loss(loc, exp, col, tv, weights, &t);
  };

  for (auto& [name, p] : model.named_params()) {
    std::vector<std::size_t> coords;
    std::uniform_int_distribution<std::size_t> pick(0, p.size() - 1);
    const int samples = p.size() < 20 ? static_cast<int>(p.size()) : 20;
    for (int i = 0; i < samples; ++i) coords.push_back(pick(rng) % p.size());
    const auto report = tae::grad_check_param(loss_fn, p, coords, 1e-6, 1e-3);
    EXPECT_TRUE(report.pass) << name << " max rel err " << report.max_rel_error;
  }
}

}  // namespace
