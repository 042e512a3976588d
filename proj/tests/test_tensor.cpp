#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "tae/conv.hpp"
#include "tae/gradcheck.hpp"
#include "tae/tensor.hpp"

namespace {

using tae::Tape;
using tae::Tensor;

Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t = Tensor::zeros(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

// Independent 6-nested-loop reference correlation used as the conv oracle.
Tensor conv2d_reference(const Tensor& input, const Tensor& weights, const Tensor& bias, int stride,
                        int padding) {
  const std::size_t oc = weights.extent(0), ic = weights.extent(1);
  const std::size_t kh = weights.extent(2), kw = weights.extent(3);
  const std::size_t h = input.extent(1), w = input.extent(2);
  const std::size_t oh = (h + 2 * padding - kh) / stride + 1;
  const std::size_t ow = (w + 2 * padding - kw) / stride + 1;
  Tensor out = Tensor::zeros({oc, oh, ow});
  for (std::size_t o = 0; o < oc; ++o)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = bias[o];
        for (std::size_t c = 0; c < ic; ++c)
          for (std::size_t ky = 0; ky < kh; ++ky)
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const long iy = static_cast<long>(y * stride + ky) - padding;
              const long ix = static_cast<long>(x * stride + kx) - padding;
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) continue;
              acc += input.at(c, iy, ix) * weights[((o * ic + c) * kh + ky) * kw + kx];
            }
        out.at(o, y, x) = acc;
      }
  return out;
}

TEST(Tensor, ShapeInvariants) {
  Tensor t = Tensor::zeros({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_THROW(Tensor::zeros({2, 0, 4}), std::invalid_argument);
  EXPECT_THROW(Tensor::from_data({2, 2}, {1.0, 2.0, 3.0}), std::invalid_argument);
  EXPECT_THROW(Tensor::zeros({2, 2}).value(), std::invalid_argument);
}

TEST(Tape, BackwardSumGivesOnes) {
  Tape tape;
  Tensor x = Tensor::from_data({4}, {0.3, -1.2, 2.0, 0.0});
  Tensor y = tae::sum(x, &tape);
  tape.backward(y);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(x.grad_data()[i], 1.0);
}

TEST(Tape, QuadraticDerivative) {
  Tape tape;
  Tensor x = Tensor::from_data({3}, {1.0, 2.0, 3.0});
  Tensor y = tae::sum(tae::mul(x, x, &tape), &tape);
  tape.backward(y);
  EXPECT_DOUBLE_EQ(x.grad_data()[0], 2.0);
  EXPECT_DOUBLE_EQ(x.grad_data()[1], 4.0);
  EXPECT_DOUBLE_EQ(x.grad_data()[2], 6.0);
}

TEST(Tape, ReuseRejected) {
  Tape tape;
  Tensor x = Tensor::from_data({2}, {1.0, 2.0});
  Tensor y = tae::sum(x, &tape);
  tape.backward(y);
  EXPECT_THROW(tape.backward(y), std::logic_error);
}

TEST(Tape, NonScalarLossRejected) {
  Tape tape;
  Tensor x = Tensor::from_data({2}, {1.0, 2.0});
  Tensor y = tae::mul(x, 2.0, &tape);
  EXPECT_THROW(tape.backward(y), std::invalid_argument);
}

TEST(Tape, UnusedInputKeepsZeroGrad) {
  Tape tape;
  Tensor used = Tensor::from_data({2}, {1.0, 2.0});
  Tensor unused = Tensor::from_data({2}, {5.0, 6.0});
  tae::mul(unused, 3.0, &tape);  // dead branch
  Tensor y = tae::sum(used, &tape);
  tape.backward(y);
  unused.ensure_grad();
  EXPECT_DOUBLE_EQ(unused.grad_data()[0], 0.0);
  EXPECT_DOUBLE_EQ(unused.grad_data()[1], 0.0);
}

TEST(Elementwise, PowExponentOneIsIdentity) {
  Tensor x = Tensor::from_data({5}, {0.0, 0.1, 0.5, 1.0, 3.7});
  Tensor y = tae::pow(x, 1.0, nullptr);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(y[i], x[i]);
}

TEST(Elementwise, SigmoidAtZero) {
  EXPECT_DOUBLE_EQ(tae::sigmoid(Tensor::scalar(0.0), nullptr).value(), 0.5);
}

TEST(Elementwise, ExpGradMatchesFiniteDifference) {
  auto f = [](const Tensor& x, Tape& t) { return tae::sum(tae::exp(x, &t), &t); };
  const auto report = tae::grad_check(f, Tensor::scalar(0.3), 1e-5, 1e-4);
  EXPECT_TRUE(report.pass) << report.max_rel_error;
}

TEST(Elementwise, LogRejectsNonPositive) {
  EXPECT_THROW(tae::log(Tensor::scalar(0.0), nullptr), std::domain_error);
  EXPECT_THROW(tae::log(Tensor::scalar(-1.0), nullptr), std::domain_error);
}

TEST(Elementwise, PowDomainErrors) {
  EXPECT_THROW(tae::pow(Tensor::scalar(-0.5), 0.5, nullptr), std::domain_error);
  EXPECT_NO_THROW(tae::pow(Tensor::scalar(-0.5), 2.0, nullptr));
  // base-zero degenerate rule: value 0, gradient 0
  Tape tape;
  Tensor x = Tensor::scalar(0.0);
  Tensor y = tae::pow(x, 0.5, &tape);
  EXPECT_DOUBLE_EQ(y.value(), 0.0);
  tape.backward(y);
  EXPECT_DOUBLE_EQ(x.grad_data()[0], 0.0);
}

TEST(Elementwise, BroadcastMismatchRejected) {
  Tensor a = Tensor::zeros({3, 2, 2});
  Tensor b = Tensor::zeros({2});
  EXPECT_THROW(tae::add(a, b, nullptr), std::invalid_argument);
}

TEST(Elementwise, PerChannelBroadcast) {
  Tape tape;
  Tensor a = Tensor::from_data({2, 1, 2}, {1.0, 2.0, 3.0, 4.0});
  Tensor b = Tensor::from_data({2}, {10.0, 100.0});
  Tensor y = tae::mul(a, b, &tape);
  EXPECT_DOUBLE_EQ(y[0], 10.0);
  EXPECT_DOUBLE_EQ(y[1], 20.0);
  EXPECT_DOUBLE_EQ(y[2], 300.0);
  EXPECT_DOUBLE_EQ(y[3], 400.0);
  Tensor loss = tae::sum(y, &tape);
  tape.backward(loss);
  EXPECT_DOUBLE_EQ(b.grad_data()[0], 3.0);   // 1 + 2
  EXPECT_DOUBLE_EQ(b.grad_data()[1], 7.0);   // 3 + 4
}

TEST(Elementwise, ClampStraightThrough) {
  Tape tape;
  Tensor x = Tensor::from_data({3}, {-0.5, 0.4, 1.5});
  Tensor y = tae::clamp(x, 0.0, 1.0, &tape);
  EXPECT_DOUBLE_EQ(y[0], 0.0);
  EXPECT_DOUBLE_EQ(y[1], 0.4);
  EXPECT_DOUBLE_EQ(y[2], 1.0);
  Tensor loss = tae::sum(y, &tape);
  tape.backward(loss);
  EXPECT_DOUBLE_EQ(x.grad_data()[0], 0.0);
  EXPECT_DOUBLE_EQ(x.grad_data()[1], 1.0);
  EXPECT_DOUBLE_EQ(x.grad_data()[2], 0.0);
}

TEST(Softmax, EqualLogits) {
  Tensor y = tae::channel_softmax(Tensor::from_data({3}, {0.0, 0.0, 0.0}), nullptr);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(y[i], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, ClosedFormLn2) {
  Tensor y = tae::channel_softmax(Tensor::from_data({3}, {std::log(2.0), 0.0, 0.0}), nullptr);
  EXPECT_NEAR(y[0], 0.5, 1e-12);
  EXPECT_NEAR(y[1], 0.25, 1e-12);
  EXPECT_NEAR(y[2], 0.25, 1e-12);
}

TEST(Softmax, OverflowSafety) {
  Tensor y = tae::channel_softmax(Tensor::from_data({3}, {1000.0, 0.0, 0.0}), nullptr);
  EXPECT_TRUE(tae::all_finite(y));
  EXPECT_GT(y[0], 0.999);
}

TEST(Softmax, NormalizationAndPermutationEquivariance) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_tensor({4}, rng, -5.0, 5.0);
    Tensor y = tae::channel_softmax(x, nullptr);
    double total = 0.0;
    for (std::size_t i = 0; i < 4; ++i) total += y[i];
    EXPECT_NEAR(total, 1.0, 1e-9);
    // rotate input, expect rotated output
    Tensor xr = Tensor::from_data({4}, {x[1], x[2], x[3], x[0]});
    Tensor yr = tae::channel_softmax(xr, nullptr);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(yr[i], y[(i + 1) % 4], 1e-12);
  }
}

TEST(Pooling, GlobalAvgPoolValues) {
  Tensor constant = Tensor::full({2, 3, 3}, 0.7);
  Tensor g = tae::global_avg_pool(constant, nullptr);
  EXPECT_DOUBLE_EQ(g[0], 0.7);
  EXPECT_DOUBLE_EQ(g[1], 0.7);

  Tensor grid = Tensor::from_data({1, 2, 2}, {0.0, 1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(tae::global_avg_pool(grid, nullptr).value(), 1.5);
}

TEST(Pooling, GlobalAvgPoolGrad) {
  std::mt19937_64 rng(3);
  auto f = [](const Tensor& x, Tape& t) {
    Tensor g = tae::global_avg_pool(x, &t);
    return tae::sum(tae::mul(g, g, &t), &t);
  };
  const auto report = tae::grad_check(f, random_tensor({2, 3, 4}, rng), 1e-5, 1e-4);
  EXPECT_TRUE(report.pass) << report.max_rel_error;
}

TEST(Conv, SumOfOnes) {
  tae::ConvLayer layer;
  layer.weights = Tensor::full({1, 1, 3, 3}, 1.0);
  layer.bias = Tensor::zeros({1});
  Tensor input = Tensor::full({1, 3, 3}, 1.0);
  Tensor out = tae::conv2d(input, layer, nullptr);
  ASSERT_EQ(out.shape(), (std::vector<std::size_t>{1, 1, 1}));
  EXPECT_DOUBLE_EQ(out.value(), 9.0);
}

TEST(Conv, IdentityKernel) {
  tae::ConvLayer layer;
  layer.weights = Tensor::full({1, 1, 1, 1}, 1.0);
  layer.bias = Tensor::zeros({1});
  std::mt19937_64 rng(5);
  Tensor input = random_tensor({1, 4, 5}, rng);
  Tensor out = tae::conv2d(input, layer, nullptr);
  ASSERT_EQ(out.shape(), input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) EXPECT_DOUBLE_EQ(out[i], input[i]);
}

TEST(Conv, MatchesLoopReferenceOnRandomShapes) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> ch(1, 4), sp(3, 9), k(1, 3), st(1, 2), pd(0, 2);
  for (int trial = 0; trial < 50; ++trial) {
    tae::ConvLayer layer;
    const int ic = ch(rng), oc = ch(rng), kk = k(rng);
    layer.stride = st(rng);
    layer.padding = pd(rng);
    layer.weights = random_tensor({static_cast<std::size_t>(oc), static_cast<std::size_t>(ic),
                                   static_cast<std::size_t>(kk), static_cast<std::size_t>(kk)}, rng);
    layer.bias = random_tensor({static_cast<std::size_t>(oc)}, rng);
    Tensor input = random_tensor({static_cast<std::size_t>(ic), static_cast<std::size_t>(sp(rng)),
                                  static_cast<std::size_t>(sp(rng))}, rng);
    Tensor got = tae::conv2d(input, layer, nullptr);
    Tensor want = conv2d_reference(input, layer.weights, layer.bias, layer.stride, layer.padding);
    ASSERT_EQ(got.shape(), want.shape());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Conv, PaddedCaseAgainstReference) {
  std::mt19937_64 rng(23);
  tae::ConvLayer layer;
  layer.stride = 1;
  layer.padding = 1;
  layer.weights = random_tensor({3, 2, 3, 3}, rng);
  layer.bias = random_tensor({3}, rng);
  Tensor input = random_tensor({2, 4, 4}, rng);
  Tensor got = tae::conv2d(input, layer, nullptr);
  Tensor want = conv2d_reference(input, layer.weights, layer.bias, 1, 1);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Conv, ShapeMismatchNamesBothShapes) {
  tae::ConvLayer layer;
  layer.weights = Tensor::zeros({1, 2, 3, 3});
  layer.bias = Tensor::zeros({1});
  Tensor input = Tensor::zeros({3, 5, 5});
  try {
    tae::conv2d(input, layer, nullptr);
    FAIL() << "expected shape mismatch";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[3x5x5]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[1x2x3x3]"), std::string::npos) << msg;
  }
}

TEST(Conv, TooSmallSpatialRejected) {
  tae::ConvLayer layer;
  layer.weights = Tensor::zeros({1, 1, 3, 3});
  layer.bias = Tensor::zeros({1});
  EXPECT_THROW(tae::conv2d(Tensor::zeros({1, 2, 2}), layer, nullptr), std::invalid_argument);
}

TEST(Conv, GradientsMatchFiniteDifference) {
  std::mt19937_64 rng(31);
  tae::ConvLayer layer;
  layer.stride = 1;
  layer.padding = 1;
  layer.weights = random_tensor({2, 2, 3, 3}, rng, -0.5, 0.5);
  layer.bias = random_tensor({2}, rng, -0.5, 0.5);
  const Tensor input = random_tensor({2, 4, 4}, rng);

  auto input_fn = [&](const Tensor& x, Tape& t) {
    Tensor y = tae::conv2d(x, layer, &t);
    return tae::sum(tae::mul(y, y, &t), &t);
  };
  EXPECT_TRUE(tae::grad_check(input_fn, input, 1e-5, 1e-4).pass);

  std::vector<std::size_t> coords;
  for (std::size_t i = 0; i < layer.weights.size(); ++i) coords.push_back(i);
  auto loss_fn = [&](Tape& t) {
    Tensor y = tae::conv2d(input, layer, &t);
    return tae::sum(tae::mul(y, y, &t), &t);
  };
  EXPECT_TRUE(tae::grad_check_param(loss_fn, layer.weights, coords, 1e-5, 1e-4).pass);
  EXPECT_TRUE(tae::grad_check_param(loss_fn, layer.bias, {0, 1}, 1e-5, 1e-4).pass);
}

// Every differentiable primitive at 10 random points, tolerance 1e-4.
TEST(GradCheck, AllPrimitivesAtRandomPoints) {
  std::mt19937_64 rng(101);
  using Fn = std::function<Tensor(const Tensor&, Tape&)>;
  struct Case {
    const char* name;
    Fn f;
    double lo, hi;
  };
  const std::vector<Case> cases = {
      {"add", [](const Tensor& x, Tape& t) { return tae::sum(tae::add(x, 0.7, &t), &t); }, -1, 1},
      {"sub", [](const Tensor& x, Tape& t) { return tae::sum(tae::sub(1.3, x, &t), &t); }, -1, 1},
      {"mul", [](const Tensor& x, Tape& t) { return tae::sum(tae::mul(x, x, &t), &t); }, -1, 1},
      {"div",
       [](const Tensor& x, Tape& t) {
         return tae::sum(tae::div(tae::add(x, 3.0, &t), tae::add(x, 5.0, &t), &t), &t);
       },
       -1, 1},
      {"pow",
       [](const Tensor& x, Tape& t) { return tae::sum(tae::pow(x, 1.7, &t), &t); }, 0.1, 1},
      {"pow_tensor_exp",
       [](const Tensor& x, Tape& t) {
         return tae::sum(tae::pow(tae::add(x, 1.5, &t), x, &t), &t);
       },
       0.1, 1},
      {"exp", [](const Tensor& x, Tape& t) { return tae::sum(tae::exp(x, &t), &t); }, -1, 1},
      {"log", [](const Tensor& x, Tape& t) { return tae::sum(tae::log(x, &t), &t); }, 0.2, 2},
      {"sigmoid", [](const Tensor& x, Tape& t) { return tae::sum(tae::sigmoid(x, &t), &t); }, -3, 3},
      {"abs", [](const Tensor& x, Tape& t) { return tae::sum(tae::abs(x, &t), &t); }, 0.2, 1},
      {"leaky_relu",
       [](const Tensor& x, Tape& t) { return tae::sum(tae::leaky_relu(x, 0.1, &t), &t); }, 0.1, 1},
      {"clamp_interior",
       [](const Tensor& x, Tape& t) { return tae::sum(tae::clamp(x, -10.0, 10.0, &t), &t); }, -1, 1},
      {"softmax",
       [](const Tensor& x, Tape& t) {
         Tensor s = tae::softmax(x, &t);
         return tae::sum(tae::mul(s, s, &t), &t);
       },
       -2, 2},
      {"mean", [](const Tensor& x, Tape& t) { return tae::mean(tae::mul(x, x, &t), &t); }, -1, 1},
      {"select",
       [](const Tensor& x, Tape& t) {
         Tensor v = tae::select(x, 2, &t);
         return tae::mul(v, v, &t);
       },
       -1, 1},
      {"slice",
       [](const Tensor& x, Tape& t) {
         Tensor v = tae::slice(x, 1, 3, &t);
         return tae::sum(tae::mul(v, v, &t), &t);
       },
       -1, 1},
      {"linear",
       [](const Tensor& x, Tape& t) {
         Tensor w = Tensor::from_data({2, 6}, {0.1, -0.2, 0.3, 0.4, -0.5, 0.6,
                                               0.7, 0.8, -0.9, 1.0, 0.2, -0.3});
         Tensor b = Tensor::from_data({2}, {0.05, -0.05});
         Tensor y = tae::linear(x, w, b, &t);
         return tae::sum(tae::mul(y, y, &t), &t);
       },
       -1, 1},
  };
  for (const auto& c : cases) {
    for (int point = 0; point < 10; ++point) {
      Tensor x = random_tensor({6}, rng, c.lo, c.hi);
      const auto report = tae::grad_check(c.f, x, 1e-5, 1e-4);
      EXPECT_TRUE(report.pass) << c.name << " at point " << point
                               << " max rel err " << report.max_rel_error;
    }
  }
}

TEST(GradCheck, IdentitySumHasZeroError) {
  auto f = [](const Tensor& x, Tape& t) { return tae::sum(x, &t); };
  const auto report = tae::grad_check(f, Tensor::from_data({3}, {0.1, 0.2, 0.3}), 1e-5, 1e-4);
  EXPECT_TRUE(report.pass);
  EXPECT_LT(report.max_rel_error, 1e-9);
}

TEST(GradCheck, ClampedPointHasZeroGradByContract) {
  auto f = [](const Tensor& x, Tape& t) { return tae::sum(tae::clamp(x, 0.0, 1.0, &t), &t); };
  // point outside the interval: both analytic and numeric gradients are 0
  const auto report = tae::grad_check(f, Tensor::scalar(1.5), 1e-5, 1e-4);
  EXPECT_TRUE(report.pass);
  EXPECT_DOUBLE_EQ(report.max_rel_error, 0.0);
}

TEST(GradCheck, StepOutOfRangeRejected) {
  auto f = [](const Tensor& x, Tape& t) { return tae::sum(x, &t); };
  EXPECT_THROW(tae::grad_check(f, Tensor::scalar(0.0), 1e-2, 1e-4), std::invalid_argument);
}

TEST(StructuralOps, ConcatAndColumn) {
  Tape tape;
  Tensor a = Tensor::from_data({1, 1, 2}, {1.0, 2.0});
  Tensor b = Tensor::from_data({2, 1, 2}, {3.0, 4.0, 5.0, 6.0});
  Tensor cat = tae::concat_channels(a, b, &tape);
  ASSERT_EQ(cat.shape(), (std::vector<std::size_t>{3, 1, 2}));
  EXPECT_DOUBLE_EQ(cat[0], 1.0);
  EXPECT_DOUBLE_EQ(cat[5], 6.0);

  Tensor m = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor col = tae::matrix_column(m, 1, &tape);
  EXPECT_DOUBLE_EQ(col[0], 2.0);
  EXPECT_DOUBLE_EQ(col[1], 5.0);
}

TEST(Finiteness, OpsPreserveFiniteness) {
  std::mt19937_64 rng(7);
  Tensor x = random_tensor({3, 5, 5}, rng, 0.0, 1.0);
  Tape tape;
  Tensor y = tae::sigmoid(tae::exp(tae::mul(x, 3.0, &tape), &tape), &tape);
  y = tae::clamp(tae::pow(tae::add(y, 1e-3, &tape), 0.4, &tape), 0.0, 1.0, &tape);
  EXPECT_TRUE(tae::all_finite(y));
}

}  // namespace
