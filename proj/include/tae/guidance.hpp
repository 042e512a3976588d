#pragma once

// Target-aware enhancement guidance: Gaussian soft labels from ground-truth
// boxes, the objectness prediction network, the composite localization loss
// and the adaptive enhancement-mask network.

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tae/bbox.hpp"
#include "tae/conv.hpp"
#include "tae/tensor.hpp"

namespace tae {

inline constexpr double kLeakySlope = 0.1;
inline constexpr double kBceClamp = 1e-7;
inline constexpr double kDiceEps = 1e-8;

enum class Reduction { kMean, kSum };

// Gaussian bump centred on the box, sigma_x = w/2 and sigma_y = h/2.
// Pixel (i, j) = (column, row) at integer centres. With zero_outside_box
// the label is hard-zeroed outside the box rectangle.
inline Tensor gaussian_soft_label(const BBox& b, std::size_t height, std::size_t width,
                                  bool zero_outside_box = false) {
  require_valid(b, "gaussian_soft_label");
  if (height == 0 || width == 0) throw std::invalid_argument("gaussian_soft_label: empty frame");
  const auto [cx, cy] = box_center(b);
  const double sx = b.w / 2.0;
  const double sy = b.h / 2.0;
  Tensor label = Tensor::zeros({1, height, width});
  double* p = label.data();
  for (std::size_t j = 0; j < height; ++j) {
    const double dy = (static_cast<double>(j) - cy) / sy;
    for (std::size_t i = 0; i < width; ++i) {
      const double dx = (static_cast<double>(i) - cx) / sx;
      double v = std::exp(-0.5 * (dx * dx + dy * dy));
      if (zero_outside_box) {
        const double fi = static_cast<double>(i);
        const double fj = static_cast<double>(j);
        if (fi < b.x || fi >= b.x + b.w || fj < b.y || fj >= b.y + b.h) v = 0.0;
      }
      p[j * width + i] = std::min(v, 1.0);
    }
  }
  return label;
}

// Shared feature extractor, objectness head and mask head. All layers keep
// the spatial resolution.
struct GuidanceNets {
  ConvLayer feat1, feat2, feat3;  // 3 -> 16 -> 16 -> 16
  ConvLayer obj_head;             // 16 -> 1, zero-initialized
  ConvLayer mask1, mask2, mask3;  // 17 -> 16 -> 16 -> 3, last zero-initialized

  static GuidanceNets init(std::mt19937_64& rng) {
    GuidanceNets g;
    g.feat1 = ConvLayer::init(16, 3, 3, 1, 1, rng);
    g.feat2 = ConvLayer::init(16, 16, 3, 1, 1, rng);
    g.feat3 = ConvLayer::init(16, 16, 3, 1, 1, rng);
    g.obj_head = ConvLayer::init(1, 16, 3, 1, 1, rng, /*zero_init=*/true);
    g.mask1 = ConvLayer::init(16, 17, 3, 1, 1, rng);
    g.mask2 = ConvLayer::init(16, 16, 3, 1, 1, rng);
    g.mask3 = ConvLayer::init(3, 16, 3, 1, 1, rng, /*zero_init=*/true);
    return g;
  }

  std::vector<std::pair<std::string, Tensor>> named_params() const {
    return {{"guidance.feat1.w", feat1.weights}, {"guidance.feat1.b", feat1.bias},
            {"guidance.feat2.w", feat2.weights}, {"guidance.feat2.b", feat2.bias},
            {"guidance.feat3.w", feat3.weights}, {"guidance.feat3.b", feat3.bias},
            {"guidance.obj_head.w", obj_head.weights}, {"guidance.obj_head.b", obj_head.bias},
            {"guidance.mask1.w", mask1.weights}, {"guidance.mask1.b", mask1.bias},
            {"guidance.mask2.w", mask2.weights}, {"guidance.mask2.b", mask2.bias},
            {"guidance.mask3.w", mask3.weights}, {"guidance.mask3.b", mask3.bias}};
  }
};

struct ObjectnessResult {
  Tensor features;    // 16 x H x W
  Tensor objectness;  // 1 x H x W, sigmoid output
};

inline ObjectnessResult objectness_forward(const Tensor& image, const GuidanceNets& nets, Tape* tape) {
  Tensor f = leaky_relu(conv2d(image, nets.feat1, tape), kLeakySlope, tape);
  f = leaky_relu(conv2d(f, nets.feat2, tape), kLeakySlope, tape);
  f = leaky_relu(conv2d(f, nets.feat3, tape), kLeakySlope, tape);
  Tensor o = sigmoid(conv2d(f, nets.obj_head, tape), tape);
  return {f, o};
}

// Cross-entropy (mean or sum over pixels) plus Dice overlap term.
inline Tensor loc_loss(const Tensor& objectness, const Tensor& soft_label, Tape* tape,
                       Reduction reduction = Reduction::kMean) {
  if (objectness.shape() != soft_label.shape()) {
    throw std::invalid_argument("loc_loss: shape mismatch " + detail::shape_str(objectness.shape()) +
                                " vs " + detail::shape_str(soft_label.shape()));
  }
  Tensor o = clamp(objectness, kBceClamp, 1.0 - kBceClamp, tape);
  Tensor pos = mul(soft_label, log(o, tape), tape);
  Tensor neg = mul(sub(1.0, soft_label, tape), log(sub(1.0, o, tape), tape), tape);
  Tensor bce_map = sub(0.0, add(pos, neg, tape), tape);
  Tensor bce = reduction == Reduction::kMean ? mean(bce_map, tape) : sum(bce_map, tape);

  Tensor inter = sum(mul(objectness, soft_label, tape), tape);
  Tensor mass = add(sum(objectness, tape), sum(soft_label, tape), tape);
  Tensor dice = sub(1.0, div(mul(inter, 2.0, tape), add(mass, kDiceEps, tape), tape), tape);
  return add(bce, dice, tape);
}

// Enhancement mask from the objectness map and the shared backbone features.
inline Tensor mask_forward(const Tensor& objectness, const Tensor& features, const GuidanceNets& nets,
                           Tape* tape) {
  Tensor cat = concat_channels(objectness, features, tape);
  Tensor m = leaky_relu(conv2d(cat, nets.mask1, tape), kLeakySlope, tape);
  m = leaky_relu(conv2d(m, nets.mask2, tape), kLeakySlope, tape);
  return sigmoid(conv2d(m, nets.mask3, tape), tape);
}

}  // namespace tae
