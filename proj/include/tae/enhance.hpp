#pragma once

// Adaptive RGB multi-curve fusion: Gamma / logarithmic / sigmoid curve
// transforms, the Global Parameter Predictor and the fused enhanced image.

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tae/conv.hpp"
#include "tae/guidance.hpp"
#include "tae/tensor.hpp"

namespace tae {

inline constexpr double kGammaEps = 1e-3;
inline constexpr double kLogScale = 10.0;
inline constexpr double kSigmoidGain = 10.0;
inline constexpr double kSigmoidMid = 0.5;

enum class EnhanceMode { kBaseline, kTargetAware, kTargetAwareMultiCurve };

inline const char* to_string(EnhanceMode m) {
  switch (m) {
    case EnhanceMode::kBaseline: return "baseline";
    case EnhanceMode::kTargetAware: return "TA";
    case EnhanceMode::kTargetAwareMultiCurve: return "TA+MC";
  }
  return "?";
}

inline EnhanceMode parse_mode(const std::string& s) {
  if (s == "baseline") return EnhanceMode::kBaseline;
  if (s == "TA" || s == "ta") return EnhanceMode::kTargetAware;
  if (s == "TA+MC" || s == "ta+mc") return EnhanceMode::kTargetAwareMultiCurve;
  throw std::invalid_argument("unknown enhancement mode '" + s + "' (baseline|TA|TA+MC)");
}

// Per-channel Gamma bases and raw fusion logits (channel x curve).
struct CurveParams {
  Tensor alpha;          // {C}, each in (0, 1]
  Tensor fusion_logits;  // {C, 3}
};

// Mask-modulated Gamma: (I + eps)^(alpha^M), exponent between alpha and 1.
inline Tensor gamma_curve(const Tensor& intensity, const Tensor& alpha, const Tensor& mask, Tape* tape) {
  if (intensity.shape() != mask.shape()) {
    throw std::invalid_argument("gamma_curve: intensity/mask shape mismatch");
  }
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (!(alpha[i] > 0.0 && alpha[i] <= 1.0)) {
      throw std::invalid_argument("gamma_curve: alpha " + std::to_string(alpha[i]) +
                                  " outside (0, 1]");
    }
  }
  Tensor exponent = exp(mul(mask, log(alpha, tape), tape), tape);  // alpha^M
  return pow(add(intensity, kGammaEps, tape), exponent, tape);
}

inline Tensor gamma_curve(const Tensor& intensity, double alpha, const Tensor& mask, Tape* tape) {
  return gamma_curve(intensity, Tensor::scalar(alpha), mask, tape);
}

// log(1 + 10 I) / log(11), maps [0,1] onto [0,1].
inline Tensor log_curve(const Tensor& intensity, Tape* tape) {
  Tensor t = add(mul(intensity, kLogScale, tape), 1.0, tape);
  return mul(log(t, tape), 1.0 / std::log(1.0 + kLogScale), tape);
}

// 1 / (1 + exp(-10 (I - 0.5))), mid-range contrast stretch.
inline Tensor sigmoid_curve(const Tensor& intensity, Tape* tape) {
  return sigmoid(mul(sub(intensity, kSigmoidMid, tape), kSigmoidGain, tape), tape);
}

// Three stride-2 convolutions, global pooling, affine head emitting
// 9 fusion logits and 3 pre-alpha values (sigmoid-bounded to (0,1)).
struct PredictorNet {
  ConvLayer conv1, conv2, conv3;
  Tensor head_w;  // {12, 16}
  Tensor head_b;  // {12}

  static PredictorNet init(std::mt19937_64& rng) {
    PredictorNet p;
    p.conv1 = ConvLayer::init(16, 3, 3, 2, 1, rng);
    p.conv2 = ConvLayer::init(16, 16, 3, 2, 1, rng);
    p.conv3 = ConvLayer::init(16, 16, 3, 2, 1, rng);
    p.head_w = Tensor::zeros({12, 16});
    p.head_b = Tensor::zeros({12});
    return p;
  }

  std::vector<std::pair<std::string, Tensor>> named_params() const {
    return {{"predictor.conv1.w", conv1.weights}, {"predictor.conv1.b", conv1.bias},
            {"predictor.conv2.w", conv2.weights}, {"predictor.conv2.b", conv2.bias},
            {"predictor.conv3.w", conv3.weights}, {"predictor.conv3.b", conv3.bias},
            {"predictor.head.w", head_w},         {"predictor.head.b", head_b}};
  }
};

inline CurveParams predict_global_params(const Tensor& image, const PredictorNet& net, Tape* tape) {
  if (image.rank() != 3 || image.extent(0) != 3) {
    throw std::invalid_argument("predict_global_params: expected 3xHxW image");
  }
  if (image.extent(1) < 8 || image.extent(2) < 8) {
    throw std::invalid_argument("predict_global_params: spatial dims " +
                                detail::shape_str(image.shape()) +
                                " too small for three stride-2 layers (need >= 8)");
  }
  Tensor f = leaky_relu(conv2d(image, net.conv1, tape), kLeakySlope, tape);
  f = leaky_relu(conv2d(f, net.conv2, tape), kLeakySlope, tape);
  f = leaky_relu(conv2d(f, net.conv3, tape), kLeakySlope, tape);
  Tensor pooled = global_avg_pool(f, tape);
  Tensor head = linear(pooled, net.head_w, net.head_b, tape);
  CurveParams params;
  params.fusion_logits = reshape(slice(head, 0, 9, tape), {3, 3}, tape);
  params.alpha = sigmoid(slice(head, 9, 3, tape), tape);
  return params;
}

// Softmax-weighted blend of the three curves per channel, clamped to [0,1].
inline Tensor fuse_curves(const Tensor& image, const Tensor& mask, const CurveParams& params,
                          Tape* tape) {
  if (image.rank() != 3 || image.shape() != mask.shape()) {
    throw std::invalid_argument("fuse_curves: image/mask shape mismatch");
  }
  if (params.fusion_logits.rank() != 2 || params.fusion_logits.extent(0) != image.extent(0) ||
      params.fusion_logits.extent(1) != 3) {
    throw std::invalid_argument("fuse_curves: fusion logits must be Cx3");
  }
  Tensor weights = softmax(params.fusion_logits, tape);  // rows sum to 1
  Tensor fused = mul(gamma_curve(image, params.alpha, mask, tape), matrix_column(weights, 0, tape), tape);
  fused = add(fused, mul(log_curve(image, tape), matrix_column(weights, 1, tape), tape), tape);
  fused = add(fused, mul(sigmoid_curve(image, tape), matrix_column(weights, 2, tape), tape), tape);
  return clamp(fused, 0.0, 1.0, tape);
}

struct EnhanceResult {
  Tensor enhanced;    // 3 x H x W in [0,1]
  Tensor objectness;  // 1 x H x W
  Tensor mask;        // 3 x H x W
  CurveParams params;
};

// Full pipeline. Baseline forces a single global Gamma (mask = 1);
// TA enables the mask-modulated Gamma only; TA+MC runs the fusion.
// alpha_override, when given, supplies raw pre-sigmoid alpha values in
// place of the predictor head output.
inline EnhanceResult enhance_image(const Tensor& image, const GuidanceNets& guidance,
                                   const PredictorNet& predictor, EnhanceMode mode, Tape* tape,
                                   const Tensor* alpha_override = nullptr) {
  if (image.rank() != 3 || image.extent(0) != 3) {
    throw std::invalid_argument("enhance_image: expected 3xHxW image");
  }
  EnhanceResult r;
  r.params = predict_global_params(image, predictor, tape);
  if (alpha_override) {
    r.params.alpha = sigmoid(*alpha_override, tape);
  }

  if (mode == EnhanceMode::kBaseline) {
    r.mask = Tensor::full(image.shape(), 1.0);
    r.objectness = Tensor::full({1, image.extent(1), image.extent(2)}, 0.5);
    r.enhanced = clamp(gamma_curve(image, r.params.alpha, r.mask, tape), 0.0, 1.0, tape);
    return r;
  }

  ObjectnessResult obj = objectness_forward(image, guidance, tape);
  r.objectness = obj.objectness;
  r.mask = mask_forward(obj.objectness, obj.features, guidance, tape);

  if (mode == EnhanceMode::kTargetAware) {
    r.enhanced = clamp(gamma_curve(image, r.params.alpha, r.mask, tape), 0.0, 1.0, tape);
  } else {
    r.enhanced = fuse_curves(image, r.mask, r.params, tape);
  }
  return r;
}

}  // namespace tae
