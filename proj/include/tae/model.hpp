#pragma once

#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tae/checkpoint.hpp"
#include "tae/enhance.hpp"
#include "tae/guidance.hpp"
#include "tae/tensor.hpp"

namespace tae {

enum class AlphaSource { kPredictor, kGlobal };

inline const char* to_string(AlphaSource s) {
  return s == AlphaSource::kPredictor ? "predictor" : "global";
}

inline AlphaSource parse_alpha_source(const std::string& s) {
  if (s == "predictor") return AlphaSource::kPredictor;
  if (s == "global") return AlphaSource::kGlobal;
  throw std::invalid_argument("unknown alpha_source '" + s + "' (predictor|global)");
}

// The full enhancer: guidance nets, Global Parameter Predictor and the
// optional free per-channel alpha parameters.
struct TaeModel {
  GuidanceNets guidance;
  PredictorNet predictor;
  Tensor alpha_raw;  // {3} pre-sigmoid, used when alpha_source == kGlobal
  AlphaSource alpha_source = AlphaSource::kPredictor;

  static TaeModel init(std::uint64_t seed, AlphaSource source = AlphaSource::kPredictor) {
    std::mt19937_64 rng(seed);
    TaeModel m;
    m.guidance = GuidanceNets::init(rng);
    m.predictor = PredictorNet::init(rng);
    m.alpha_raw = Tensor::zeros({3});  // sigmoid(0) = 0.5
    m.alpha_source = source;
    return m;
  }

  std::vector<std::pair<std::string, Tensor>> named_params() const {
    auto out = guidance.named_params();
    auto pred = predictor.named_params();
    out.insert(out.end(), pred.begin(), pred.end());
    out.emplace_back("alpha_raw", alpha_raw);
    return out;
  }

  // Baseline mode trains only the global predictor path; guidance nets are
  // excluded so their parameters stay untouched.
  std::vector<std::pair<std::string, Tensor>> trainable_params(EnhanceMode mode) const {
    if (mode == EnhanceMode::kBaseline) {
      auto out = predictor.named_params();
      out.emplace_back("alpha_raw", alpha_raw);
      return out;
    }
    return named_params();
  }

  EnhanceResult enhance(const Tensor& image, EnhanceMode mode, Tape* tape) const {
    const Tensor* override_alpha = alpha_source == AlphaSource::kGlobal ? &alpha_raw : nullptr;
    return enhance_image(image, guidance, predictor, mode, tape, override_alpha);
  }

  void load(const CheckpointData& data) { assign_named_tensors(named_params(), data.tensors); }
};

}  // namespace tae
