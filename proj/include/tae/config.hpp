#pragma once

// Engine and generator configuration: a strict JSON schema with defaults
// matching the training recipe. Unknown keys are rejected with their path.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tae/enhance.hpp"
#include "tae/guidance.hpp"
#include "tae/losses.hpp"
#include "tae/model.hpp"

namespace tae {

using Json = nlohmann::ordered_json;

enum class LrSchedule { kConstant, kCosine };

inline const char* to_string(LrSchedule s) {
  return s == LrSchedule::kConstant ? "constant" : "cosine";
}

inline LrSchedule parse_lr_schedule(const std::string& s) {
  if (s == "constant") return LrSchedule::kConstant;
  if (s == "cosine") return LrSchedule::kCosine;
  throw std::invalid_argument("unknown lr_schedule '" + s + "' (constant|cosine)");
}

inline const char* to_string(Reduction r) { return r == Reduction::kMean ? "mean" : "sum"; }

inline Reduction parse_reduction(const std::string& s) {
  if (s == "mean") return Reduction::kMean;
  if (s == "sum") return Reduction::kSum;
  throw std::invalid_argument("unknown reduction '" + s + "' (mean|sum)");
}

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  int input_size = 256;
  int frame_stride = 1;
  bool random_flip = false;
  LrSchedule lr_schedule = LrSchedule::kConstant;
};

struct GuidanceConfig {
  Reduction loc_reduction = Reduction::kMean;
  bool zero_outside_box = false;
};

struct EnhancementConfig {
  AlphaSource alpha_source = AlphaSource::kPredictor;
};

struct MetricsConfig {
  double precision_px = 20.0;
  std::string normp_convention = "auc";  // mean of the curve over [0, 0.5]
};

struct PathsConfig {
  std::string dataset;
  std::string out;
};

struct EngineConfig {
  std::uint64_t seed = 1;
  EnhanceMode mode = EnhanceMode::kTargetAwareMultiCurve;
  TrainConfig train;
  LossWeights weights;
  ExposureConfig exposure;
  GuidanceConfig guidance;
  EnhancementConfig enhancement;
  MetricsConfig metrics;
  PathsConfig paths;
};

struct SynthConfig {
  std::uint64_t seed = 7;
  int train_sequences = 30;
  int test_sequences = 10;
  int frames = 60;
  int width = 96;
  int height = 96;
  double base_intensity = 0.05;
  double noise_sigma = 0.02;
  double target_intensity = 0.25;
  int target_min_size = 10;
  int target_max_size = 16;
  double speed_min = 1.0;
  double speed_max = 2.5;
  int distractors = 0;
  std::string format = "png";
};

namespace detail {

inline void reject_unknown_keys(const Json& obj, const std::vector<std::string>& allowed,
                                const std::string& prefix) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw std::invalid_argument("config: unknown key '" + prefix + it.key() + "'");
    }
  }
}

template <class T>
void get_if(const Json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace detail

inline Json to_json(const EngineConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["mode"] = to_string(c.mode);
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"weight_decay", c.train.weight_decay},
                {"input_size", c.train.input_size},
                {"frame_stride", c.train.frame_stride},
                {"random_flip", c.train.random_flip},
                {"lr_schedule", to_string(c.train.lr_schedule)}};
  j["loss_weights"] = {{"loc", c.weights.loc},
                       {"exposure", c.weights.exposure},
                       {"color", c.weights.color},
                       {"tv", c.weights.tv}};
  j["exposure"] = {{"patch", c.exposure.patch}, {"target", c.exposure.target}};
  j["guidance"] = {{"loc_reduction", to_string(c.guidance.loc_reduction)},
                   {"zero_outside_box", c.guidance.zero_outside_box}};
  j["enhancement"] = {{"alpha_source", to_string(c.enhancement.alpha_source)}};
  j["metrics"] = {{"precision_px", c.metrics.precision_px},
                  {"normp_convention", c.metrics.normp_convention}};
  j["paths"] = {{"dataset", c.paths.dataset}, {"out", c.paths.out}};
  return j;
}

inline EngineConfig engine_config_from_json(const Json& j) {
  EngineConfig c;
  detail::reject_unknown_keys(j, {"seed", "mode", "train", "loss_weights", "exposure", "guidance",
                                  "enhancement", "metrics", "paths"},
                              "");
  detail::get_if(j, "seed", c.seed);
  if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("train")) {
    const Json& t = j.at("train");
    detail::reject_unknown_keys(t, {"epochs", "batch_size", "learning_rate", "weight_decay",
                                    "input_size", "frame_stride", "random_flip", "lr_schedule"},
                                "train.");
    detail::get_if(t, "epochs", c.train.epochs);
    detail::get_if(t, "batch_size", c.train.batch_size);
    detail::get_if(t, "learning_rate", c.train.learning_rate);
    detail::get_if(t, "weight_decay", c.train.weight_decay);
    detail::get_if(t, "input_size", c.train.input_size);
    detail::get_if(t, "frame_stride", c.train.frame_stride);
    detail::get_if(t, "random_flip", c.train.random_flip);
    if (t.contains("lr_schedule")) c.train.lr_schedule = parse_lr_schedule(t.at("lr_schedule"));
  }
  if (j.contains("loss_weights")) {
    const Json& w = j.at("loss_weights");
    detail::reject_unknown_keys(w, {"loc", "exposure", "color", "tv"}, "loss_weights.");
    detail::get_if(w, "loc", c.weights.loc);
    detail::get_if(w, "exposure", c.weights.exposure);
    detail::get_if(w, "color", c.weights.color);
    detail::get_if(w, "tv", c.weights.tv);
  }
  if (j.contains("exposure")) {
    const Json& e = j.at("exposure");
    detail::reject_unknown_keys(e, {"patch", "target"}, "exposure.");
    detail::get_if(e, "patch", c.exposure.patch);
    detail::get_if(e, "target", c.exposure.target);
  }
  if (j.contains("guidance")) {
    const Json& g = j.at("guidance");
    detail::reject_unknown_keys(g, {"loc_reduction", "zero_outside_box"}, "guidance.");
    if (g.contains("loc_reduction")) c.guidance.loc_reduction = parse_reduction(g.at("loc_reduction"));
    detail::get_if(g, "zero_outside_box", c.guidance.zero_outside_box);
  }
  if (j.contains("enhancement")) {
    const Json& e = j.at("enhancement");
    detail::reject_unknown_keys(e, {"alpha_source"}, "enhancement.");
    if (e.contains("alpha_source")) c.enhancement.alpha_source = parse_alpha_source(e.at("alpha_source"));
  }
  if (j.contains("metrics")) {
    const Json& m = j.at("metrics");
    detail::reject_unknown_keys(m, {"precision_px", "normp_convention"}, "metrics.");
    detail::get_if(m, "precision_px", c.metrics.precision_px);
    detail::get_if(m, "normp_convention", c.metrics.normp_convention);
    if (c.metrics.normp_convention != "auc") {
      throw std::invalid_argument("config: unsupported metrics.normp_convention '" +
                                  c.metrics.normp_convention + "'");
    }
  }
  if (j.contains("paths")) {
    const Json& p = j.at("paths");
    detail::reject_unknown_keys(p, {"dataset", "out"}, "paths.");
    detail::get_if(p, "dataset", c.paths.dataset);
    detail::get_if(p, "out", c.paths.out);
  }
  if (c.train.epochs < 0 || c.train.batch_size < 1 || c.train.learning_rate < 0.0 ||
      c.train.input_size < 8 || c.train.frame_stride < 1) {
    throw std::invalid_argument("config: invalid training parameters");
  }
  if (!(c.exposure.target > 0.0 && c.exposure.target < 1.0) || c.exposure.patch == 0) {
    throw std::invalid_argument("config: invalid exposure parameters");
  }
  if (c.weights.loc < 0.0 || c.weights.exposure < 0.0 || c.weights.color < 0.0 || c.weights.tv < 0.0) {
    throw std::invalid_argument("config: loss weights must be non-negative");
  }
  return c;
}

inline Json to_json(const SynthConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["train_sequences"] = c.train_sequences;
  j["test_sequences"] = c.test_sequences;
  j["frames"] = c.frames;
  j["width"] = c.width;
  j["height"] = c.height;
  j["base_intensity"] = c.base_intensity;
  j["noise_sigma"] = c.noise_sigma;
  j["target_intensity"] = c.target_intensity;
  j["target_min_size"] = c.target_min_size;
  j["target_max_size"] = c.target_max_size;
  j["speed_min"] = c.speed_min;
  j["speed_max"] = c.speed_max;
  j["distractors"] = c.distractors;
  j["format"] = c.format;
  return j;
}

inline SynthConfig synth_config_from_json(const Json& j) {
  SynthConfig c;
  detail::reject_unknown_keys(
      j, {"seed", "train_sequences", "test_sequences", "frames", "width", "height", "base_intensity",
          "noise_sigma", "target_intensity", "target_min_size", "target_max_size", "speed_min",
          "speed_max", "distractors", "format"},
      "");
  detail::get_if(j, "seed", c.seed);
  detail::get_if(j, "train_sequences", c.train_sequences);
  detail::get_if(j, "test_sequences", c.test_sequences);
  detail::get_if(j, "frames", c.frames);
  detail::get_if(j, "width", c.width);
  detail::get_if(j, "height", c.height);
  detail::get_if(j, "base_intensity", c.base_intensity);
  detail::get_if(j, "noise_sigma", c.noise_sigma);
  detail::get_if(j, "target_intensity", c.target_intensity);
  detail::get_if(j, "target_min_size", c.target_min_size);
  detail::get_if(j, "target_max_size", c.target_max_size);
  detail::get_if(j, "speed_min", c.speed_min);
  detail::get_if(j, "speed_max", c.speed_max);
  detail::get_if(j, "distractors", c.distractors);
  detail::get_if(j, "format", c.format);
  if (c.frames < 2 || c.width < 16 || c.height < 16 || c.train_sequences < 0 ||
      c.test_sequences < 0 || c.target_min_size < 2 || c.target_max_size < c.target_min_size ||
      c.noise_sigma < 0.0) {
    throw std::invalid_argument("config: invalid synth parameters");
  }
  if (c.format != "png" && c.format != "ppm") {
    throw std::invalid_argument("config: synth format must be png or ppm");
  }
  return c;
}

template <class Config>
Config load_config_file(const std::filesystem::path& path, Config (*from_json)(const Json&)) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path.string());
  Json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("config: parse error in " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

inline EngineConfig load_engine_config(const std::filesystem::path& path) {
  return load_config_file<EngineConfig>(path, engine_config_from_json);
}

inline SynthConfig load_synth_config(const std::filesystem::path& path) {
  return load_config_file<SynthConfig>(path, synth_config_from_json);
}

inline void save_config(const std::filesystem::path& path, const Json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("config: cannot open " + path.string() + " for writing");
  f << j.dump(2) << "\n";
}

}  // namespace tae
