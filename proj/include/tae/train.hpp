#pragma once

// Training loop: resize, forward enhancement, the four losses, backward and
// AdamW per batch. Deterministic under a fixed seed and data order.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tae/checkpoint.hpp"
#include "tae/config.hpp"
#include "tae/dataset.hpp"
#include "tae/enhance.hpp"
#include "tae/guidance.hpp"
#include "tae/image_io.hpp"
#include "tae/losses.hpp"
#include "tae/model.hpp"
#include "tae/optim.hpp"
#include "tae/tensor.hpp"

namespace tae {

struct FrameSample {
  std::filesystem::path path;
  BBox box;
};

struct EpochStats {
  double loc = 0.0;
  double exposure = 0.0;
  double color = 0.0;
  double tv = 0.0;
  double total = 0.0;
  std::size_t samples = 0;
  std::size_t skipped = 0;
};

// Flattens sequence records into (frame, box) samples, keeping every
// frame_stride-th annotated frame of each sequence.
inline std::vector<FrameSample> collect_samples(const std::vector<SequenceRecord>& records,
                                                int frame_stride) {
  if (frame_stride < 1) throw std::invalid_argument("collect_samples: frame_stride must be >= 1");
  std::vector<FrameSample> samples;
  for (const auto& rec : records) {
    for (std::size_t f = 0; f < rec.frames.size(); f += static_cast<std::size_t>(frame_stride)) {
      if (rec.boxes[f]) samples.push_back({rec.frames[f], *rec.boxes[f]});
    }
  }
  return samples;
}

namespace detail {

inline BBox rescale_box(const BBox& b, double sx, double sy) {
  return {b.x * sx, b.y * sy, b.w * sx, b.h * sy};
}

struct SampleLosses {
  Tensor loc, exposure, color, tv;
};

inline SampleLosses sample_losses(const TaeModel& model, const Tensor& image, const BBox& box,
                                  const EngineConfig& cfg, Tape* tape) {
  SampleLosses out;
  const EnhanceResult r = model.enhance(image, cfg.mode, tape);
  out.exposure = exposure_loss(r.enhanced, cfg.exposure, tape);
  out.color = color_loss(r.enhanced, tape);
  if (cfg.mode == EnhanceMode::kBaseline) {
    out.loc = Tensor::scalar(0.0);
    out.tv = Tensor::scalar(0.0);  // mask is constant 1
  } else {
    const Tensor label = gaussian_soft_label(box, image.extent(1), image.extent(2),
                                             cfg.guidance.zero_outside_box);
    out.loc = loc_loss(r.objectness, label, tape, cfg.guidance.loc_reduction);
    out.tv = tv_loss(r.mask, tape);
  }
  return out;
}

}  // namespace detail

// One full pass over the samples in the given order. Corrupt samples are
// skipped with a warning; an epoch that skips everything is an error.
inline EpochStats train_epoch(const std::vector<FrameSample>& samples, TaeModel& model,
                              AdamW& optimizer, const EngineConfig& cfg,
                              std::mt19937_64& flip_rng) {
  if (samples.empty()) throw std::invalid_argument("train_epoch: no samples");
  const auto target = static_cast<std::size_t>(cfg.train.input_size);
  EpochStats stats;

  std::size_t cursor = 0;
  while (cursor < samples.size()) {
    const std::size_t batch_end = std::min(cursor + static_cast<std::size_t>(cfg.train.batch_size),
                                           samples.size());
    Tape tape;
    Tensor loc_acc = Tensor::scalar(0.0);
    Tensor exp_acc = Tensor::scalar(0.0);
    Tensor col_acc = Tensor::scalar(0.0);
    Tensor tv_acc = Tensor::scalar(0.0);
    std::size_t batch_n = 0;

    for (std::size_t s = cursor; s < batch_end; ++s) {
      Tensor image;
      BBox box = samples[s].box;
      try {
        const Tensor raw = read_image(samples[s].path);
        const double sx = static_cast<double>(target) / static_cast<double>(raw.extent(2));
        const double sy = static_cast<double>(target) / static_cast<double>(raw.extent(1));
        image = resize_bilinear(raw, target, target);
        box = detail::rescale_box(box, sx, sy);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "warning: skipping sample %s: %s\n",
                     samples[s].path.string().c_str(), e.what());
        ++stats.skipped;
        continue;
      }
      if (cfg.train.random_flip && (flip_rng() & 1u)) {
        image = flip_horizontal(image);
        box.x = static_cast<double>(target) - box.x - box.w;
      }
      const auto losses = detail::sample_losses(model, image, box, cfg, &tape);
      loc_acc = add(loc_acc, losses.loc, &tape);
      exp_acc = add(exp_acc, losses.exposure, &tape);
      col_acc = add(col_acc, losses.color, &tape);
      tv_acc = add(tv_acc, losses.tv, &tape);
      ++batch_n;
    }
    cursor = batch_end;
    if (batch_n == 0) continue;

    const double inv = 1.0 / static_cast<double>(batch_n);
    loc_acc = mul(loc_acc, inv, &tape);
    exp_acc = mul(exp_acc, inv, &tape);
    col_acc = mul(col_acc, inv, &tape);
    tv_acc = mul(tv_acc, inv, &tape);
    Tensor batch_loss = total_loss(loc_acc, exp_acc, col_acc, tv_acc, cfg.weights, &tape);

    optimizer.zero_grad();
    tape.backward(batch_loss);
    optimizer.step();

    stats.loc += loc_acc.value() * static_cast<double>(batch_n);
    stats.exposure += exp_acc.value() * static_cast<double>(batch_n);
    stats.color += col_acc.value() * static_cast<double>(batch_n);
    stats.tv += tv_acc.value() * static_cast<double>(batch_n);
    stats.total += batch_loss.value() * static_cast<double>(batch_n);
    stats.samples += batch_n;
  }

  if (stats.samples == 0) throw std::runtime_error("train_epoch: every sample was skipped");
  const double inv = 1.0 / static_cast<double>(stats.samples);
  stats.loc *= inv;
  stats.exposure *= inv;
  stats.color *= inv;
  stats.tv *= inv;
  stats.total *= inv;
  return stats;
}

struct TrainResult {
  TaeModel model;
  std::vector<EpochStats> epochs;
  std::filesystem::path final_checkpoint;
};

// Full run: seeded init, per-epoch shuffling, loss CSV and checkpoints
// under out_dir.
inline TrainResult train_run(const EngineConfig& cfg, const std::vector<SequenceRecord>& records,
                             const std::filesystem::path& out_dir, bool write_epoch_checkpoints = true) {
  std::filesystem::create_directories(out_dir);
  auto samples = collect_samples(records, cfg.train.frame_stride);
  if (samples.empty()) throw std::runtime_error("train: dataset yielded no annotated samples");

  TrainResult result;
  result.model = TaeModel::init(cfg.seed, cfg.enhancement.alpha_source);
  AdamWConfig ocfg;
  ocfg.lr = cfg.train.learning_rate;
  ocfg.weight_decay = cfg.train.weight_decay;
  AdamW optimizer(result.model.trainable_params(cfg.mode), ocfg);

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  const std::string config_json = to_json(cfg).dump();

  std::ofstream csv(out_dir / "loss.csv", std::ios::trunc);
  csv << "epoch,loc,exp,color,tv,total\n";

  for (int e = 0; e < cfg.train.epochs; ++e) {
    if (cfg.train.lr_schedule == LrSchedule::kCosine && cfg.train.epochs > 1) {
      const double t = static_cast<double>(e) / static_cast<double>(cfg.train.epochs);
      optimizer.set_lr(cfg.train.learning_rate * 0.5 * (1.0 + std::cos(3.14159265358979323846 * t)));
    }
    std::shuffle(samples.begin(), samples.end(), rng);
    const EpochStats stats = train_epoch(samples, result.model, optimizer, cfg, rng);
    result.epochs.push_back(stats);
    char row[256];
    std::snprintf(row, sizeof(row), "%d,%.9f,%.9f,%.9f,%.9f,%.9f\n", e + 1, stats.loc,
                  stats.exposure, stats.color, stats.tv, stats.total);
    csv << row;
    csv.flush();
    if (write_epoch_checkpoints) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_epoch_%03d.bin", e + 1);
      auto tensors = result.model.named_params();
      const auto ostate = optimizer.state();
      tensors.insert(tensors.end(), ostate.begin(), ostate.end());
      write_checkpoint(out_dir / name, tensors, config_json);
    }
  }

  auto tensors = result.model.named_params();
  const auto ostate = optimizer.state();
  tensors.insert(tensors.end(), ostate.begin(), ostate.end());
  result.final_checkpoint = out_dir / "ckpt_final.bin";
  write_checkpoint(result.final_checkpoint, tensors, config_json);
  return result;
}

}  // namespace tae
