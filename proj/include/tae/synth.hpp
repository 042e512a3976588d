#pragma once

// Deterministic synthetic benchmark generator: dark noisy frames with a
// brighter square target on linear (wall-bouncing) motion, written in the
// standard sequence layout with exact ground truth.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "tae/bbox.hpp"
#include "tae/config.hpp"
#include "tae/image_io.hpp"
#include "tae/tensor.hpp"

namespace tae {

namespace detail {

struct MovingSquare {
  double x, y;    // top-left, continuous
  double vx, vy;  // px/frame
  int size;
  double intensity;
};

inline void advance(MovingSquare& s, double w, double h) {
  s.x += s.vx;
  s.y += s.vy;
  const double max_x = w - s.size - 1.0;
  const double max_y = h - s.size - 1.0;
  if (s.x < 1.0) { s.x = 2.0 - s.x; s.vx = -s.vx; }
  if (s.y < 1.0) { s.y = 2.0 - s.y; s.vy = -s.vy; }
  if (s.x > max_x) { s.x = 2.0 * max_x - s.x; s.vx = -s.vx; }
  if (s.y > max_y) { s.y = 2.0 * max_y - s.y; s.vy = -s.vy; }
  s.x = std::clamp(s.x, 1.0, max_x);
  s.y = std::clamp(s.y, 1.0, max_y);
}

inline void paint_square(Tensor& frame, int x, int y, int size, double value) {
  const std::size_t h = frame.extent(1), w = frame.extent(2);
  for (int yy = y; yy < y + size; ++yy)
    for (int xx = x; xx < x + size; ++xx) {
      if (yy < 0 || xx < 0 || yy >= static_cast<int>(h) || xx >= static_cast<int>(w)) continue;
      for (std::size_t c = 0; c < 3; ++c) frame.at(c, yy, xx) = value;
    }
}

}  // namespace detail

// Generates train/test splits under root. Frames are grayscale-valued RGB:
// base intensity plus the target square plus Gaussian noise, clamped and
// quantized by the 8-bit codec.
inline void synth_dataset(const SynthConfig& cfg, const std::filesystem::path& root) {
  std::filesystem::create_directories(root);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> size_dist(cfg.target_min_size, cfg.target_max_size);
  std::uniform_real_distribution<double> speed_dist(cfg.speed_min, cfg.speed_max);
  std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * 3.14159265358979323846);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma > 0.0 ? cfg.noise_sigma : 1.0);

  const int total = cfg.train_sequences + cfg.test_sequences;
  std::ofstream train_list(root / "train.txt", std::ios::trunc);
  std::ofstream test_list(root / "test.txt", std::ios::trunc);

  for (int s = 0; s < total; ++s) {
    char id[32];
    std::snprintf(id, sizeof(id), "seq_%03d", s);
    const bool is_train = s < cfg.train_sequences;
    (is_train ? train_list : test_list) << id << "\n";

    const std::filesystem::path seq_dir = root / id;
    const std::filesystem::path img_dir = seq_dir / "img";
    std::filesystem::create_directories(img_dir);

    detail::MovingSquare target;
    target.size = size_dist(rng);
    target.intensity = cfg.target_intensity;
    target.x = 2.0 + unit(rng) * (cfg.width - target.size - 4.0);
    target.y = 2.0 + unit(rng) * (cfg.height - target.size - 4.0);
    const double speed = speed_dist(rng);
    const double angle = angle_dist(rng);
    target.vx = speed * std::cos(angle);
    target.vy = speed * std::sin(angle);

    std::vector<detail::MovingSquare> distractors;
    for (int d = 0; d < cfg.distractors; ++d) {
      detail::MovingSquare ds;
      ds.size = std::max(2, target.size / 3);
      ds.intensity = cfg.target_intensity;
      ds.x = 2.0 + unit(rng) * (cfg.width - ds.size - 4.0);
      ds.y = 2.0 + unit(rng) * (cfg.height - ds.size - 4.0);
      ds.vx = ds.vy = 0.0;  // static clutter
      distractors.push_back(ds);
    }

    std::ofstream gt(seq_dir / "groundtruth_rect.txt", std::ios::trunc);
    for (int f = 0; f < cfg.frames; ++f) {
      Tensor frame = Tensor::full({3, static_cast<std::size_t>(cfg.height),
                                   static_cast<std::size_t>(cfg.width)},
                                  cfg.base_intensity);
      for (const auto& ds : distractors) {
        detail::paint_square(frame, static_cast<int>(std::lround(ds.x)),
                             static_cast<int>(std::lround(ds.y)), ds.size, ds.intensity);
      }
      const int tx = static_cast<int>(std::lround(target.x));
      const int ty = static_cast<int>(std::lround(target.y));
      detail::paint_square(frame, tx, ty, target.size, target.intensity);

      // one shared noise field keeps the channels equal (grayscale frames)
      const std::size_t hw = static_cast<std::size_t>(cfg.width) * cfg.height;
      const bool noisy = cfg.noise_sigma > 0.0;
      double* p = frame.data();
      for (std::size_t i = 0; i < hw; ++i) {
        const double n = noisy ? noise(rng) : 0.0;
        p[i] = std::clamp(p[i] + n, 0.0, 1.0);
        p[hw + i] = p[i];
        p[2 * hw + i] = p[i];
      }

      char name[32];
      std::snprintf(name, sizeof(name), "%04d.%s", f + 1, cfg.format.c_str());
      write_image(img_dir / name, frame);
      gt << tx << "," << ty << "," << target.size << "," << target.size << "\n";

      detail::advance(target, cfg.width, cfg.height);
    }
  }
}

}  // namespace tae
