#pragma once

// Unsupervised curve-training losses (exposure, color constancy, mask
// smoothness) and the weighted total objective.

#include <cstddef>
#include <stdexcept>

#include "tae/tensor.hpp"

namespace tae {

struct LossWeights {
  double loc = 1.0;
  double exposure = 1.0;
  double color = 0.2;
  double tv = 0.1;
};

struct ExposureConfig {
  std::size_t patch = 16;
  double target = 0.6;
};

// Mean absolute deviation of patch-mean intensity from the exposure target.
// Intensity is the RGB mean; patches are non-overlapping, trailing partial
// patches dropped. Images smaller than one patch fall back to a single
// global patch.
inline Tensor exposure_loss(const Tensor& enhanced, const ExposureConfig& cfg, Tape* tape) {
  if (enhanced.rank() != 3) throw std::invalid_argument("exposure_loss: expected CHW image");
  if (cfg.patch == 0) throw std::invalid_argument("exposure_loss: zero patch size");
  Tensor intensity = channel_mean(enhanced, tape);  // 1 x H x W
  Tensor patch_means;
  if (enhanced.extent(1) < cfg.patch || enhanced.extent(2) < cfg.patch) {
    patch_means = mean(intensity, tape);
  } else {
    patch_means = avg_pool2d(intensity, cfg.patch, cfg.patch, tape);
  }
  return mean(abs(sub(patch_means, cfg.target, tape), tape), tape);
}

// Gray-world consistency: sum of squared differences of the global channel
// means over the pairs (R,G), (R,B), (G,B).
inline Tensor color_loss(const Tensor& enhanced, Tape* tape) {
  if (enhanced.rank() != 3 || enhanced.extent(0) != 3) {
    throw std::invalid_argument("color_loss: expected 3xHxW image");
  }
  Tensor means = global_avg_pool(enhanced, tape);
  Tensor r = select(means, 0, tape);
  Tensor g = select(means, 1, tape);
  Tensor b = select(means, 2, tape);
  Tensor rg = sub(r, g, tape);
  Tensor rb = sub(r, b, tape);
  Tensor gb = sub(g, b, tape);
  Tensor loss = mul(rg, rg, tape);
  loss = add(loss, mul(rb, rb, tape), tape);
  return add(loss, mul(gb, gb, tape), tape);
}

// Squared forward-difference total variation of the mask, horizontal and
// vertical terms each averaged over their valid positions. A direction with
// no valid positions contributes zero.
inline Tensor tv_loss(const Tensor& mask, Tape* tape) {
  if (mask.rank() != 3) throw std::invalid_argument("tv_loss: expected CHW mask");
  const std::size_t c = mask.extent(0), h = mask.extent(1), w = mask.extent(2);
  const std::size_t nh = w >= 2 ? c * h * (w - 1) : 0;
  const std::size_t nv = h >= 2 ? c * (h - 1) * w : 0;
  const double* p = mask.data();
  double sh = 0.0, sv = 0.0;
  for (std::size_t ci = 0; ci < c; ++ci) {
    const double* chan = p + ci * h * w;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x + 1 < w; ++x) {
        const double d = chan[y * w + x + 1] - chan[y * w + x];
        sh += d * d;
      }
    for (std::size_t y = 0; y + 1 < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double d = chan[(y + 1) * w + x] - chan[y * w + x];
        sv += d * d;
      }
  }
  double total = 0.0;
  if (nh) total += sh / static_cast<double>(nh);
  if (nv) total += sv / static_cast<double>(nv);
  Tensor out = Tensor::scalar(total);
  if (tape) {
    tape->record([mask = mask, out, c, h, w, nh, nv]() mutable {
      if (!out.has_grad()) return;
      const double g = out.grad_data()[0];
      const double* p = mask.data();
      double* gm = mask.grad_data();
      const double ih = nh ? 2.0 * g / static_cast<double>(nh) : 0.0;
      const double iv = nv ? 2.0 * g / static_cast<double>(nv) : 0.0;
      for (std::size_t ci = 0; ci < c; ++ci) {
        const double* chan = p + ci * h * w;
        double* gchan = gm + ci * h * w;
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x + 1 < w; ++x) {
            const double d = (chan[y * w + x + 1] - chan[y * w + x]) * ih;
            gchan[y * w + x + 1] += d;
            gchan[y * w + x] -= d;
          }
        for (std::size_t y = 0; y + 1 < h; ++y)
          for (std::size_t x = 0; x < w; ++x) {
            const double d = (chan[(y + 1) * w + x] - chan[y * w + x]) * iv;
            gchan[(y + 1) * w + x] += d;
            gchan[y * w + x] -= d;
          }
      }
    });
  }
  return out;
}

// L = w_loc * loc + w_1 * exposure + w_2 * color + w_3 * tv.
inline Tensor total_loss(const Tensor& loc, const Tensor& exposure, const Tensor& color,
                         const Tensor& tv, const LossWeights& w, Tape* tape) {
  Tensor t = mul(loc, w.loc, tape);
  t = add(t, mul(exposure, w.exposure, tape), tape);
  t = add(t, mul(color, w.color, tape), tape);
  return add(t, mul(tv, w.tv, tape), tape);
}

}  // namespace tae
