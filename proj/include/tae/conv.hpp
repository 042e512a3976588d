#pragma once

#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>

#include "tae/tensor.hpp"

namespace tae {

// 2D convolution layer (cross-correlation, as usual for CNNs).
// weights: out_channels x in_channels x kh x kw, bias: out_channels.
struct ConvLayer {
  Tensor weights;
  Tensor bias;
  int stride = 1;
  int padding = 0;

  std::size_t out_channels() const { return weights.extent(0); }
  std::size_t in_channels() const { return weights.extent(1); }
  std::size_t kernel_h() const { return weights.extent(2); }
  std::size_t kernel_w() const { return weights.extent(3); }

  // Fan-in-scaled uniform weights, zero bias. zero_init produces an
  // all-zero layer for heads that should start at the identity regime.
  static ConvLayer init(std::size_t out_ch, std::size_t in_ch, std::size_t k, int stride,
                        int padding, std::mt19937_64& rng, bool zero_init = false) {
    ConvLayer layer;
    layer.stride = stride;
    layer.padding = padding;
    layer.weights = Tensor::zeros({out_ch, in_ch, k, k});
    layer.bias = Tensor::zeros({out_ch});
    if (!zero_init) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * k * k));
      std::uniform_real_distribution<double> dist(-bound, bound);
      double* w = layer.weights.data();
      for (std::size_t i = 0; i < layer.weights.size(); ++i) w[i] = dist(rng);
    }
    return layer;
  }
};

namespace detail {

inline std::size_t conv_out_extent(std::size_t in, std::size_t k, int stride, int padding) {
  const long padded = static_cast<long>(in) + 2L * padding;
  if (padded < static_cast<long>(k)) {
    throw std::invalid_argument("conv2d: spatial extent " + std::to_string(in) + " with padding " +
                                std::to_string(padding) + " smaller than kernel " + std::to_string(k));
  }
  return static_cast<std::size_t>((padded - static_cast<long>(k)) / stride) + 1;
}

}  // namespace detail

inline Tensor conv2d(const Tensor& input, const ConvLayer& layer, Tape* tape) {
  if (input.rank() != 3) {
    throw std::invalid_argument("conv2d: expected CHW input, got " + detail::shape_str(input.shape()));
  }
  if (input.extent(0) != layer.in_channels()) {
    throw std::invalid_argument("conv2d: input shape " + detail::shape_str(input.shape()) +
                                " incompatible with weights " + detail::shape_str(layer.weights.shape()));
  }
  if (layer.stride < 1 || layer.padding < 0) throw std::invalid_argument("conv2d: bad stride/padding");

  const std::size_t ic = layer.in_channels(), oc = layer.out_channels();
  const std::size_t kh = layer.kernel_h(), kw = layer.kernel_w();
  const std::size_t h = input.extent(1), w = input.extent(2);
  const int s = layer.stride, p = layer.padding;
  const std::size_t oh = detail::conv_out_extent(h, kh, s, p);
  const std::size_t ow = detail::conv_out_extent(w, kw, s, p);

  Tensor out = Tensor::zeros({oc, oh, ow});
  Tensor weights = layer.weights;
  Tensor bias = layer.bias;

  const double* pin = input.data();
  const double* pw = weights.data();
  double* po = out.data();
  for (std::size_t o = 0; o < oc; ++o) {
    const double b = bias[o];
    double* orow = po + o * oh * ow;
    for (std::size_t i = 0; i < oh * ow; ++i) orow[i] = b;
    for (std::size_t c = 0; c < ic; ++c) {
      const double* ichan = pin + c * h * w;
      for (std::size_t ky = 0; ky < kh; ++ky)
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const double wv = pw[((o * ic + c) * kh + ky) * kw + kx];
          if (wv == 0.0) continue;
          for (std::size_t y = 0; y < oh; ++y) {
            const long iy = static_cast<long>(y) * s + static_cast<long>(ky) - p;
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            const double* irow = ichan + static_cast<std::size_t>(iy) * w;
            double* od = orow + y * ow;
            // valid x range: 0 <= x*s + kx - p < w
            for (std::size_t x = 0; x < ow; ++x) {
              const long ix = static_cast<long>(x) * s + static_cast<long>(kx) - p;
              if (ix < 0 || ix >= static_cast<long>(w)) continue;
              od[x] += wv * irow[static_cast<std::size_t>(ix)];
            }
          }
        }
    }
  }

  if (tape) {
    tape->record([input = input, weights, bias, out, ic, oc, kh, kw, h, w, oh, ow, s, p]() mutable {
      if (!out.has_grad()) return;
      const double* go = out.grad_data();
      const double* pin = input.data();
      const double* pw = weights.data();
      double* gin = input.grad_data();
      double* gw = weights.grad_data();
      double* gb = bias.grad_data();
      for (std::size_t o = 0; o < oc; ++o) {
        const double* grow = go + o * oh * ow;
        double acc = 0.0;
        for (std::size_t i = 0; i < oh * ow; ++i) acc += grow[i];
        gb[o] += acc;
        for (std::size_t c = 0; c < ic; ++c) {
          const double* ichan = pin + c * h * w;
          double* gchan = gin + c * h * w;
          for (std::size_t ky = 0; ky < kh; ++ky)
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const std::size_t widx = ((o * ic + c) * kh + ky) * kw + kx;
              const double wv = pw[widx];
              double wacc = 0.0;
              for (std::size_t y = 0; y < oh; ++y) {
                const long iy = static_cast<long>(y) * s + static_cast<long>(ky) - p;
                if (iy < 0 || iy >= static_cast<long>(h)) continue;
                const double* irow = ichan + static_cast<std::size_t>(iy) * w;
                double* grin = gchan + static_cast<std::size_t>(iy) * w;
                const double* gd = grow + y * ow;
                for (std::size_t x = 0; x < ow; ++x) {
                  const long ix = static_cast<long>(x) * s + static_cast<long>(kx) - p;
                  if (ix < 0 || ix >= static_cast<long>(w)) continue;
                  const double g = gd[x];
                  grin[static_cast<std::size_t>(ix)] += wv * g;
                  wacc += irow[static_cast<std::size_t>(ix)] * g;
                }
              }
              gw[widx] += wacc;
            }
        }
      }
    });
  }
  return out;
}

}  // namespace tae
