#pragma once

// Pluggable tracker interface with the built-in normalized cross-correlation
// reference tracker. One target per run; no template updates after init.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tae/bbox.hpp"
#include "tae/tensor.hpp"

namespace tae {

class TrackerAdapter {
 public:
  virtual ~TrackerAdapter() = default;
  virtual void init(const Tensor& frame, const BBox& box) = 0;
  virtual BBox update(const Tensor& frame) = 0;
};

namespace detail {

inline std::vector<double> to_gray(const Tensor& frame) {
  const std::size_t c = frame.extent(0), hw = frame.extent(1) * frame.extent(2);
  std::vector<double> g(hw, 0.0);
  const double* p = frame.data();
  const double inv = 1.0 / static_cast<double>(c);
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t i = 0; i < hw; ++i) g[i] += p[ci * hw + i] * inv;
  return g;
}

}  // namespace detail

// Zero-normalized cross-correlation of a fixed frame-1 template over a
// search window centered on the previous box. The template is a square crop
// of side template_size around the init box center (clipped to the frame);
// the predicted box keeps the init size.
class NccTracker : public TrackerAdapter {
 public:
  NccTracker(int template_size, int search_radius)
      : tsize_(template_size), radius_(search_radius) {
    if (template_size < 3) throw std::invalid_argument("ncc_tracker: template size must be >= 3");
    if (search_radius < 1) throw std::invalid_argument("ncc_tracker: search radius must be >= 1");
  }

  void init(const Tensor& frame, const BBox& box) override {
    require_valid(box, "ncc_tracker");
    frame_h_ = static_cast<long>(frame.extent(1));
    frame_w_ = static_cast<long>(frame.extent(2));
    const auto gray = detail::to_gray(frame);

    const auto [cx, cy] = box_center(box);
    tw_ = std::min<long>(tsize_, frame_w_);
    th_ = std::min<long>(tsize_, frame_h_);
    tx_ = std::clamp<long>(std::lround(cx) - tw_ / 2, 0, frame_w_ - tw_);
    ty_ = std::clamp<long>(std::lround(cy) - th_ / 2, 0, frame_h_ - th_);

    tmpl_.resize(static_cast<std::size_t>(tw_ * th_));
    double sum = 0.0;
    for (long y = 0; y < th_; ++y)
      for (long x = 0; x < tw_; ++x) {
        const double v = gray[static_cast<std::size_t>((ty_ + y) * frame_w_ + tx_ + x)];
        tmpl_[static_cast<std::size_t>(y * tw_ + x)] = v;
        sum += v;
      }
    const double mean = sum / static_cast<double>(tw_ * th_);
    tnorm_ = 0.0;
    for (auto& v : tmpl_) {
      v -= mean;
      tnorm_ += v * v;
    }
    tnorm_ = std::sqrt(tnorm_);

    box_ = box;
    off_x_ = box.x - static_cast<double>(tx_);
    off_y_ = box.y - static_cast<double>(ty_);
    initialized_ = true;
  }

  BBox update(const Tensor& frame) override {
    if (!initialized_) throw std::logic_error("ncc_tracker: update before init");
    if (static_cast<long>(frame.extent(1)) != frame_h_ || static_cast<long>(frame.extent(2)) != frame_w_) {
      throw std::invalid_argument("ncc_tracker: frame size changed mid-sequence");
    }
    const auto gray = detail::to_gray(frame);

    const long prev_tx = std::clamp<long>(std::lround(box_.x - off_x_), 0, frame_w_ - tw_);
    const long prev_ty = std::clamp<long>(std::lround(box_.y - off_y_), 0, frame_h_ - th_);
    const long x_lo = std::max<long>(0, prev_tx - radius_);
    const long x_hi = std::min<long>(frame_w_ - tw_, prev_tx + radius_);
    const long y_lo = std::max<long>(0, prev_ty - radius_);
    const long y_hi = std::min<long>(frame_h_ - th_, prev_ty + radius_);

    double best = -2.0;
    long best_x = prev_tx, best_y = prev_ty;
    for (long wy = y_lo; wy <= y_hi; ++wy)
      for (long wx = x_lo; wx <= x_hi; ++wx) {
        const double s = score(gray, wx, wy);
        if (s > best) {
          best = s;
          best_x = wx;
          best_y = wy;
        }
      }
    box_.x = static_cast<double>(best_x) + off_x_;
    box_.y = static_cast<double>(best_y) + off_y_;
    return box_;
  }

  // Exposed for tests: ZNCC of the stored template at window (wx, wy).
  double score(const std::vector<double>& gray, long wx, long wy) const {
    const std::size_t n = static_cast<std::size_t>(tw_ * th_);
    double wsum = 0.0, wsq = 0.0, cross = 0.0;
    for (long y = 0; y < th_; ++y) {
      const double* row = gray.data() + (wy + y) * frame_w_ + wx;
      const double* trow = tmpl_.data() + y * tw_;
      for (long x = 0; x < tw_; ++x) {
        const double v = row[x];
        wsum += v;
        wsq += v * v;
        cross += v * trow[x];  // template already zero-mean
      }
    }
    const double wmean = wsum / static_cast<double>(n);
    const double wvar = wsq - wsum * wmean;
    if (wvar <= 1e-12 || tnorm_ <= 1e-12) return -1.0;  // flat patch, no evidence
    return cross / (tnorm_ * std::sqrt(wvar));
  }

 private:
  int tsize_, radius_;
  bool initialized_ = false;
  long frame_w_ = 0, frame_h_ = 0;
  long tx_ = 0, ty_ = 0, tw_ = 0, th_ = 0;
  double off_x_ = 0.0, off_y_ = 0.0;
  double tnorm_ = 0.0;
  std::vector<double> tmpl_;
  BBox box_;
};

inline std::unique_ptr<TrackerAdapter> ncc_tracker(int template_size, int search_radius) {
  return std::make_unique<NccTracker>(template_size, search_radius);
}

// Replays the ground truth; for harness validation.
class OracleTracker : public TrackerAdapter {
 public:
  explicit OracleTracker(std::vector<std::optional<BBox>> gt) : gt_(std::move(gt)) {}

  void init(const Tensor&, const BBox& box) override {
    frame_ = 0;
    last_ = box;
  }

  BBox update(const Tensor&) override {
    ++frame_;
    if (frame_ < gt_.size() && gt_[frame_]) last_ = *gt_[frame_];
    return last_;
  }

 private:
  std::vector<std::optional<BBox>> gt_;
  std::size_t frame_ = 0;
  BBox last_;
};

// Always returns the init box.
class StaticTracker : public TrackerAdapter {
 public:
  void init(const Tensor&, const BBox& box) override { box_ = box; }
  BBox update(const Tensor&) override { return box_; }

 private:
  BBox box_;
};

}  // namespace tae
