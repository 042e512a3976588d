#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace tae {

// Axis-aligned box, top-left corner plus extents, in pixels.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool valid() const { return w > 0.0 && h > 0.0; }
};

inline std::pair<double, double> box_center(const BBox& b) {
  return {b.x + b.w / 2.0, b.y + b.h / 2.0};
}

inline void require_valid(const BBox& b, const char* where) {
  if (!b.valid()) {
    throw std::invalid_argument(std::string(where) + ": degenerate box w=" + std::to_string(b.w) +
                                " h=" + std::to_string(b.h));
  }
}

// Whether the box overlaps the frame [0,W) x [0,H) at all.
inline bool intersects_frame(const BBox& b, std::size_t width, std::size_t height) {
  return b.x < static_cast<double>(width) && b.y < static_cast<double>(height) &&
         b.x + b.w > 0.0 && b.y + b.h > 0.0;
}

}  // namespace tae
