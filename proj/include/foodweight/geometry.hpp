#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include "foodweight/error.hpp"

namespace foodweight {

/// Unvalidated corner coordinates, as they arrive from a detector or a file.
struct BoxCoords {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
};

/// Axis-aligned box in pixel space, origin top-left. Always has finite,
/// non-negative coordinates and strictly positive width and height.
class BoundingBox {
 public:
  BoundingBox(double x_min, double y_min, double x_max, double y_max)
      : x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max) {
    const bool finite = std::isfinite(x_min) && std::isfinite(y_min) &&
                        std::isfinite(x_max) && std::isfinite(y_max);
    if (!finite || x_min < 0.0 || y_min < 0.0 || !(x_min < x_max) || !(y_min < y_max)) {
      std::ostringstream os;
      os << "invalid box (" << x_min << ", " << y_min << ", " << x_max << ", " << y_max << ")";
      throw DegenerateBox(os.str());
    }
  }

  explicit BoundingBox(const BoxCoords& c) : BoundingBox(c.x_min, c.y_min, c.x_max, c.y_max) {}

  double x_min() const { return x_min_; }
  double y_min() const { return y_min_; }
  double x_max() const { return x_max_; }
  double y_max() const { return y_max_; }
  double width() const { return x_max_ - x_min_; }
  double height() const { return y_max_ - y_min_; }

  BoxCoords coords() const { return {x_min_, y_min_, x_max_, y_max_}; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

 private:
  double x_min_;
  double y_min_;
  double x_max_;
  double y_max_;
};

inline double area(const BoundingBox& b) { return b.width() * b.height(); }

/// Overlap area of two boxes; 0 when they are disjoint or only touch.
inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
  const double h = std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  if (a == b) return 1.0;
  const double inter = intersection_area(a, b);
  const double uni = area(a) + area(b) - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Clips raw coordinates into [0,width]x[0,height]. Throws DegenerateBox when
/// nothing of positive extent survives.
inline BoundingBox clamp_to_image(const BoxCoords& c, double width, double height) {
  if (!(width > 0.0) || !(height > 0.0)) {
    throw InvalidArgument("clamp_to_image needs positive image dimensions");
  }
  return BoundingBox(std::clamp(c.x_min, 0.0, width), std::clamp(c.y_min, 0.0, height),
                     std::clamp(c.x_max, 0.0, width), std::clamp(c.y_max, 0.0, height));
}

inline BoundingBox clamp_to_image(const BoundingBox& b, double width, double height) {
  return clamp_to_image(b.coords(), width, height);
}

/// Integer pixel rectangle [x0,x1) x [y0,y1).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Pixel region covered by a box, rounded outward (floor mins, ceil maxes) so
/// that every pixel touched by the box is kept.
inline PixelRect crop_region(const BoundingBox& b) {
  return {static_cast<int>(std::floor(b.x_min())), static_cast<int>(std::floor(b.y_min())),
          static_cast<int>(std::ceil(b.x_max())), static_cast<int>(std::ceil(b.y_max()))};
}

}  // namespace foodweight
