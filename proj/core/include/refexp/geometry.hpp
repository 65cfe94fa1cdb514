#pragma once

#include <array>
#include <iosfwd>
#include <optional>

namespace refexp {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned box in pixel coordinates (origin top-left, y down).
/// Construction enforces finite, non-negative coordinates with
/// x_min < x_max and y_min < y_max.
class BBox {
 public:
  BBox(double x_min, double y_min, double x_max, double y_max);

  /// Returns nullopt instead of throwing when the coordinates are invalid.
  static std::optional<BBox> try_make(double x_min, double y_min, double x_max,
                                      double y_max) noexcept;

  double x_min() const noexcept { return x_min_; }
  double y_min() const noexcept { return y_min_; }
  double x_max() const noexcept { return x_max_; }
  double y_max() const noexcept { return y_max_; }

  double width() const noexcept { return x_max_ - x_min_; }
  double height() const noexcept { return y_max_ - y_min_; }
  double area() const noexcept { return width() * height(); }
  Point center() const noexcept {
    return {(x_min_ + x_max_) / 2.0, (y_min_ + y_max_) / 2.0};
  }
  std::array<double, 4> coords() const noexcept {
    return {x_min_, y_min_, x_max_, y_max_};
  }

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  BBox() = default;

  double x_min_ = 0.0;
  double y_min_ = 0.0;
  double x_max_ = 0.0;
  double y_max_ = 0.0;
};

std::ostream& operator<<(std::ostream& os, const BBox& box);

/// Area of the overlap; 0 when the boxes are disjoint or only touch.
double intersection_area(const BBox& a, const BBox& b) noexcept;
double union_area(const BBox& a, const BBox& b) noexcept;
/// Smallest box containing both.
BBox enclosing_box(const BBox& a, const BBox& b) noexcept;

double iou(const BBox& a, const BBox& b) noexcept;

/// IoU minus the share of the enclosing box not covered by the union.
/// Range (-1, 1].
double giou(const BBox& a, const BBox& b) noexcept;

/// Pixels a box may extend past the image border and still be clamped.
inline constexpr double kClampTolerancePx = 1.0;

/// Why raw coordinates failed to become a box inside an image.
enum class BoxDefect { non_finite, inverted, out_of_bounds };

struct ClampResult {
  std::optional<BBox> box;
  std::optional<BoxDefect> defect;
};

/// Turns raw annotation coordinates into a box inside [0,w]x[0,h]. Excursions
/// of at most kClampTolerancePx are clamped; anything else is a defect.
/// Inversion (x_min >= x_max or y_min >= y_max) is checked on the raw values.
ClampResult clamp_to_image(double x_min, double y_min, double x_max,
                           double y_max, double image_w, double image_h) noexcept;

/// True when the box lies inside the image (no clamping needed).
bool within_image(const BBox& box, double image_w, double image_h) noexcept;

/// area(box) / (image_w * image_h), after clamping a marginal excursion.
/// Throws InvalidInput on non-positive image dimensions or a box extending
/// more than kClampTolerancePx outside the image.
double area_ratio(const BBox& box, double image_w, double image_h);

}  // namespace refexp
