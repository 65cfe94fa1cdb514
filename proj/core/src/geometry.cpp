#include "refexp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "refexp/error.hpp"

namespace refexp {

namespace {

bool valid_coords(double x_min, double y_min, double x_max, double y_max) noexcept {
  return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
         std::isfinite(y_max) && x_min >= 0.0 && y_min >= 0.0 && x_min < x_max &&
         y_min < y_max;
}

}  // namespace

BBox::BBox(double x_min, double y_min, double x_max, double y_max)
    : x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max) {
  if (!valid_coords(x_min, y_min, x_max, y_max)) {
    std::ostringstream os;
    os << "invalid box [" << x_min << "," << y_min << "," << x_max << "," << y_max
       << "]";
    throw InvalidInput(os.str());
  }
}

std::optional<BBox> BBox::try_make(double x_min, double y_min, double x_max,
                                   double y_max) noexcept {
  if (!valid_coords(x_min, y_min, x_max, y_max)) return std::nullopt;
  BBox b;
  b.x_min_ = x_min;
  b.y_min_ = y_min;
  b.x_max_ = x_max;
  b.y_max_ = y_max;
  return b;
}

std::ostream& operator<<(std::ostream& os, const BBox& box) {
  return os << "[" << box.x_min() << "," << box.y_min() << "," << box.x_max() << ","
            << box.y_max() << "]";
}

double intersection_area(const BBox& a, const BBox& b) noexcept {
  const double w = std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
  const double h = std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

double union_area(const BBox& a, const BBox& b) noexcept {
  return a.area() + b.area() - intersection_area(a, b);
}

BBox enclosing_box(const BBox& a, const BBox& b) noexcept {
  return *BBox::try_make(std::min(a.x_min(), b.x_min()), std::min(a.y_min(), b.y_min()),
                         std::max(a.x_max(), b.x_max()), std::max(a.y_max(), b.y_max()));
}

double iou(const BBox& a, const BBox& b) noexcept {
  const double inter = intersection_area(a, b);
  return inter / (a.area() + b.area() - inter);
}

double giou(const BBox& a, const BBox& b) noexcept {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double enc = enclosing_box(a, b).area();
  return inter / uni - (enc - uni) / enc;
}

ClampResult clamp_to_image(double x_min, double y_min, double x_max, double y_max,
                           double image_w, double image_h) noexcept {
  if (!std::isfinite(x_min) || !std::isfinite(y_min) || !std::isfinite(x_max) ||
      !std::isfinite(y_max)) {
    return {std::nullopt, BoxDefect::non_finite};
  }
  if (x_min >= x_max || y_min >= y_max) return {std::nullopt, BoxDefect::inverted};
  const double tol = kClampTolerancePx;
  if (x_min < -tol || y_min < -tol || x_max > image_w + tol || y_max > image_h + tol) {
    return {std::nullopt, BoxDefect::out_of_bounds};
  }
  auto box = BBox::try_make(std::clamp(x_min, 0.0, image_w), std::clamp(y_min, 0.0, image_h),
                            std::clamp(x_max, 0.0, image_w), std::clamp(y_max, 0.0, image_h));
  // Clamping a box lying entirely in the tolerance band collapses it.
  if (!box) return {std::nullopt, BoxDefect::out_of_bounds};
  return {box, std::nullopt};
}

bool within_image(const BBox& box, double image_w, double image_h) noexcept {
  return box.x_max() <= image_w && box.y_max() <= image_h;
}

double area_ratio(const BBox& box, double image_w, double image_h) {
  if (!(image_w > 0.0) || !(image_h > 0.0)) {
    throw InvalidInput("area_ratio: image dimensions must be positive");
  }
  const auto clamped =
      clamp_to_image(box.x_min(), box.y_min(), box.x_max(), box.y_max(), image_w, image_h);
  if (!clamped.box) {
    std::ostringstream os;
    os << "area_ratio: box " << box << " lies outside the " << image_w << "x" << image_h
       << " image";
    throw InvalidInput(os.str());
  }
  return clamped.box->area() / (image_w * image_h);
}

}  // namespace refexp
