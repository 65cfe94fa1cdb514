#include "refexp/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include "refexp/error.hpp"

namespace refexp {

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(std::string_view s, const std::array<Enum, N>& all) {
  for (Enum e : all) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

constexpr std::array kAllSizes = {SizeWord::tiny, SizeWord::small, SizeWord::large, SizeWord::huge};
constexpr std::array kAllShapes = {Shape::round, Shape::square, Shape::rectangular, Shape::slender};
constexpr std::array kAllRelations = {
    Relation::left_of,        Relation::right_of,       Relation::above,
    Relation::below,          Relation::upper_left_of,  Relation::upper_right_of,
    Relation::lower_left_of,  Relation::lower_right_of, Relation::smaller_than,
    Relation::larger_than};

}  // namespace

std::string_view to_string(Color c) noexcept {
  switch (c) {
    case Color::red: return "red";
    case Color::orange: return "orange";
    case Color::yellow: return "yellow";
    case Color::green: return "green";
    case Color::cyan: return "cyan";
    case Color::blue: return "blue";
    case Color::purple: return "purple";
    case Color::white: return "white";
    case Color::gray: return "gray";
    case Color::black: return "black";
  }
  return "gray";
}

std::string_view to_string(SizeWord s) noexcept {
  switch (s) {
    case SizeWord::tiny: return "tiny";
    case SizeWord::small: return "small";
    case SizeWord::large: return "large";
    case SizeWord::huge: return "huge";
  }
  return "small";
}

std::string_view to_string(Shape s) noexcept {
  switch (s) {
    case Shape::round: return "round";
    case Shape::square: return "square";
    case Shape::rectangular: return "rectangular";
    case Shape::slender: return "slender";
  }
  return "round";
}

std::string_view to_string(Location l) noexcept {
  switch (l) {
    case Location::top_left: return "top left";
    case Location::top: return "top";
    case Location::top_right: return "top right";
    case Location::left: return "left";
    case Location::middle: return "middle";
    case Location::right: return "right";
    case Location::bottom_left: return "bottom left";
    case Location::bottom: return "bottom";
    case Location::bottom_right: return "bottom right";
  }
  return "middle";
}

std::string_view to_string(Relation r) noexcept {
  switch (r) {
    case Relation::left_of: return "left of";
    case Relation::right_of: return "right of";
    case Relation::above: return "above";
    case Relation::below: return "below";
    case Relation::upper_left_of: return "upper left of";
    case Relation::upper_right_of: return "upper right of";
    case Relation::lower_left_of: return "lower left of";
    case Relation::lower_right_of: return "lower right of";
    case Relation::smaller_than: return "smaller than";
    case Relation::larger_than: return "larger than";
  }
  return "left of";
}

std::string_view to_string(RelationKind k) noexcept {
  return k == RelationKind::rel_location ? "rel_location" : "rel_size";
}

std::optional<Color> color_from_string(std::string_view s) noexcept { return lookup(s, kAllColors); }
std::optional<SizeWord> size_word_from_string(std::string_view s) noexcept { return lookup(s, kAllSizes); }
std::optional<Shape> shape_from_string(std::string_view s) noexcept { return lookup(s, kAllShapes); }
std::optional<Location> location_from_string(std::string_view s) noexcept { return lookup(s, kAllLocations); }
std::optional<Relation> relation_from_string(std::string_view s) noexcept { return lookup(s, kAllRelations); }

RelationKind kind_of(Relation r) noexcept {
  return (r == Relation::smaller_than || r == Relation::larger_than) ? RelationKind::rel_size
                                                                     : RelationKind::rel_location;
}

Relation converse(Relation r) noexcept {
  switch (r) {
    case Relation::left_of: return Relation::right_of;
    case Relation::right_of: return Relation::left_of;
    case Relation::above: return Relation::below;
    case Relation::below: return Relation::above;
    case Relation::upper_left_of: return Relation::lower_right_of;
    case Relation::upper_right_of: return Relation::lower_left_of;
    case Relation::lower_left_of: return Relation::upper_right_of;
    case Relation::lower_right_of: return Relation::upper_left_of;
    case Relation::smaller_than: return Relation::larger_than;
    case Relation::larger_than: return Relation::smaller_than;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Color

Color classify_hsv(double hue, double saturation, double value, const AttributeConfig& cfg) {
  if (!(value >= cfg.black_max_value)) return Color::black;  // also catches NaN
  if (!(saturation >= cfg.achromatic_max_saturation)) {
    return value > cfg.white_min_value ? Color::white : Color::gray;
  }
  double h = std::isfinite(hue) ? std::fmod(hue, 360.0) : 0.0;
  if (h < 0.0) h += 360.0;
  if (h >= cfg.hue_red || h < cfg.hue_orange) return Color::red;
  if (h < cfg.hue_yellow) return Color::orange;
  if (h < cfg.hue_green) return Color::yellow;
  if (h < cfg.hue_cyan) return Color::green;
  if (h < cfg.hue_blue) return Color::cyan;
  if (h < cfg.hue_purple) return Color::blue;
  return Color::purple;
}

cv::Rect crop_rect(const cv::Mat& image, const BBox& box) {
  const int x0 = std::max(0, static_cast<int>(std::floor(box.x_min())));
  const int y0 = std::max(0, static_cast<int>(std::floor(box.y_min())));
  const int x1 = std::min(image.cols, static_cast<int>(std::ceil(box.x_max())));
  const int y1 = std::min(image.rows, static_cast<int>(std::ceil(box.y_max())));
  if (x1 <= x0 || y1 <= y0) throw InvalidInput("empty crop for box outside the raster");
  return {x0, y0, x1 - x0, y1 - y0};
}

namespace {

cv::Mat to_bgr(const cv::Mat& crop) {
  if (crop.channels() == 3) return crop;
  cv::Mat bgr;
  if (crop.channels() == 1) {
    cv::cvtColor(crop, bgr, cv::COLOR_GRAY2BGR);
  } else if (crop.channels() == 4) {
    cv::cvtColor(crop, bgr, cv::COLOR_BGRA2BGR);
  } else {
    throw InvalidInput("unsupported channel count");
  }
  return bgr;
}

cv::Mat to_gray(const cv::Mat& crop) {
  if (crop.channels() == 1) return crop;
  cv::Mat gray;
  cv::cvtColor(crop, gray, crop.channels() == 4 ? cv::COLOR_BGRA2GRAY : cv::COLOR_BGR2GRAY);
  return gray;
}

}  // namespace

std::optional<Color> extract_color(const cv::Mat& image, const BBox& box,
                                   const AttributeConfig& cfg) {
  if (image.empty()) throw InvalidInput("extract_color: empty raster");
  if (image.depth() != CV_8U) throw InvalidInput("extract_color: expected an 8-bit raster");
  const cv::Mat crop = to_bgr(image(crop_rect(image, box)));

  cv::Mat as_float;
  crop.convertTo(as_float, CV_32FC3, 1.0 / 255.0);
  cv::Mat hsv;
  cv::cvtColor(as_float, hsv, cv::COLOR_BGR2HSV);  // H in [0,360), S and V in [0,1]

  std::array<std::size_t, kAllColors.size()> counts{};
  for (int r = 0; r < hsv.rows; ++r) {
    const auto* row = hsv.ptr<cv::Vec3f>(r);
    for (int c = 0; c < hsv.cols; ++c) {
      ++counts[static_cast<std::size_t>(classify_hsv(row[c][0], row[c][1], row[c][2], cfg))];
    }
  }
  const std::size_t total = static_cast<std::size_t>(hsv.rows) * static_cast<std::size_t>(hsv.cols);
  const auto modal = std::max_element(counts.begin(), counts.end());  // first max on ties
  if (static_cast<double>(*modal) < cfg.min_color_share * static_cast<double>(total)) {
    return std::nullopt;
  }
  return kAllColors[static_cast<std::size_t>(modal - counts.begin())];
}

// ---------------------------------------------------------------------------
// Size

std::optional<SizeWord> extract_size_word(double ratio, const AttributeConfig& cfg) {
  if (ratio < cfg.size_tiny || ratio > cfg.size_max) return std::nullopt;
  if (ratio < cfg.size_small) return SizeWord::tiny;
  if (ratio < cfg.size_medium) return SizeWord::small;
  if (ratio < cfg.size_large) return std::nullopt;
  if (ratio < cfg.size_huge) return SizeWord::large;
  return SizeWord::huge;
}

// ---------------------------------------------------------------------------
// Geometry

std::optional<ContourShape> analyze_contour(const cv::Mat& image, const BBox& box,
                                            const AttributeConfig& cfg) {
  if (image.empty()) throw InvalidInput("analyze_contour: empty raster");
  cv::Mat gray = to_gray(image(crop_rect(image, box)));
  if (gray.depth() != CV_8U) gray.convertTo(gray, CV_8U);

  cv::Mat binary;
  cv::threshold(gray, binary, 0, 255, cv::THRESH_BINARY | cv::THRESH_OTSU);

  // Foreground is whichever side the crop border mostly is not.
  std::size_t border_white = 0;
  std::size_t border_total = 0;
  auto tally = [&](int r, int c) {
    ++border_total;
    if (binary.at<unsigned char>(r, c) != 0) ++border_white;
  };
  for (int c = 0; c < binary.cols; ++c) {
    tally(0, c);
    tally(binary.rows - 1, c);
  }
  for (int r = 0; r < binary.rows; ++r) {
    tally(r, 0);
    tally(r, binary.cols - 1);
  }
  if (2 * border_white > border_total) cv::bitwise_not(binary, binary);

  std::vector<std::vector<cv::Point>> contours;
  cv::findContours(binary, contours, cv::RETR_EXTERNAL, cv::CHAIN_APPROX_NONE);
  const std::vector<cv::Point>* largest = nullptr;
  double largest_area = 0.0;
  for (const auto& c : contours) {
    const double a = cv::contourArea(c);
    if (a > largest_area) {
      largest_area = a;
      largest = &c;
    }
  }
  if (largest == nullptr) return std::nullopt;

  const double perimeter = cv::arcLength(*largest, true);
  std::vector<cv::Point> polygon;
  cv::approxPolyDP(*largest, polygon, cfg.polygon_epsilon * perimeter, true);
  return ContourShape{4.0 * std::numbers::pi * largest_area / (perimeter * perimeter),
                      static_cast<int>(polygon.size())};
}

std::optional<Shape> extract_geometry(const std::string& category, const cv::Mat& image,
                                      const BBox& box, const AttributeConfig& cfg) {
  if (const auto fixed = cfg.fixed_shapes.find(category); fixed != cfg.fixed_shapes.end()) {
    return fixed->second;
  }
  const double aspect =
      std::max(box.width(), box.height()) / std::min(box.width(), box.height());
  if (aspect > cfg.slender_aspect) return Shape::slender;
  if (image.empty()) return std::nullopt;

  const auto contour = analyze_contour(image, box, cfg);
  if (!contour) return std::nullopt;
  if (contour->circularity >= cfg.round_circularity) return Shape::round;
  if (contour->vertices == 4) {
    return aspect <= cfg.square_aspect ? Shape::square : Shape::rectangular;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Location and relations

Location extract_abs_location(const BBox& box, double image_w, double image_h) {
  if (!(image_w > 0.0) || !(image_h > 0.0)) {
    throw InvalidInput("extract_abs_location: image dimensions must be positive");
  }
  const Point c = box.center();
  const int col = std::clamp(static_cast<int>(std::floor(3.0 * c.x / image_w)), 0, 2);
  const int row = std::clamp(static_cast<int>(std::floor(3.0 * c.y / image_h)), 0, 2);
  return kAllLocations[static_cast<std::size_t>(row * 3 + col)];
}

std::optional<RelationalFact> extract_rel_location(const ObjectInstance& subject,
                                                   const ObjectInstance& object,
                                                   const AttributeConfig& cfg) {
  if (subject.image_id != object.image_id) {
    throw InvalidInput("extract_rel_location: objects belong to different images");
  }
  if (subject.object_id == object.object_id) return std::nullopt;
  if (iou(subject.bbox, object.bbox) > cfg.rel_location_max_iou) return std::nullopt;

  const Point s = subject.bbox.center();
  const Point o = object.bbox.center();
  const double dx = s.x - o.x;  // > 0: subject to the right
  const double up = o.y - s.y;  // > 0: subject higher in the image
  const double ax = std::abs(dx);
  const double ay = std::abs(up);
  if (ax == 0.0 && ay == 0.0) return std::nullopt;

  // Sector boundaries sit at 22.5 degrees off each axis. Comparing absolute
  // offsets keeps the classification exactly antisymmetric.
  constexpr double kTan22_5 = 0.41421356237309503;  // sqrt(2) - 1
  Relation value;
  if (ay < kTan22_5 * ax) {
    value = dx > 0 ? Relation::right_of : Relation::left_of;
  } else if (ax < kTan22_5 * ay) {
    value = up > 0 ? Relation::above : Relation::below;
  } else if (up > 0) {
    value = dx > 0 ? Relation::upper_right_of : Relation::upper_left_of;
  } else {
    value = dx > 0 ? Relation::lower_right_of : Relation::lower_left_of;
  }
  return RelationalFact{subject.object_id, object.object_id, value};
}

std::optional<RelationalFact> extract_rel_size(const ObjectInstance& subject,
                                               const ObjectInstance& object,
                                               const ImageRecord& image,
                                               const AttributeConfig& cfg) {
  if (subject.image_id != object.image_id || subject.image_id != image.image_id) {
    throw InvalidInput("extract_rel_size: objects must belong to the given image");
  }
  if (subject.object_id == object.object_id) return std::nullopt;
  // Both ratios share the image area, so compare box areas directly:
  // r = a / b <= smaller  <=>  a <= smaller * b.
  const double a = subject.bbox.area();
  const double b = object.bbox.area();
  if (a <= cfg.rel_size_smaller * b) {
    return RelationalFact{subject.object_id, object.object_id, Relation::smaller_than};
  }
  if (a >= cfg.rel_size_larger * b) {
    return RelationalFact{subject.object_id, object.object_id, Relation::larger_than};
  }
  return std::nullopt;
}

AttributeSet extract_attributes(const ObjectInstance& object, const ImageRecord& record,
                                const cv::Mat& image, const AttributeConfig& cfg) {
  if (!image.empty() && (image.cols != record.width || image.rows != record.height)) {
    throw InvalidInput("raster for image '" + record.image_id + "' is " +
                       std::to_string(image.cols) + "x" + std::to_string(image.rows) +
                       ", annotations say " + std::to_string(record.width) + "x" +
                       std::to_string(record.height));
  }
  AttributeSet attrs;
  attrs.category = object.category;
  if (!image.empty()) attrs.color = extract_color(image, object.bbox, cfg);
  attrs.size_word = extract_size_word(area_ratio(object.bbox, record.width, record.height), cfg);
  attrs.geometry = extract_geometry(object.category, image, object.bbox, cfg);
  attrs.abs_location = extract_abs_location(object.bbox, record.width, record.height);
  return attrs;
}

}  // namespace refexp
