#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core/mat.hpp>

#include "refexp/annotation.hpp"

namespace refexp {

// Attribute vocabularies. Enumerator order is the rendering order used by
// tables and reports.

enum class Color { red, orange, yellow, green, cyan, blue, purple, white, gray, black };
enum class SizeWord { tiny, small, large, huge };
enum class Shape { round, square, rectangular, slender };
enum class Location {
  top_left, top, top_right,
  left, middle, right,
  bottom_left, bottom, bottom_right,
};
enum class Relation {
  left_of, right_of, above, below,
  upper_left_of, upper_right_of, lower_left_of, lower_right_of,
  smaller_than, larger_than,
};
enum class RelationKind { rel_location, rel_size };

inline constexpr std::array kAllColors = {
    Color::red,  Color::orange, Color::yellow, Color::green, Color::cyan,
    Color::blue, Color::purple, Color::white,  Color::gray,  Color::black};
inline constexpr std::array kAllLocations = {
    Location::top_left,    Location::top,    Location::top_right,
    Location::left,        Location::middle, Location::right,
    Location::bottom_left, Location::bottom, Location::bottom_right};

std::string_view to_string(Color c) noexcept;
std::string_view to_string(SizeWord s) noexcept;
std::string_view to_string(Shape s) noexcept;
std::string_view to_string(Location l) noexcept;
/// Relation word as listed in the attribute table ("left of", "smaller than").
std::string_view to_string(Relation r) noexcept;
std::string_view to_string(RelationKind k) noexcept;

std::optional<Color> color_from_string(std::string_view s) noexcept;
std::optional<SizeWord> size_word_from_string(std::string_view s) noexcept;
std::optional<Shape> shape_from_string(std::string_view s) noexcept;
std::optional<Location> location_from_string(std::string_view s) noexcept;
std::optional<Relation> relation_from_string(std::string_view s) noexcept;

RelationKind kind_of(Relation r) noexcept;
/// left_of <-> right_of, above <-> below, diagonals, smaller <-> larger.
Relation converse(Relation r) noexcept;

/// Own attributes a1..a5 of one object.
struct AttributeSet {
  std::string category;
  std::optional<Color> color;
  std::optional<SizeWord> size_word;
  std::optional<Shape> geometry;
  std::optional<Location> abs_location;

  friend bool operator==(const AttributeSet&, const AttributeSet&) = default;
};

/// Pairwise attributes a6/a7: `subject_id` stands in `value` to `object_id`.
struct RelationalFact {
  std::string subject_id;
  std::string object_id;
  Relation value;

  RelationKind kind() const noexcept { return kind_of(value); }
  friend bool operator==(const RelationalFact&, const RelationalFact&) = default;
};

/// Every threshold used by attribute extraction. Defaults are compiled in;
/// load_attribute_config overrides them from an INI-style key=value file.
struct AttributeConfig {
  // HSV classification. Hue boundaries are start angles in degrees.
  double black_max_value = 0.2;
  double achromatic_max_saturation = 0.2;
  double white_min_value = 0.8;
  double hue_orange = 15.0;
  double hue_yellow = 45.0;
  double hue_green = 70.0;
  double hue_cyan = 160.0;
  double hue_blue = 200.0;
  double hue_purple = 260.0;
  double hue_red = 345.0;
  double min_color_share = 0.40;

  // Size bands on area ratio: [tiny, small) tiny, [small, medium) small,
  // [medium, large) unlabeled, [large, huge) large, [huge, max] huge.
  double size_tiny = 0.0002;
  double size_small = 0.001;
  double size_medium = 0.01;
  double size_large = 0.1;
  double size_huge = 0.35;
  double size_max = 0.99;

  // Geometry.
  double slender_aspect = 3.0;
  double square_aspect = 1.2;
  double round_circularity = 0.85;
  double polygon_epsilon = 0.02;  // fraction of contour perimeter
  /// Fixed shapes by category; a nullopt value means "no describable shape".
  std::map<std::string, std::optional<Shape>> fixed_shapes = default_fixed_shapes();

  // Relations.
  double rel_location_max_iou = 0.1;
  double rel_size_smaller = 0.5;
  double rel_size_larger = 2.0;

  static std::map<std::string, std::optional<Shape>> default_fixed_shapes();

  /// Throws InvalidInput when tables overlap or thresholds are out of order.
  void validate() const;
};

AttributeConfig parse_attribute_config(std::string_view text,
                                       const std::string& source = "<config>");
AttributeConfig load_attribute_config(const std::filesystem::path& path);

/// Classifies one HSV triple (H degrees, S and V in [0,1]). Total: every
/// input maps to exactly one bin.
Color classify_hsv(double hue, double saturation, double value,
                   const AttributeConfig& cfg = {});

/// Integer pixel rectangle [x0,x1) x [y0,y1) covered by the box, clipped to
/// the raster. Throws InvalidInput when the result is empty.
cv::Rect crop_rect(const cv::Mat& image, const BBox& box);

/// Modal HSV bin of the crop if its pixel share reaches min_color_share.
/// `image` is 8-bit BGR (or single-channel gray).
std::optional<Color> extract_color(const cv::Mat& image, const BBox& box,
                                   const AttributeConfig& cfg = {});

std::optional<SizeWord> extract_size_word(double ratio,
                                          const AttributeConfig& cfg = {});

/// Circularity 4*pi*A/P^2 and polygon vertex count of the largest contour of
/// the Otsu-binarized crop. nullopt when no contour with area is found.
struct ContourShape {
  double circularity = 0.0;
  int vertices = 0;
};
std::optional<ContourShape> analyze_contour(const cv::Mat& image, const BBox& box,
                                            const AttributeConfig& cfg = {});

/// Fixed-shape table, then box aspect, then contour analysis. `image` may be
/// empty, in which case the contour stage is skipped.
std::optional<Shape> extract_geometry(const std::string& category,
                                      const cv::Mat& image, const BBox& box,
                                      const AttributeConfig& cfg = {});

/// 3x3 grid cell of the box center.
Location extract_abs_location(const BBox& box, double image_w, double image_h);

std::optional<RelationalFact> extract_rel_location(const ObjectInstance& subject,
                                                   const ObjectInstance& object,
                                                   const AttributeConfig& cfg = {});

std::optional<RelationalFact> extract_rel_size(const ObjectInstance& subject,
                                               const ObjectInstance& object,
                                               const ImageRecord& image,
                                               const AttributeConfig& cfg = {});

/// Own attributes for one object. Pixel-based attributes (color, contour
/// geometry) are skipped when `image` is empty.
AttributeSet extract_attributes(const ObjectInstance& object,
                                const ImageRecord& record, const cv::Mat& image,
                                const AttributeConfig& cfg = {});

}  // namespace refexp
