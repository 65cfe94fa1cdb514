#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "refexp/annotation.hpp"
#include "refexp/attributes.hpp"
#include "refexp/error.hpp"
#include "refexp/serialization.hpp"

namespace refexp {

namespace pt = boost::property_tree;

std::map<std::string, std::optional<Shape>> AttributeConfig::default_fixed_shapes() {
  return {
      {"storagetank", Shape::round},
      {"storage tank", Shape::round},
      {"basketballcourt", Shape::rectangular},
      {"basketball court", Shape::rectangular},
      {"tenniscourt", Shape::rectangular},
      {"tennis court", Shape::rectangular},
      {"airport", std::nullopt},
      {"golffield", std::nullopt},
      {"golf field", std::nullopt},
  };
}

void AttributeConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidInput(std::string("attribute config: ") + what);
  };
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  require(unit(black_max_value) && unit(achromatic_max_saturation) && unit(white_min_value),
          "HSV thresholds must lie in [0,1]");
  require(black_max_value <= white_min_value, "black_max_value must not exceed white_min_value");
  require(0.0 <= hue_orange && hue_orange < hue_yellow && hue_yellow < hue_green &&
              hue_green < hue_cyan && hue_cyan < hue_blue && hue_blue < hue_purple &&
              hue_purple < hue_red && hue_red <= 360.0,
          "hue boundaries must increase within [0,360]");
  require(min_color_share > 0.0 && min_color_share <= 1.0, "min_share must lie in (0,1]");
  require(0.0 <= size_tiny && size_tiny <= size_small && size_small <= size_medium &&
              size_medium <= size_large && size_large <= size_huge && size_huge <= size_max &&
              size_max <= 1.0,
          "size bands must be nondecreasing within [0,1]");
  require(square_aspect >= 1.0 && slender_aspect > square_aspect,
          "need 1 <= square_aspect < slender_aspect");
  require(round_circularity > 0.0 && round_circularity <= 1.0,
          "round_circularity must lie in (0,1]");
  require(polygon_epsilon > 0.0 && polygon_epsilon < 1.0, "polygon_epsilon must lie in (0,1)");
  require(unit(rel_location_max_iou), "location_max_iou must lie in [0,1]");
  require(rel_size_smaller > 0.0 && rel_size_smaller < 1.0 && rel_size_larger > 1.0,
          "need 0 < size_smaller < 1 < size_larger");
}

namespace {

using Setter = double AttributeConfig::*;

const std::map<std::string, std::map<std::string, Setter>>& numeric_keys() {
  static const std::map<std::string, std::map<std::string, Setter>> keys = {
      {"color",
       {{"min_share", &AttributeConfig::min_color_share},
        {"black_max_value", &AttributeConfig::black_max_value},
        {"achromatic_max_saturation", &AttributeConfig::achromatic_max_saturation},
        {"white_min_value", &AttributeConfig::white_min_value}}},
      {"hue",
       {{"orange", &AttributeConfig::hue_orange},
        {"yellow", &AttributeConfig::hue_yellow},
        {"green", &AttributeConfig::hue_green},
        {"cyan", &AttributeConfig::hue_cyan},
        {"blue", &AttributeConfig::hue_blue},
        {"purple", &AttributeConfig::hue_purple},
        {"red", &AttributeConfig::hue_red}}},
      {"size",
       {{"tiny", &AttributeConfig::size_tiny},
        {"small", &AttributeConfig::size_small},
        {"medium", &AttributeConfig::size_medium},
        {"large", &AttributeConfig::size_large},
        {"huge", &AttributeConfig::size_huge},
        {"max", &AttributeConfig::size_max}}},
      {"geometry",
       {{"slender_aspect", &AttributeConfig::slender_aspect},
        {"square_aspect", &AttributeConfig::square_aspect},
        {"round_circularity", &AttributeConfig::round_circularity},
        {"polygon_epsilon", &AttributeConfig::polygon_epsilon}}},
      {"relations",
       {{"location_max_iou", &AttributeConfig::rel_location_max_iou},
        {"size_smaller", &AttributeConfig::rel_size_smaller},
        {"size_larger", &AttributeConfig::rel_size_larger}}},
  };
  return keys;
}

}  // namespace

AttributeConfig parse_attribute_config(std::string_view text, const std::string& source) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(source, e.line(), e.message());
  }

  AttributeConfig cfg;
  for (const auto& [section, entries] : tree) {
    if (section == "shapes") {
      for (const auto& [key, node] : entries) {
        const std::string value = node.get_value<std::string>();
        const std::string category = normalize_category(key);
        if (value == "none") {
          cfg.fixed_shapes[category] = std::nullopt;
        } else if (const auto shape = shape_from_string(value)) {
          cfg.fixed_shapes[category] = *shape;
        } else {
          throw ParseError(source, 0, "shapes." + key + ": unknown shape '" + value + "'");
        }
      }
      continue;
    }
    const auto sec = numeric_keys().find(section);
    if (sec == numeric_keys().end()) {
      throw ParseError(source, 0, "unknown section [" + section + "]");
    }
    for (const auto& [key, node] : entries) {
      const auto field = sec->second.find(key);
      if (field == sec->second.end()) {
        throw ParseError(source, 0, "unknown key " + section + "." + key);
      }
      const auto value = node.get_value_optional<double>();
      if (!value) throw ParseError(source, 0, section + "." + key + " is not a number");
      cfg.*(field->second) = *value;
    }
  }
  try {
    cfg.validate();
  } catch (const InvalidInput& e) {
    throw ParseError(source, 0, e.what());
  }
  return cfg;
}

AttributeConfig load_attribute_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = json::read_file(path);
  } catch (const IoError& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  return parse_attribute_config(text, path.string());
}

}  // namespace refexp
