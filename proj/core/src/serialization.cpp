#include "refexp/serialization.hpp"

#include <fstream>
#include <sstream>

#include "refexp/error.hpp"

namespace refexp::json {

namespace {

[[noreturn]] void schema_error(const std::string& what) {
  throw InvalidInput("schema: " + what);
}

const Json& require(const Json& j, const char* key) {
  if (!j.is_object()) schema_error(std::string("expected object holding '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) schema_error(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_string()) schema_error(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

template <typename Enum, typename Parse>
std::optional<Enum> optional_word(const Json& j, const char* key, Parse parse) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) schema_error(std::string("field '") + key + "' must be a string");
  const auto value = parse(it->template get<std::string>());
  if (!value) schema_error(std::string("unknown ") + key + " '" + it->template get<std::string>() + "'");
  return value;
}

template <typename T>
void put_optional(Json& j, const char* key, const std::optional<T>& value) {
  if (value) j[key] = std::string(to_string(*value));
}

std::string_view slot_name(Slot s) {
  switch (s) {
    case Slot::color: return "color";
    case Slot::size: return "size";
    case Slot::geometry: return "geometry";
  }
  return "color";
}

std::optional<Slot> slot_from_name(std::string_view s) {
  if (s == "color") return Slot::color;
  if (s == "size") return Slot::size;
  if (s == "geometry") return Slot::geometry;
  return std::nullopt;
}

}  // namespace

Json bbox_to_json(const BBox& box) {
  return Json::array({box.x_min(), box.y_min(), box.x_max(), box.y_max()});
}

BBox bbox_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) schema_error("bbox must be [x1,y1,x2,y2]");
  for (const auto& v : j) {
    if (!v.is_number()) schema_error("bbox coordinates must be numbers");
  }
  return BBox(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

Json object_ref_to_json(const ObjectRef& ref) {
  Json j;
  j["article"] = ref.article == Article::the ? "the" : "a";
  j["category"] = ref.category;
  put_optional(j, "color", ref.color);
  put_optional(j, "size", ref.size_word);
  put_optional(j, "geometry", ref.geometry);
  put_optional(j, "abs_location", ref.abs_location);
  Json order = Json::array();
  for (Slot s : ref.order) order.push_back(std::string(slot_name(s)));
  j["order"] = std::move(order);
  return j;
}

ObjectRef object_ref_from_json(const Json& j) {
  ObjectRef ref;
  const std::string article = require_string(j, "article");
  if (article == "the") {
    ref.article = Article::the;
  } else if (article == "a") {
    ref.article = Article::a;
  } else {
    schema_error("unknown article '" + article + "'");
  }
  ref.category = require_string(j, "category");
  ref.color = optional_word<Color>(j, "color", color_from_string);
  ref.size_word = optional_word<SizeWord>(j, "size", size_word_from_string);
  ref.geometry = optional_word<Shape>(j, "geometry", shape_from_string);
  ref.abs_location = optional_word<Location>(j, "abs_location", location_from_string);
  if (const auto it = j.find("order"); it != j.end() && it->is_array()) {
    for (const auto& s : *it) {
      const auto slot = s.is_string() ? slot_from_name(s.get<std::string>()) : std::nullopt;
      if (!slot) schema_error("bad slot in order");
      ref.order.push_back(*slot);
    }
  }
  return ref;
}

Json fills_to_json(const ExpressionFills& fills) {
  Json j;
  j["subject"] = object_ref_to_json(fills.subject);
  if (fills.relation) j["relation"] = std::string(to_string(*fills.relation));
  if (fills.related) j["related"] = object_ref_to_json(*fills.related);
  return j;
}

ExpressionFills fills_from_json(const Json& j) {
  ExpressionFills fills;
  fills.subject = object_ref_from_json(require(j, "subject"));
  fills.relation = optional_word<Relation>(j, "relation", relation_from_string);
  if (const auto it = j.find("related"); it != j.end() && !it->is_null()) {
    fills.related = object_ref_from_json(*it);
  }
  if (fills.relation.has_value() != fills.related.has_value()) {
    schema_error("relation and related must appear together");
  }
  return fills;
}

Json expression_to_json(const Expression& expr) {
  Json j;
  j["target_id"] = expr.target_id;
  j["template"] = std::string(to_string(expr.template_kind));
  j["step"] = expr.step;
  j["seed"] = expr.seed;
  j["text"] = expr.text;
  j["fills"] = fills_to_json(expr.fills);
  return j;
}

Expression expression_from_json(const Json& j) {
  Expression expr;
  expr.target_id = require_string(j, "target_id");
  const auto kind = template_kind_from_string(require_string(j, "template"));
  if (!kind) schema_error("unknown template kind");
  expr.template_kind = *kind;
  expr.step = require(j, "step").get<int>();
  expr.seed = require(j, "seed").get<std::uint64_t>();
  expr.text = require_string(j, "text");
  expr.fills = fills_from_json(require(j, "fills"));
  return expr;
}

Json sample_to_json(const GroundingSample& s) {
  Json j;
  j["sample_id"] = s.sample_id;
  j["image_id"] = s.image_id;
  j["bbox"] = bbox_to_json(s.bbox);
  j["text"] = s.text();
  j["split"] = s.split ? Json(std::string(to_string(*s.split))) : Json(nullptr);
  j["status"] = std::string(to_string(s.status));
  j["object_id"] = s.object_id;
  j["category"] = s.category;
  j["image_size"] = Json::array({s.image_width, s.image_height});
  if (s.edited_text) j["edited_text"] = *s.edited_text;
  j["expression"] = expression_to_json(s.expression);
  return j;
}

GroundingSample sample_from_json(const Json& j) {
  GroundingSample s{.sample_id = require_string(j, "sample_id"),
                    .image_id = require_string(j, "image_id"),
                    .object_id = require_string(j, "object_id"),
                    .category = require_string(j, "category"),
                    .image_width = 0,
                    .image_height = 0,
                    .bbox = bbox_from_json(require(j, "bbox")),
                    .expression = expression_from_json(require(j, "expression")),
                    .split = std::nullopt,
                    .status = SampleStatus::pending,
                    .edited_text = std::nullopt};
  const Json& size = require(j, "image_size");
  if (!size.is_array() || size.size() != 2) schema_error("image_size must be [w,h]");
  s.image_width = size[0].get<int>();
  s.image_height = size[1].get<int>();
  s.split = optional_word<Split>(j, "split", split_from_string);
  const auto status = sample_status_from_string(require_string(j, "status"));
  if (!status) schema_error("unknown status");
  s.status = *status;
  if (const auto it = j.find("edited_text"); it != j.end() && it->is_string()) {
    s.edited_text = it->get<std::string>();
  }
  return s;
}

Json scene_to_json(const Scene& scene) {
  Json image;
  image["image_id"] = scene.image.image_id;
  image["width"] = scene.image.width;
  image["height"] = scene.image.height;
  image["file_path"] = scene.image.file_path;
  if (scene.image.spatial_resolution) {
    image["spatial_resolution"] = *scene.image.spatial_resolution;
  }
  Json objects = Json::array();
  for (const auto& o : scene.objects) {
    Json jo;
    jo["object_id"] = o.object_id;
    jo["category"] = o.category;
    jo["bbox"] = bbox_to_json(o.bbox);
    const auto& a = scene.attributes_of(o.object_id);
    Json attrs;
    put_optional(attrs, "color", a.color);
    put_optional(attrs, "size", a.size_word);
    put_optional(attrs, "geometry", a.geometry);
    put_optional(attrs, "abs_location", a.abs_location);
    jo["attributes"] = attrs.is_null() ? Json::object() : std::move(attrs);
    objects.push_back(std::move(jo));
  }
  Json relations = Json::array();
  for (const auto& r : scene.relations) {
    relations.push_back(Json::array({r.subject_id, std::string(to_string(r.value)), r.object_id}));
  }
  Json j;
  j["image"] = std::move(image);
  j["objects"] = std::move(objects);
  j["relations"] = std::move(relations);
  return j;
}

Scene scene_from_json(const Json& j) {
  Scene scene;
  const Json& image = require(j, "image");
  scene.image.image_id = require_string(image, "image_id");
  scene.image.width = require(image, "width").get<int>();
  scene.image.height = require(image, "height").get<int>();
  scene.image.file_path = image.value("file_path", "");
  if (const auto it = image.find("spatial_resolution"); it != image.end() && it->is_number()) {
    scene.image.spatial_resolution = it->get<double>();
  }
  for (const auto& jo : require(j, "objects")) {
    ObjectInstance o{require_string(jo, "object_id"), scene.image.image_id,
                     require_string(jo, "category"), bbox_from_json(require(jo, "bbox"))};
    AttributeSet a;
    a.category = o.category;
    if (const auto it = jo.find("attributes"); it != jo.end() && it->is_object()) {
      a.color = optional_word<Color>(*it, "color", color_from_string);
      a.size_word = optional_word<SizeWord>(*it, "size", size_word_from_string);
      a.geometry = optional_word<Shape>(*it, "geometry", shape_from_string);
      a.abs_location = optional_word<Location>(*it, "abs_location", location_from_string);
    }
    scene.attributes.emplace(o.object_id, std::move(a));
    scene.objects.push_back(std::move(o));
  }
  for (const auto& jr : require(j, "relations")) {
    if (!jr.is_array() || jr.size() != 3) schema_error("relation must be [subject, value, object]");
    const auto value = relation_from_string(jr[1].get<std::string>());
    if (!value) schema_error("unknown relation '" + jr[1].get<std::string>() + "'");
    scene.relations.push_back({jr[0].get<std::string>(), jr[2].get<std::string>(), *value});
  }
  scene.validate();
  return scene;
}

Json issue_to_json(const ValidationIssue& issue) {
  Json j;
  j["image_id"] = issue.image_id;
  j["object_id"] = issue.object_id;
  j["kind"] = std::string(to_string(issue.kind));
  j["detail"] = issue.detail;
  return j;
}

void for_each_jsonl_line(std::string_view text, const std::string& source,
                         const std::function<void(const Json&, std::size_t)>& on_line) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(source, line_no, std::string("byte ") + std::to_string(e.byte) +
                                            ": invalid JSON");
    }
    try {
      on_line(j, line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const Json::exception& e) {
      throw ParseError(source, line_no, e.what());
    } catch (const InvalidInput& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot write " + path.string() + ": cannot create directory " +
                    path.parent_path().string() + ": " + ec.message());
    }
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("error writing " + path.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path.string() + ": " + ec.message());
}

}  // namespace refexp::json
