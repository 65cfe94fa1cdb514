#include "refexp/annotation.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "refexp/error.hpp"
#include "refexp/serialization.hpp"

namespace refexp {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::string_view to_string(IssueKind kind) noexcept {
  switch (kind) {
    case IssueKind::inverted_box: return "inverted_box";
    case IssueKind::out_of_bounds: return "out_of_bounds";
    case IssueKind::non_finite: return "non_finite";
    case IssueKind::missing_field: return "missing_field";
    case IssueKind::bad_number: return "bad_number";
    case IssueKind::unknown_category: return "unknown_category";
    case IssueKind::duplicate_object: return "duplicate_object";
  }
  return "missing_field";
}

std::optional<IssueKind> issue_kind_from_string(std::string_view s) noexcept {
  for (auto k : {IssueKind::inverted_box, IssueKind::out_of_bounds, IssueKind::non_finite,
                 IssueKind::missing_field, IssueKind::bad_number, IssueKind::unknown_category,
                 IssueKind::duplicate_object}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<AnnotationFormat> annotation_format_from_string(std::string_view s) noexcept {
  if (s == "voc_xml") return AnnotationFormat::voc_xml;
  if (s == "jsonl") return AnnotationFormat::jsonl;
  return std::nullopt;
}

std::string normalize_category(std::string_view name) {
  std::string out;
  bool pending_space = false;
  for (char c : name) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

const std::vector<std::string>& dior_categories() {
  static const std::vector<std::string> names = {
      "airplane",      "airport",          "baseballfield",          "basketballcourt",
      "bridge",        "chimney",          "dam",                    "expressway-service-area",
      "expressway-toll-station", "golffield", "groundtrackfield",    "harbor",
      "overpass",      "ship",             "stadium",                "storagetank",
      "tenniscourt",   "trainstation",     "vehicle",                "windmill"};
  return names;
}

ImageIndex index_images(const std::vector<ImageRecord>& images) {
  ImageIndex index;
  for (const auto& img : images) index.emplace(img.image_id, img);
  return index;
}

namespace {

std::string object_id_for(const std::string& image_id, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%04zu", index);
  return image_id + buf;
}

std::optional<double> parse_number(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

/// Shared object validation for both input formats.
class ObjectCollector {
 public:
  ObjectCollector(AnnotationSet& out, const LoadOptions& options)
      : out_(out), categories_(options.categories.begin(), options.categories.end()) {}

  void issue(const std::string& image_id, const std::string& object_id, IssueKind kind,
             std::string detail) {
    out_.issues.push_back({image_id, object_id, kind, std::move(detail)});
  }

  void add(const ImageRecord& image, const std::string& object_id, std::string_view raw_name,
           const std::array<double, 4>& raw) {
    if (!seen_.insert({image.image_id, object_id}).second) {
      issue(image.image_id, object_id, IssueKind::duplicate_object, "object id repeated");
      return;
    }
    std::string category = normalize_category(raw_name);
    if (category.empty()) {
      issue(image.image_id, object_id, IssueKind::missing_field, "empty category name");
      return;
    }
    if (!categories_.empty() && !categories_.contains(category)) {
      issue(image.image_id, object_id, IssueKind::unknown_category,
            "category '" + category + "' not declared");
      return;
    }
    const auto clamped = clamp_to_image(raw[0], raw[1], raw[2], raw[3], image.width, image.height);
    if (!clamped.box) {
      std::ostringstream detail;
      detail << "bndbox (" << raw[0] << "," << raw[1] << "," << raw[2] << "," << raw[3] << ")";
      IssueKind kind = IssueKind::out_of_bounds;
      switch (*clamped.defect) {
        case BoxDefect::inverted: kind = IssueKind::inverted_box; break;
        case BoxDefect::non_finite: kind = IssueKind::non_finite; break;
        case BoxDefect::out_of_bounds:
          detail << " outside " << image.width << "x" << image.height;
          break;
      }
      issue(image.image_id, object_id, kind, detail.str());
      return;
    }
    out_.objects.push_back({object_id, image.image_id, std::move(category), *clamped.box});
  }

 private:
  AnnotationSet& out_;
  std::set<std::string> categories_;
  std::set<std::pair<std::string, std::string>> seen_;
};

void sort_set(AnnotationSet& set) {
  std::sort(set.images.begin(), set.images.end(),
            [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
  std::stable_sort(set.objects.begin(), set.objects.end(), [](const auto& a, const auto& b) {
    return std::tie(a.image_id, a.object_id) < std::tie(b.image_id, b.object_id);
  });
  std::stable_sort(set.issues.begin(), set.issues.end(), [](const auto& a, const auto& b) {
    return std::tie(a.image_id, a.object_id) < std::tie(b.image_id, b.object_id);
  });
}

int positive_dimension(const pt::ptree& size, const char* key, const std::string& source) {
  const auto node = size.get_optional<std::string>(key);
  if (!node) throw ParseError(source, 0, std::string("size element lacks ") + key);
  const auto value = parse_number(*node);
  if (!value || *value <= 0.0 || *value != static_cast<int>(*value)) {
    throw ParseError(source, 0, std::string("size.") + key + " must be a positive integer");
  }
  return static_cast<int>(*value);
}

void merge(AnnotationSet& into, AnnotationSet&& part, std::set<std::string>& image_ids,
           const std::string& source) {
  for (auto& img : part.images) {
    if (!image_ids.insert(img.image_id).second) {
      throw ParseError(source, 0, "duplicate image_id '" + img.image_id + "'");
    }
    into.images.push_back(std::move(img));
  }
  std::move(part.objects.begin(), part.objects.end(), std::back_inserter(into.objects));
  std::move(part.issues.begin(), part.issues.end(), std::back_inserter(into.issues));
}

std::vector<fs::path> files_with_extension(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ext) files.push_back(it->path());
  }
  if (ec) throw ParseError(dir.string(), 0, "cannot list directory: " + ec.message());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

AnnotationSet parse_voc_xml(std::string_view xml, const std::string& source,
                            const LoadOptions& options) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(source, e.line(), e.message());
  }
  const auto root = tree.get_child_optional("annotation");
  if (!root) throw ParseError(source, 0, "missing <annotation> root element");
  const auto size = root->get_child_optional("size");
  if (!size) throw ParseError(source, 0, "missing <size> element");

  AnnotationSet out;
  ImageRecord image;
  image.image_id = fs::path(source).stem().string();
  image.width = positive_dimension(*size, "width", source);
  image.height = positive_dimension(*size, "height", source);
  image.file_path = root->get("filename", "");
  if (const auto res = root->get_optional<std::string>("spatial_resolution")) {
    image.spatial_resolution = parse_number(*res);
  }
  out.images.push_back(image);

  ObjectCollector collector(out, options);
  std::size_t index = 0;
  for (const auto& [tag, node] : *root) {
    if (tag != "object") continue;
    const std::string object_id = object_id_for(image.image_id, index++);
    const auto name = node.get_optional<std::string>("name");
    if (!name) {
      collector.issue(image.image_id, object_id, IssueKind::missing_field, "object lacks <name>");
      continue;
    }
    const auto bndbox = node.get_child_optional("bndbox");
    if (!bndbox) {
      collector.issue(image.image_id, object_id, IssueKind::missing_field, "object lacks <bndbox>");
      continue;
    }
    std::array<double, 4> raw{};
    bool ok = true;
    const char* keys[] = {"xmin", "ymin", "xmax", "ymax"};
    for (int i = 0; i < 4 && ok; ++i) {
      const auto text = bndbox->get_optional<std::string>(keys[i]);
      if (!text) {
        collector.issue(image.image_id, object_id, IssueKind::missing_field,
                        std::string("bndbox lacks <") + keys[i] + ">");
        ok = false;
      } else if (const auto v = parse_number(*text)) {
        raw[i] = *v;
      } else {
        collector.issue(image.image_id, object_id, IssueKind::bad_number,
                        std::string("bndbox.") + keys[i] + " = '" + *text + "'");
        ok = false;
      }
    }
    if (ok) collector.add(image, object_id, *name, raw);
  }
  sort_set(out);
  return out;
}

AnnotationSet parse_annotations_jsonl(std::string_view text, const std::string& source,
                                      const LoadOptions& options) {
  AnnotationSet out;
  ObjectCollector collector(out, options);
  std::map<std::string, ImageRecord> images;
  std::map<std::string, std::size_t> counters;

  json::for_each_jsonl_line(text, source, [&](const json::Json& j, std::size_t line) {
    if (!j.is_object()) throw ParseError(source, line, "expected a JSON object");
    const auto image_id = j.value("image_id", std::string());
    if (image_id.empty()) throw ParseError(source, line, "missing image_id");
    if (!j.contains("width") || !j.contains("height") || !j["width"].is_number_integer() ||
        !j["height"].is_number_integer()) {
      throw ParseError(source, line, "width and height must be integers");
    }
    ImageRecord record{image_id, j["width"].get<int>(), j["height"].get<int>(),
                       j.value("file_path", std::string()), std::nullopt};
    if (record.width <= 0 || record.height <= 0) {
      throw ParseError(source, line, "image dimensions must be positive");
    }
    if (const auto it = j.find("spatial_resolution"); it != j.end() && it->is_number()) {
      record.spatial_resolution = it->get<double>();
    }
    const auto [pos, inserted] = images.emplace(image_id, record);
    if (!inserted && (pos->second.width != record.width || pos->second.height != record.height)) {
      throw ParseError(source, line, "conflicting size for image '" + image_id + "'");
    }
    const ImageRecord& image = pos->second;

    const bool has_category = j.contains("category");
    const bool has_bbox = j.contains("bbox");
    if (!has_category && !has_bbox) return;  // image-only record

    const std::string object_id = j.contains("object_id") && j["object_id"].is_string()
                                      ? j["object_id"].get<std::string>()
                                      : object_id_for(image_id, counters[image_id]);
    ++counters[image_id];
    if (!has_category || !j["category"].is_string()) {
      collector.issue(image_id, object_id, IssueKind::missing_field, "missing category");
      return;
    }
    if (!has_bbox) {
      collector.issue(image_id, object_id, IssueKind::missing_field, "missing bbox");
      return;
    }
    const auto& bbox = j["bbox"];
    if (!bbox.is_array() || bbox.size() != 4 ||
        !std::all_of(bbox.begin(), bbox.end(), [](const auto& v) { return v.is_number(); })) {
      collector.issue(image_id, object_id, IssueKind::bad_number,
                      "bbox must be four numbers, got " + bbox.dump());
      return;
    }
    collector.add(image, object_id, j["category"].get<std::string>(),
                  {bbox[0].get<double>(), bbox[1].get<double>(), bbox[2].get<double>(),
                   bbox[3].get<double>()});
  });
  for (auto& [id, img] : images) out.images.push_back(std::move(img));
  sort_set(out);
  return out;
}

AnnotationSet load_annotations(const fs::path& path, AnnotationFormat format,
                               const LoadOptions& options) {
  std::error_code ec;
  const bool is_dir = fs::is_directory(path, ec);
  if (!is_dir && !fs::is_regular_file(path, ec)) {
    throw ParseError(path.string(), 0, "path is not readable");
  }
  const std::string ext = format == AnnotationFormat::voc_xml ? ".xml" : ".jsonl";
  const std::vector<fs::path> files = is_dir ? files_with_extension(path, ext)
                                             : std::vector<fs::path>{path};

  AnnotationSet result;
  std::set<std::string> image_ids;
  for (const auto& file : files) {
    std::string text;
    try {
      text = json::read_file(file);
    } catch (const IoError& e) {
      throw ParseError(file.string(), 0, e.what());
    }
    AnnotationSet part = format == AnnotationFormat::voc_xml
                             ? parse_voc_xml(text, file.string(), options)
                             : parse_annotations_jsonl(text, file.string(), options);
    merge(result, std::move(part), image_ids, file.string());
  }
  sort_set(result);
  return result;
}

void write_annotations_jsonl(const fs::path& path, const std::vector<ImageRecord>& images,
                             const std::vector<ObjectInstance>& objects) {
  std::map<std::string, std::vector<const ObjectInstance*>> by_image;
  for (const auto& o : objects) by_image[o.image_id].push_back(&o);
  std::string out;
  std::vector<const ImageRecord*> sorted;
  for (const auto& img : images) sorted.push_back(&img);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->image_id < b->image_id; });
  for (const auto* img : sorted) {
    auto base = [&] {
      json::Json j;
      j["image_id"] = img->image_id;
      j["width"] = img->width;
      j["height"] = img->height;
      j["file_path"] = img->file_path;
      if (img->spatial_resolution) j["spatial_resolution"] = *img->spatial_resolution;
      return j;
    };
    auto it = by_image.find(img->image_id);
    if (it == by_image.end()) {
      out += base().dump() + "\n";
      continue;
    }
    auto& objs = it->second;
    std::sort(objs.begin(), objs.end(),
              [](const auto* a, const auto* b) { return a->object_id < b->object_id; });
    for (const auto* o : objs) {
      json::Json j = base();
      j["object_id"] = o->object_id;
      j["category"] = o->category;
      j["bbox"] = json::bbox_to_json(o->bbox);
      out += j.dump() + "\n";
    }
  }
  json::write_file(path, out);
}

void write_issues_jsonl(const fs::path& path, const std::vector<ValidationIssue>& issues) {
  std::string out;
  for (const auto& issue : issues) out += json::issue_to_json(issue).dump() + "\n";
  json::write_file(path, out);
}

}  // namespace refexp
