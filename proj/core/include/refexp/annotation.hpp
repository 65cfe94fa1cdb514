#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refexp/geometry.hpp"

namespace refexp {

struct ImageRecord {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::string file_path;
  std::optional<double> spatial_resolution;  // meters per pixel

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct ObjectInstance {
  std::string object_id;
  std::string image_id;
  std::string category;  // canonical form, see normalize_category
  BBox bbox;

  friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

using ImageIndex = std::map<std::string, ImageRecord>;

enum class IssueKind {
  inverted_box,
  out_of_bounds,
  non_finite,
  missing_field,
  bad_number,
  unknown_category,
  duplicate_object,
};

std::string_view to_string(IssueKind kind) noexcept;
std::optional<IssueKind> issue_kind_from_string(std::string_view s) noexcept;

struct ValidationIssue {
  std::string image_id;
  std::string object_id;
  IssueKind kind = IssueKind::missing_field;
  std::string detail;

  friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

enum class AnnotationFormat { voc_xml, jsonl };

std::optional<AnnotationFormat> annotation_format_from_string(std::string_view s) noexcept;

struct LoadOptions {
  /// Declared category list (canonical names). Empty accepts any category.
  std::vector<std::string> categories;
};

struct AnnotationSet {
  std::vector<ImageRecord> images;
  std::vector<ObjectInstance> objects;
  std::vector<ValidationIssue> issues;
};

/// Lower-case, trims, and collapses internal whitespace runs to one space.
std::string normalize_category(std::string_view name);

/// The 20 DIOR category names in canonical form.
const std::vector<std::string>& dior_categories();

/// Loads VOC-style XML (a directory of *.xml files, or a single file) or the
/// toolkit JSONL form. Malformed objects become ValidationIssues; unreadable
/// or structurally broken files throw ParseError naming file and line.
/// Output is sorted by (image_id, object_id).
AnnotationSet load_annotations(const std::filesystem::path& path,
                               AnnotationFormat format,
                               const LoadOptions& options = {});

/// Parses one VOC annotation document. `source` is used in error messages;
/// `image_id` defaults to the stem of `source`.
AnnotationSet parse_voc_xml(std::string_view xml, const std::string& source,
                            const LoadOptions& options = {});

AnnotationSet parse_annotations_jsonl(std::string_view text,
                                      const std::string& source,
                                      const LoadOptions& options = {});

/// Writes the canonical JSONL form: one line per object, plus one line per
/// image without objects so the image list survives a round trip.
void write_annotations_jsonl(const std::filesystem::path& path,
                             const std::vector<ImageRecord>& images,
                             const std::vector<ObjectInstance>& objects);

void write_issues_jsonl(const std::filesystem::path& path,
                        const std::vector<ValidationIssue>& issues);

ImageIndex index_images(const std::vector<ImageRecord>& images);

}  // namespace refexp
