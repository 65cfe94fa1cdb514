#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "refexp/annotation.hpp"
#include "refexp/dataset.hpp"
#include "refexp/expression.hpp"
#include "refexp/scene.hpp"

// JSON forms of the interchange types. Writers use insertion-ordered
// objects so field order is stable; readers throw InvalidInput on schema
// violations.

namespace refexp::json {

using Json = nlohmann::ordered_json;

Json bbox_to_json(const BBox& box);
BBox bbox_from_json(const Json& j);

Json object_ref_to_json(const ObjectRef& ref);
ObjectRef object_ref_from_json(const Json& j);

Json fills_to_json(const ExpressionFills& fills);
ExpressionFills fills_from_json(const Json& j);

Json expression_to_json(const Expression& expr);
Expression expression_from_json(const Json& j);

Json sample_to_json(const GroundingSample& sample);
GroundingSample sample_from_json(const Json& j);

Json scene_to_json(const Scene& scene);
Scene scene_from_json(const Json& j);

Json issue_to_json(const ValidationIssue& issue);

/// Calls `on_line(json, line_number)` for each non-blank line. Parse errors
/// become ParseError naming `source` and the line.
void for_each_jsonl_line(std::string_view text, const std::string& source,
                         const std::function<void(const Json&, std::size_t)>& on_line);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename. Throws IoError naming path.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace refexp::json
