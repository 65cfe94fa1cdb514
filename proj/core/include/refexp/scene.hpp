#pragma once

#include <map>
#include <string>
#include <vector>

#include <opencv2/core/mat.hpp>

#include "refexp/annotation.hpp"
#include "refexp/attributes.hpp"

namespace refexp {

/// Everything the expression generator knows about one image: the kept
/// objects, their own attributes, and every pairwise relation that holds.
struct Scene {
  ImageRecord image;
  std::vector<ObjectInstance> objects;  // sorted by object_id
  std::map<std::string, AttributeSet> attributes;
  std::vector<RelationalFact> relations;

  const ObjectInstance* find(const std::string& object_id) const noexcept;
  const AttributeSet& attributes_of(const std::string& object_id) const;

  /// Throws InvalidInput if an object lacks attributes, a relation endpoint
  /// is missing, a relation is reflexive, or an object belongs elsewhere.
  void validate() const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Runs attribute extraction (own attributes for each object, relative
/// location and size for every ordered pair). `pixels` may be empty.
Scene build_scene(const ImageRecord& image, std::vector<ObjectInstance> objects,
                  const cv::Mat& pixels, const AttributeConfig& cfg = {});

}  // namespace refexp
