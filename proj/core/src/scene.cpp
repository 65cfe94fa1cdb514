#include "refexp/scene.hpp"

#include <algorithm>
#include <set>

#include "refexp/error.hpp"

namespace refexp {

const ObjectInstance* Scene::find(const std::string& object_id) const noexcept {
  const auto it = std::lower_bound(
      objects.begin(), objects.end(), object_id,
      [](const ObjectInstance& o, const std::string& id) { return o.object_id < id; });
  if (it != objects.end() && it->object_id == object_id) return &*it;
  // Fall back for scenes assembled out of order.
  const auto lin = std::find_if(objects.begin(), objects.end(),
                                [&](const ObjectInstance& o) { return o.object_id == object_id; });
  return lin == objects.end() ? nullptr : &*lin;
}

const AttributeSet& Scene::attributes_of(const std::string& object_id) const {
  const auto it = attributes.find(object_id);
  if (it == attributes.end()) {
    throw InvalidInput("scene '" + image.image_id + "': no attributes for '" + object_id + "'");
  }
  return it->second;
}

void Scene::validate() const {
  std::set<std::string> ids;
  for (const auto& o : objects) {
    if (o.image_id != image.image_id) {
      throw InvalidInput("scene '" + image.image_id + "' holds object '" + o.object_id +
                         "' of image '" + o.image_id + "'");
    }
    if (!ids.insert(o.object_id).second) {
      throw InvalidInput("scene '" + image.image_id + "': duplicate object '" + o.object_id + "'");
    }
    const auto& a = attributes_of(o.object_id);
    if (a.category != o.category) {
      throw InvalidInput("scene '" + image.image_id + "': attribute category mismatch for '" +
                         o.object_id + "'");
    }
  }
  for (const auto& r : relations) {
    if (r.subject_id == r.object_id) {
      throw InvalidInput("scene '" + image.image_id + "': reflexive relation on '" +
                         r.subject_id + "'");
    }
    if (!ids.contains(r.subject_id) || !ids.contains(r.object_id)) {
      throw InvalidInput("scene '" + image.image_id + "': relation endpoint missing");
    }
  }
}

Scene build_scene(const ImageRecord& image, std::vector<ObjectInstance> objects,
                  const cv::Mat& pixels, const AttributeConfig& cfg) {
  Scene scene;
  scene.image = image;
  std::sort(objects.begin(), objects.end(),
            [](const auto& a, const auto& b) { return a.object_id < b.object_id; });
  scene.objects = std::move(objects);
  for (const auto& o : scene.objects) {
    scene.attributes.emplace(o.object_id, extract_attributes(o, image, pixels, cfg));
  }
  for (const auto& s : scene.objects) {
    for (const auto& o : scene.objects) {
      if (s.object_id == o.object_id) continue;
      if (auto f = extract_rel_location(s, o, cfg)) scene.relations.push_back(std::move(*f));
      if (auto f = extract_rel_size(s, o, image, cfg)) scene.relations.push_back(std::move(*f));
    }
  }
  scene.validate();
  return scene;
}

}  // namespace refexp
