#include "refexp/sampling.hpp"

#include <algorithm>
#include <map>

#include "refexp/error.hpp"
#include "refexp/seed.hpp"
#include "refexp/serialization.hpp"

namespace refexp {

void SamplingConfig::validate() const {
  if (!(min_area_ratio >= 0.0 && min_area_ratio < max_area_ratio && max_area_ratio <= 1.0)) {
    throw InvalidInput("sampling: need 0 <= min_area_ratio < max_area_ratio <= 1");
  }
  if (max_per_category < 1) throw InvalidInput("sampling: max_per_category must be >= 1");
}

std::string_view to_string(DropReason reason) noexcept {
  switch (reason) {
    case DropReason::inverted: return "inverted";
    case DropReason::too_small: return "too_small";
    case DropReason::too_large: return "too_large";
    case DropReason::category_cap: return "category_cap";
  }
  return "inverted";
}

std::optional<DropReason> drop_reason_from_string(std::string_view s) noexcept {
  for (auto r : {DropReason::inverted, DropReason::too_small, DropReason::too_large,
                 DropReason::category_cap}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

namespace {

bool by_id(const ObjectInstance& a, const ObjectInstance& b) {
  return std::tie(a.image_id, a.object_id) < std::tie(b.image_id, b.object_id);
}

}  // namespace

SamplingResult sample_boxes(const std::vector<ObjectInstance>& objects, const ImageIndex& images,
                            const SamplingConfig& cfg) {
  cfg.validate();
  SamplingResult result;

  // (image_id, category) -> area-valid candidates
  std::map<std::pair<std::string, std::string>, std::vector<ObjectInstance>> groups;
  for (const auto& obj : objects) {
    const auto it = images.find(obj.image_id);
    if (it == images.end()) {
      throw InvalidInput("sample_boxes: object '" + obj.object_id + "' references unknown image '" +
                         obj.image_id + "'");
    }
    const ImageRecord& img = it->second;
    if (img.width <= 0 || img.height <= 0 || !within_image(obj.bbox, img.width, img.height)) {
      result.dropped.push_back({obj, DropReason::inverted});
      continue;
    }
    const double ratio = area_ratio(obj.bbox, img.width, img.height);
    if (ratio < cfg.min_area_ratio) {
      result.dropped.push_back({obj, DropReason::too_small});
    } else if (ratio > cfg.max_area_ratio) {
      result.dropped.push_back({obj, DropReason::too_large});
    } else {
      groups[{obj.image_id, obj.category}].push_back(obj);
    }
  }

  const auto cap = static_cast<std::size_t>(cfg.max_per_category);
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(), by_id);
    if (members.size() <= cap) {
      std::move(members.begin(), members.end(), std::back_inserter(result.kept));
      continue;
    }
    Rng rng(derive_seed(derive_seed(cfg.seed, key.first), key.second));
    seeded_shuffle(members, rng);
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (i < cap) {
        result.kept.push_back(std::move(members[i]));
      } else {
        result.dropped.push_back({std::move(members[i]), DropReason::category_cap});
      }
    }
  }

  std::sort(result.kept.begin(), result.kept.end(), by_id);
  std::sort(result.dropped.begin(), result.dropped.end(),
            [](const auto& a, const auto& b) { return by_id(a.object, b.object); });
  return result;
}

void write_drop_report_jsonl(const std::filesystem::path& path,
                             const std::vector<DroppedObject>& dropped) {
  std::string out;
  for (const auto& d : dropped) {
    json::Json j;
    j["image_id"] = d.object.image_id;
    j["object_id"] = d.object.object_id;
    j["category"] = d.object.category;
    j["bbox"] = json::bbox_to_json(d.object.bbox);
    j["reason"] = std::string(to_string(d.reason));
    out += j.dump() + "\n";
  }
  json::write_file(path, out);
}

}  // namespace refexp
