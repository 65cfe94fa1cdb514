#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "refexp/annotation.hpp"

namespace refexp {

struct SamplingConfig {
  double min_area_ratio = 0.0002;
  double max_area_ratio = 0.99;
  int max_per_category = 5;
  std::uint64_t seed = 0;

  /// Throws InvalidInput unless 0 <= min < max <= 1 and cap >= 1.
  void validate() const;
};

/// `inverted` covers any box whose geometry is invalid for its image
/// (inverted, degenerate, or outside the image beyond the clamp tolerance).
enum class DropReason { inverted, too_small, too_large, category_cap };

std::string_view to_string(DropReason reason) noexcept;
std::optional<DropReason> drop_reason_from_string(std::string_view s) noexcept;

struct DroppedObject {
  ObjectInstance object;
  DropReason reason;

  friend bool operator==(const DroppedObject&, const DroppedObject&) = default;
};

struct SamplingResult {
  std::vector<ObjectInstance> kept;
  std::vector<DroppedObject> dropped;
};

/// Step 1 box sampling. Filters run in order geometry -> area -> cap, so the
/// per-(image, category) cap only counts area-valid boxes. When a group
/// exceeds the cap a seeded uniform subset is kept. Both outputs are sorted
/// by (image_id, object_id). Throws InvalidInput for an unknown image_id.
SamplingResult sample_boxes(const std::vector<ObjectInstance>& objects,
                            const ImageIndex& images, const SamplingConfig& cfg);

void write_drop_report_jsonl(const std::filesystem::path& path,
                             const std::vector<DroppedObject>& dropped);

}  // namespace refexp
