#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refexp/expression.hpp"
#include "refexp/geometry.hpp"
#include "refexp/scene.hpp"

namespace refexp {

enum class Split { train, val, test };
enum class SampleStatus { pending, accepted, edited, rejected };

std::string_view to_string(Split s) noexcept;
std::string_view to_string(SampleStatus s) noexcept;
std::optional<Split> split_from_string(std::string_view s) noexcept;
std::optional<SampleStatus> sample_status_from_string(std::string_view s) noexcept;

/// One image/expression/box triplet.
struct GroundingSample {
  std::string sample_id;
  std::string image_id;
  std::string object_id;
  std::string category;
  int image_width = 0;
  int image_height = 0;
  BBox bbox;
  Expression expression;
  std::optional<Split> split;
  SampleStatus status = SampleStatus::pending;
  /// Reviewer correction; replaces the generated text on export.
  std::optional<std::string> edited_text;

  const std::string& text() const noexcept {
    return edited_text ? *edited_text : expression.text;
  }

  friend bool operator==(const GroundingSample&, const GroundingSample&) = default;
};

/// Stable 16-hex-digit id from (image_id, object_id).
std::string make_sample_id(std::string_view image_id, std::string_view object_id);

struct DiscardedObject {
  std::string image_id;
  std::string object_id;
  std::string reason;
};

struct BuildOutput {
  std::vector<GroundingSample> samples;
  std::vector<DiscardedObject> discarded;
};

/// One pending sample per non-discarded object. Scene seeds are derived from
/// (seed, image_id), target seeds from (scene seed, object_id), so output is
/// independent of `threads` and of scene order within the input.
BuildOutput build_dataset_detailed(const std::vector<Scene>& scenes,
                                   std::uint64_t seed, unsigned threads = 1);
std::vector<GroundingSample> build_dataset(const std::vector<Scene>& scenes,
                                           std::uint64_t seed, unsigned threads = 1);

struct SplitFractions {
  double train = 0.4;
  double val = 0.1;
  double test = 0.5;

  std::array<double, 3> as_array() const noexcept { return {train, val, test}; }
};

/// Shuffles images by seed and assigns each whole image to the split whose
/// expression count lags its target the most. Throws InvalidInput when the
/// fractions are negative or do not sum to 1, or when there are fewer than
/// three images.
std::vector<GroundingSample> split_dataset(std::vector<GroundingSample> samples,
                                           const SplitFractions& fractions,
                                           std::uint64_t seed);

enum class DatasetFormat { jsonl, voc_xml };
std::optional<DatasetFormat> dataset_format_from_string(std::string_view s) noexcept;

/// JSONL: `path` is a file, one line per sample. VOC XML: `path` is a
/// directory receiving one <image_id>.xml per image with a `description`
/// element per object. Throws IoError naming the path.
void export_dataset(const std::vector<GroundingSample>& samples,
                    const std::filesystem::path& path, DatasetFormat format);

std::vector<GroundingSample> load_dataset_jsonl(const std::filesystem::path& path);

void write_discarded_jsonl(const std::filesystem::path& path,
                           const std::vector<DiscardedObject>& discarded);

void write_scenes_jsonl(const std::filesystem::path& path,
                        const std::vector<Scene>& scenes);
std::vector<Scene> load_scenes_jsonl(const std::filesystem::path& path);

}  // namespace refexp
