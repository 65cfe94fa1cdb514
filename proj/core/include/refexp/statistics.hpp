#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "refexp/dataset.hpp"
#include "refexp/scene.hpp"

namespace refexp {

/// Fixed-width histogram: bin i counts values in [i*width, (i+1)*width).
struct Histogram {
  double bin_width = 1.0;
  std::map<long, std::size_t> bins;

  void add(double value);
  std::size_t mass() const noexcept;
  friend bool operator==(const Histogram&, const Histogram&) = default;
};

struct LengthStats {
  double mean = 0.0;
  std::size_t min = 0;
  std::size_t max = 0;
  std::map<std::size_t, std::size_t> histogram;  // token count -> samples
  friend bool operator==(const LengthStats&, const LengthStats&) = default;
};

struct BoxStats {
  Histogram width{32.0, {}};
  Histogram height{32.0, {}};
  Histogram area_ratio{0.05, {}};
  friend bool operator==(const BoxStats&, const BoxStats&) = default;
};

/// Shares of samples that carry, and can be resolved by, category alone,
/// category plus own attributes, and a relation.
struct ResolutionShares {
  double cat = 0.0;
  double cat_plus = 0.0;
  double att = 0.0;
  double att_plus = 0.0;
  double rel = 0.0;
  double rel_plus = 0.0;
  friend bool operator==(const ResolutionShares&, const ResolutionShares&) = default;
};

struct StatsReport {
  std::size_t pair_count = 0;
  std::size_t image_count = 0;
  std::size_t vocabulary_size = 0;
  std::map<std::string, std::size_t> category_freq;
  std::map<int, std::size_t> attrs_per_expression_hist;
  /// category -> attribute name (color, size, geometry, abs_location,
  /// rel_location, rel_size) -> samples using it.
  std::map<std::string, std::map<std::string, std::size_t>> per_category_attribute_usage;
  ResolutionShares shares;
  LengthStats length_stats;
  BoxStats box_stats;
  std::map<std::string, std::size_t> word_freq;

  friend bool operator==(const StatsReport&, const StatsReport&) = default;
};

/// Number of attribute slots an expression fills: subject category and own
/// attributes, plus relation and related-object slots for sentences.
int attribute_count(const ExpressionFills& fills);

/// Dataset analyses. Every sample's image must have a scene (InvalidInput
/// otherwise); resolution shares use resolve_expression against it.
StatsReport compute_statistics(const std::vector<GroundingSample>& samples,
                               const std::vector<Scene>& scenes);

std::string stats_report_to_json(const StatsReport& report);

/// Writes report.json and one CSV per analysis panel into `dir`.
void write_stats_report(const StatsReport& report, const std::filesystem::path& dir);

}  // namespace refexp
