#include "refexp/statistics.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "refexp/error.hpp"
#include "refexp/serialization.hpp"

namespace refexp {

void Histogram::add(double value) {
  ++bins[static_cast<long>(std::floor(value / bin_width))];
}

std::size_t Histogram::mass() const noexcept {
  std::size_t total = 0;
  for (const auto& [bin, count] : bins) total += count;
  return total;
}

int attribute_count(const ExpressionFills& fills) {
  int n = 1 + fills.subject.attribute_count();
  if (fills.relation && fills.related) n += 2 + fills.related->attribute_count();
  return n;
}

StatsReport compute_statistics(const std::vector<GroundingSample>& samples,
                               const std::vector<Scene>& scenes) {
  std::map<std::string, const Scene*> scene_of;
  for (const auto& s : scenes) scene_of.emplace(s.image.image_id, &s);

  StatsReport report;
  report.pair_count = samples.size();
  std::set<std::string> images;
  std::size_t cat = 0, cat_plus = 0, att = 0, att_plus = 0, rel = 0, rel_plus = 0;
  std::size_t total_tokens = 0;

  for (const auto& sample : samples) {
    const auto it = scene_of.find(sample.image_id);
    if (it == scene_of.end()) {
      throw InvalidInput("compute_statistics: no scene for image '" + sample.image_id + "'");
    }
    const Scene& scene = *it->second;
    const ExpressionFills& fills = sample.expression.fills;
    const std::set<std::string> target{sample.object_id};
    images.insert(sample.image_id);
    ++report.category_freq[sample.category];
    ++report.attrs_per_expression_hist[attribute_count(fills)];

    auto& usage = report.per_category_attribute_usage[sample.category];
    for (OwnAttribute a : {OwnAttribute::color, OwnAttribute::size, OwnAttribute::geometry,
                           OwnAttribute::abs_location}) {
      if (fills.subject.has(a)) ++usage[std::string(to_string(a))];
    }
    if (fills.relation) ++usage[std::string(to_string(kind_of(*fills.relation)))];

    if (!fills.subject.category.empty()) {
      ++cat;
      ObjectRef category_only;
      category_only.category = fills.subject.category;
      if (resolve_ref(category_only, scene) == target) ++cat_plus;
    }
    if (fills.subject.attribute_count() > 0) {
      ++att;
      if (resolve_ref(fills.subject, scene) == target) ++att_plus;
    }
    if (fills.relation) {
      ++rel;
      if (resolve_expression(fills, scene) == target) ++rel_plus;
    }

    const auto tokens = tokenize(sample.text());
    const std::size_t n = tokens.size();
    total_tokens += n;
    if (report.length_stats.histogram.empty() || n < report.length_stats.min) {
      report.length_stats.min = n;
    }
    report.length_stats.max = std::max(report.length_stats.max, n);
    ++report.length_stats.histogram[n];
    for (const auto& t : tokens) ++report.word_freq[t];

    report.box_stats.width.add(sample.bbox.width());
    report.box_stats.height.add(sample.bbox.height());
    report.box_stats.area_ratio.add(area_ratio(sample.bbox, sample.image_width, sample.image_height));
  }

  report.image_count = images.size();
  report.vocabulary_size = report.word_freq.size();
  if (!samples.empty()) {
    const double n = static_cast<double>(samples.size());
    report.length_stats.mean = static_cast<double>(total_tokens) / n;
    report.shares = {static_cast<double>(cat) / n,      static_cast<double>(cat_plus) / n,
                     static_cast<double>(att) / n,      static_cast<double>(att_plus) / n,
                     static_cast<double>(rel) / n,      static_cast<double>(rel_plus) / n};
  }
  return report;
}

namespace {

json::Json histogram_json(const Histogram& h) {
  json::Json bins = json::Json::array();
  for (const auto& [bin, count] : h.bins) {
    bins.push_back({{"lower", static_cast<double>(bin) * h.bin_width},
                    {"upper", static_cast<double>(bin + 1) * h.bin_width},
                    {"count", count}});
  }
  return {{"bin_width", h.bin_width}, {"bins", std::move(bins)}};
}

template <typename Map>
json::Json map_json(const Map& m) {
  json::Json j = json::Json::object();
  for (const auto& [k, v] : m) {
    std::ostringstream key;
    key << k;
    j[key.str()] = v;
  }
  return j;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

template <typename Map>
std::string map_csv(const std::string& key_header, const std::string& value_header, const Map& m,
                    std::size_t total) {
  std::ostringstream os;
  os << key_header << "," << value_header << ",share\n";
  for (const auto& [k, v] : m) {
    std::ostringstream key;
    key << k;
    os << csv_escape(key.str()) << "," << v << ","
       << (total ? static_cast<double>(v) / static_cast<double>(total) : 0.0) << "\n";
  }
  return os.str();
}

std::string histogram_csv(const Histogram& h, std::size_t total) {
  std::ostringstream os;
  os << "lower,upper,count,share\n";
  for (const auto& [bin, count] : h.bins) {
    os << static_cast<double>(bin) * h.bin_width << "," << static_cast<double>(bin + 1) * h.bin_width
       << "," << count << ","
       << (total ? static_cast<double>(count) / static_cast<double>(total) : 0.0) << "\n";
  }
  return os.str();
}

}  // namespace

std::string stats_report_to_json(const StatsReport& r) {
  json::Json j;
  j["pair_count"] = r.pair_count;
  j["image_count"] = r.image_count;
  j["vocabulary_size"] = r.vocabulary_size;
  j["category_freq"] = map_json(r.category_freq);
  j["attrs_per_expression_hist"] = map_json(r.attrs_per_expression_hist);
  json::Json usage = json::Json::object();
  for (const auto& [category, counts] : r.per_category_attribute_usage) {
    usage[category] = map_json(counts);
  }
  j["per_category_attribute_usage"] = std::move(usage);
  j["shares"] = {{"cat", r.shares.cat},           {"cat+", r.shares.cat_plus},
                 {"att", r.shares.att},           {"att+", r.shares.att_plus},
                 {"rel", r.shares.rel},           {"rel+", r.shares.rel_plus}};
  j["length_stats"] = {{"mean", r.length_stats.mean},
                       {"min", r.length_stats.min},
                       {"max", r.length_stats.max},
                       {"histogram", map_json(r.length_stats.histogram)}};
  j["box_stats"] = {{"width", histogram_json(r.box_stats.width)},
                    {"height", histogram_json(r.box_stats.height)},
                    {"area_ratio", histogram_json(r.box_stats.area_ratio)}};
  j["word_freq"] = map_json(r.word_freq);
  return j.dump(2);
}

void write_stats_report(const StatsReport& r, const std::filesystem::path& dir) {
  const std::size_t n = r.pair_count;
  json::write_file(dir / "report.json", stats_report_to_json(r) + "\n");
  json::write_file(dir / "category_freq.csv", map_csv("category", "count", r.category_freq, n));
  json::write_file(dir / "attrs_per_expression.csv",
                   map_csv("attributes", "count", r.attrs_per_expression_hist, n));
  {
    std::ostringstream os;
    os << "category,attribute,count,share\n";
    for (const auto& [category, counts] : r.per_category_attribute_usage) {
      const std::size_t cat_total = r.category_freq.count(category) ? r.category_freq.at(category) : 0;
      for (const auto& [attr, count] : counts) {
        os << csv_escape(category) << "," << attr << "," << count << ","
           << (cat_total ? static_cast<double>(count) / static_cast<double>(cat_total) : 0.0)
           << "\n";
      }
    }
    json::write_file(dir / "attribute_usage.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "measure,share\n"
       << "cat," << r.shares.cat << "\ncat+," << r.shares.cat_plus << "\natt," << r.shares.att
       << "\natt+," << r.shares.att_plus << "\nrel," << r.shares.rel << "\nrel+,"
       << r.shares.rel_plus << "\n";
    json::write_file(dir / "shares.csv", os.str());
  }
  json::write_file(dir / "length_hist.csv", map_csv("tokens", "count", r.length_stats.histogram, n));
  json::write_file(dir / "box_width.csv", histogram_csv(r.box_stats.width, n));
  json::write_file(dir / "box_height.csv", histogram_csv(r.box_stats.height, n));
  json::write_file(dir / "box_area_ratio.csv", histogram_csv(r.box_stats.area_ratio, n));
  json::write_file(dir / "word_freq.csv", map_csv("token", "count", r.word_freq, n));
}

}  // namespace refexp
