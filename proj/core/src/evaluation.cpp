#include "refexp/evaluation.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "refexp/error.hpp"
#include "refexp/serialization.hpp"

namespace refexp {

namespace {

struct Accumulator {
  std::vector<std::size_t> hits;
  double sum_ratio = 0.0;
  MetricSummary summary;

  explicit Accumulator(std::size_t thresholds) : hits(thresholds, 0) {}

  void add(double inter, double uni, bool missing, const std::vector<double>& thresholds) {
    const double ratio = inter / uni;
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      if (ratio >= thresholds[i]) ++hits[i];
    }
    sum_ratio += ratio;
    summary.sum_intersection += inter;
    summary.sum_union += uni;
    ++summary.count;
    if (missing) ++summary.missing;
  }

  MetricSummary finish(const std::vector<double>& thresholds) {
    const double m = static_cast<double>(summary.count);
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      summary.precision_at[thresholds[i]] = m > 0 ? static_cast<double>(hits[i]) / m : 0.0;
    }
    summary.mean_iou = m > 0 ? sum_ratio / m : 0.0;
    summary.cum_iou = summary.sum_union > 0 ? summary.sum_intersection / summary.sum_union : 0.0;
    return summary;
  }
};

}  // namespace

EvalReport evaluate_predictions(const std::vector<PredictionRecord>& predictions,
                                const std::vector<GroundingSample>& truth,
                                const std::vector<double>& thresholds) {
  std::vector<double> taus = thresholds;
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  for (double t : taus) {
    if (!(t > 0.0 && t <= 1.0)) throw InvalidInput("evaluate: thresholds must lie in (0, 1]");
  }

  std::map<std::string, const GroundingSample*> gt;
  for (const auto& s : truth) {
    if (!gt.emplace(s.sample_id, &s).second) {
      throw InvalidInput("evaluate: duplicate ground-truth sample '" + s.sample_id + "'");
    }
  }
  std::map<std::string, const PredictionRecord*> pred;
  for (const auto& p : predictions) {
    if (!gt.contains(p.sample_id)) {
      throw InvalidInput("evaluate: prediction for unknown sample '" + p.sample_id + "'");
    }
    if (!pred.emplace(p.sample_id, &p).second) {
      throw InvalidInput("evaluate: duplicate prediction for sample '" + p.sample_id + "'");
    }
  }

  Accumulator overall(taus.size());
  std::map<std::string, Accumulator> per_category;
  for (const auto& [id, sample] : gt) {
    const auto it = pred.find(id);
    const bool missing = it == pred.end();
    const double inter = missing ? 0.0 : intersection_area(it->second->bbox, sample->bbox);
    const double uni = missing ? sample->bbox.area() : union_area(it->second->bbox, sample->bbox);
    overall.add(inter, uni, missing, taus);
    per_category.try_emplace(sample->category, taus.size())
        .first->second.add(inter, uni, missing, taus);
  }

  EvalReport report;
  report.overall = overall.finish(taus);
  for (auto& [category, acc] : per_category) report.per_category[category] = acc.finish(taus);
  return report;
}

std::vector<PredictionRecord> load_predictions_jsonl(const std::filesystem::path& path) {
  const std::string text = json::read_file(path);
  std::vector<PredictionRecord> out;
  json::for_each_jsonl_line(text, path.string(), [&](const json::Json& j, std::size_t line) {
    if (!j.is_object() || !j.contains("sample_id") || !j["sample_id"].is_string()) {
      throw ParseError(path.string(), line, "prediction needs a sample_id string");
    }
    if (!j.contains("bbox")) throw ParseError(path.string(), line, "prediction needs a bbox");
    PredictionRecord p{j["sample_id"].get<std::string>(), json::bbox_from_json(j["bbox"]),
                       std::nullopt};
    if (const auto it = j.find("score"); it != j.end() && it->is_number()) {
      p.score = it->get<double>();
    }
    out.push_back(std::move(p));
  });
  return out;
}

void write_predictions_jsonl(const std::filesystem::path& path,
                             const std::vector<PredictionRecord>& predictions) {
  std::string out;
  for (const auto& p : predictions) {
    json::Json j;
    j["sample_id"] = p.sample_id;
    j["bbox"] = json::bbox_to_json(p.bbox);
    if (p.score) j["score"] = *p.score;
    out += j.dump() + "\n";
  }
  json::write_file(path, out);
}

namespace {

std::string threshold_key(double t) {
  std::ostringstream os;
  os << "pr@" << t;
  return os.str();
}

json::Json summary_json(const MetricSummary& s) {
  json::Json j;
  j["M"] = s.count;
  j["missing"] = s.missing;
  for (const auto& [t, p] : s.precision_at) j[threshold_key(t)] = p;
  j["mean_iou"] = s.mean_iou;
  j["cum_iou"] = s.cum_iou;
  j["sum_intersection"] = s.sum_intersection;
  j["sum_union"] = s.sum_union;
  return j;
}

}  // namespace

std::string eval_report_to_json(const EvalReport& report) {
  json::Json j;
  j["overall"] = summary_json(report.overall);
  json::Json cats = json::Json::object();
  for (const auto& [category, s] : report.per_category) cats[category] = summary_json(s);
  j["per_category"] = std::move(cats);
  return j.dump(2);
}

void write_eval_report(const EvalReport& report, const std::filesystem::path& dir) {
  json::write_file(dir / "report.json", eval_report_to_json(report) + "\n");
  std::ostringstream os;
  os << "category,M";
  for (const auto& [t, p] : report.overall.precision_at) os << "," << threshold_key(t);
  os << ",mean_iou,cum_iou\n";
  auto row = [&](const std::string& name, const MetricSummary& s) {
    os << name << "," << s.count;
    for (const auto& [t, p] : s.precision_at) os << "," << p * 100.0;
    os << "," << s.mean_iou << "," << s.cum_iou << "\n";
  };
  for (const auto& [category, s] : report.per_category) row(category, s);
  row("all", report.overall);
  json::write_file(dir / "per_category.csv", os.str());
}

}  // namespace refexp
