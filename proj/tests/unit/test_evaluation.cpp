#include <gtest/gtest.h>

#include "refexp/error.hpp"
#include "refexp/evaluation.hpp"
#include "refexp/serialization.hpp"
#include "synthetic.hpp"

using namespace refexp;
using fixture::rand_int;

namespace {

std::vector<PredictionRecord> perfect(const std::vector<GroundingSample>& truth) {
  std::vector<PredictionRecord> out;
  for (const auto& s : truth) out.push_back({s.sample_id, s.bbox, 1.0});
  return out;
}

/// Random predictions near the truth on an integer grid, some missing.
std::vector<PredictionRecord> noisy(const std::vector<GroundingSample>& truth, Rng& rng) {
  std::vector<PredictionRecord> out;
  for (const auto& s : truth) {
    if (rand_int(rng, 0, 9) == 0) continue;
    const auto& b = s.bbox;
    const double x0 = std::max(0.0, b.x_min() + rand_int(rng, -20, 20));
    const double y0 = std::max(0.0, b.y_min() + rand_int(rng, -20, 20));
    const double x1 = std::max(x0 + 1, b.x_max() + rand_int(rng, -20, 20));
    const double y1 = std::max(y0 + 1, b.y_max() + rand_int(rng, -20, 20));
    out.push_back({s.sample_id, BBox(x0, y0, x1, y1), std::nullopt});
  }
  return out;
}

}  // namespace

TEST(Evaluate, PerfectPredictions) {
  const auto truth = fixture::make_samples(20, 2);
  const auto r = evaluate_predictions(perfect(truth), truth);
  EXPECT_EQ(r.overall.precision_at.at(0.9), 1.0);
  EXPECT_EQ(r.overall.precision_at.at(0.5), 1.0);
  EXPECT_EQ(r.overall.mean_iou, 1.0);
  EXPECT_EQ(r.overall.cum_iou, 1.0);
  EXPECT_EQ(r.overall.count, 40u);
  EXPECT_EQ(r.overall.missing, 0u);
}

TEST(Evaluate, TwoSampleWorkedExample) {
  const std::vector<GroundingSample> truth = {
      fixture::make_sample("i1", "a", "ship", BBox(0, 0, 2, 2)),
      fixture::make_sample("i1", "b", "ship", BBox(0, 0, 2, 2))};
  const std::vector<PredictionRecord> preds = {{truth[0].sample_id, BBox(1, 1, 3, 3), {}},
                                               {truth[1].sample_id, BBox(0, 0, 2, 2), {}}};
  const auto r = evaluate_predictions(preds, truth);
  EXPECT_NEAR(r.overall.mean_iou, 4.0 / 7.0, 1e-12);
  EXPECT_NEAR(r.overall.cum_iou, 5.0 / 11.0, 1e-12);
  EXPECT_EQ(r.overall.sum_intersection, 5.0);
  EXPECT_EQ(r.overall.sum_union, 11.0);
  EXPECT_EQ(r.overall.precision_at.at(0.5), 0.5);
}

TEST(Evaluate, MissingPredictionCountsAsZero) {
  const std::vector<GroundingSample> truth = {
      fixture::make_sample("i1", "a", "ship", BBox(0, 0, 2, 2)),
      fixture::make_sample("i1", "b", "ship", BBox(0, 0, 3, 3))};
  const auto r = evaluate_predictions({{truth[0].sample_id, BBox(0, 0, 2, 2), {}}}, truth);
  EXPECT_EQ(r.overall.missing, 1u);
  EXPECT_EQ(r.overall.count, 2u);
  EXPECT_EQ(r.overall.mean_iou, 0.5);
  EXPECT_EQ(r.overall.cum_iou, 4.0 / 13.0);
}

TEST(Evaluate, ThresholdIsInclusive) {
  const std::vector<GroundingSample> truth = {fixture::make_sample("i", "a", "ship", BBox(0, 0, 2, 1))};
  const auto r = evaluate_predictions({{truth[0].sample_id, BBox(0, 0, 1, 1), {}}}, truth);
  EXPECT_EQ(r.overall.precision_at.at(0.5), 1.0);
  EXPECT_EQ(r.overall.precision_at.at(0.6), 0.0);
}

TEST(Evaluate, Errors) {
  const auto truth = fixture::make_samples(2, 1);
  auto preds = perfect(truth);
  preds.push_back(preds.front());
  EXPECT_THROW(evaluate_predictions(preds, truth), InvalidInput);
  EXPECT_THROW(evaluate_predictions({{"unknown", BBox(0, 0, 1, 1), {}}}, truth), InvalidInput);
  EXPECT_THROW(evaluate_predictions(perfect(truth), truth, {0.0}), InvalidInput);
  EXPECT_THROW(evaluate_predictions(perfect(truth), truth, {1.5}), InvalidInput);
}

TEST(Evaluate, CustomThresholds) {
  const auto truth = fixture::make_samples(3, 1);
  const auto r = evaluate_predictions(perfect(truth), truth, {0.25, 0.75});
  EXPECT_EQ(r.overall.precision_at.size(), 2u);
  EXPECT_EQ(r.overall.precision_at.at(0.25), 1.0);
}

class EvaluationProperty : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(EvaluationProperty, OracleMonotonePermutation) {
  Rng rng(GetParam());
  const auto truth = fixture::make_samples(60, 3, GetParam());
  const auto preds = noisy(truth, rng);
  std::vector<double> taus;
  for (int i = 1; i <= 19; ++i) taus.push_back(i / 20.0);
  const auto r = evaluate_predictions(preds, truth, taus);

  // Brute-force oracle in sample_id order.
  std::map<std::string, const GroundingSample*> by_id;
  for (const auto& s : truth) by_id[s.sample_id] = &s;
  std::map<std::string, BBox> pred_of;
  for (const auto& p : preds) pred_of.emplace(p.sample_id, p.bbox);
  double sum_ratio = 0, sum_i = 0, sum_u = 0;
  std::map<double, int> hits;
  for (const auto& [id, s] : by_id) {
    double inter = 0, uni = s->bbox.area();
    if (const auto it = pred_of.find(id); it != pred_of.end()) {
      const auto& a = it->second;
      const auto& b = s->bbox;
      const double w = std::max(0.0, std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min()));
      const double h = std::max(0.0, std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min()));
      inter = w * h;
      uni = a.area() + b.area() - inter;
    }
    sum_ratio += inter / uni;
    sum_i += inter;
    sum_u += uni;
    for (double t : taus) hits[t] += (inter / uni >= t);
  }
  const double m = static_cast<double>(truth.size());
  EXPECT_EQ(r.overall.mean_iou, sum_ratio / m);
  EXPECT_EQ(r.overall.cum_iou, sum_i / sum_u);
  for (double t : taus) EXPECT_EQ(r.overall.precision_at.at(t), hits[t] / m) << t;

  double prev = 2.0;
  for (const auto& [t, p] : r.overall.precision_at) {
    EXPECT_LE(p, prev);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    prev = p;
  }

  auto p2 = preds;
  auto t2 = truth;
  seeded_shuffle(p2, rng);
  seeded_shuffle(t2, rng);
  EXPECT_EQ(evaluate_predictions(p2, t2, taus), r);

  std::size_t per_cat = 0;
  for (const auto& [c, s] : r.per_category) per_cat += s.count;
  EXPECT_EQ(per_cat, truth.size());
}

INSTANTIATE_TEST_SUITE_P(Seeds, EvaluationProperty, ::testing::Range<std::uint64_t>(1, 9));

TEST(Evaluate, EqualUnionsGiveEqualMeans) {
  // Same-size boxes shifted by whole pixels inside the truth's row: U varies,
  // so use identical-area predictions that always overlap to a fixed union.
  std::vector<GroundingSample> truth;
  std::vector<PredictionRecord> preds;
  Rng rng(3);
  for (int i = 0; i < 30; ++i) {
    const int k = rand_int(rng, 0, 10);
    truth.push_back(fixture::make_sample("i" + std::to_string(i), "o", "ship", BBox(0, 0, 10, 10)));
    // Prediction inside the truth box: U = 100 always.
    preds.push_back({truth.back().sample_id, BBox(0, 0, 10, 10 - k * 0.5), {}});
  }
  const auto r = evaluate_predictions(preds, truth);
  EXPECT_NEAR(r.overall.mean_iou, r.overall.cum_iou, 1e-12);
}

TEST(Predictions, JsonlRoundTripAndErrors) {
  fixture::TempDir dir;
  const std::vector<PredictionRecord> preds = {{"a", BBox(1, 2, 3, 4), 0.5}, {"b", BBox(0, 0, 9, 9), {}}};
  write_predictions_jsonl(dir / "p.jsonl", preds);
  const auto back = load_predictions_jsonl(dir / "p.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].bbox, preds[0].bbox);
  EXPECT_EQ(back[0].score, 0.5);
  EXPECT_EQ(back[1].score, std::nullopt);
  json::write_file(dir / "bad.jsonl", "{\"sample_id\":\"a\",\"bbox\":[1,2,3,4]}\n{\"sample_id\":\"b\",\"bbox\":[3,2,1,4]}\n");
  try {
    load_predictions_jsonl(dir / "bad.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(EvalReport, Files) {
  const std::vector<GroundingSample> truth = {
      fixture::make_sample("i1", "a", "ship", BBox(0, 0, 2, 2)),
      fixture::make_sample("i1", "b", "vehicle", BBox(0, 0, 2, 2))};
  const std::vector<PredictionRecord> preds = {{truth[0].sample_id, BBox(1, 1, 3, 3), {}},
                                               {truth[1].sample_id, BBox(0, 0, 2, 2), {}}};
  const auto r = evaluate_predictions(preds, truth);
  fixture::TempDir dir;
  write_eval_report(r, dir.path());
  const auto csv = json::read_file(dir / "per_category.csv");
  EXPECT_NE(csv.find("ship,"), std::string::npos);
  EXPECT_NE(csv.find("vehicle,"), std::string::npos);
  EXPECT_NE(csv.find("all,"), std::string::npos);
  const auto j = json::Json::parse(json::read_file(dir / "report.json"));
  EXPECT_EQ(j, json::Json::parse(eval_report_to_json(r)));
}
