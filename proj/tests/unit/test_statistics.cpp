#include <gtest/gtest.h>

#include <cctype>

#include "refexp/error.hpp"
#include "refexp/serialization.hpp"
#include "refexp/statistics.hpp"
#include "synthetic.hpp"

using namespace refexp;
using fixture::SceneBuilder;

namespace {

// Brute-force tokenizer: whitespace split, outer punctuation stripped, lower-cased.
std::vector<std::string> brute_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    std::size_t b = 0, e = cur.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(cur[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(cur[e - 1]))) --e;
    if (e > b) {
      std::string t = cur.substr(b, e - b);
      for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back(t);
    }
    cur.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) flush();
    else cur += c;
  }
  flush();
  return out;
}

GroundingSample sample_for(const Scene& scene, const std::string& object_id) {
  const auto* o = scene.find(object_id);
  auto s = fixture::make_sample(scene.image.image_id, object_id, o->category, o->bbox);
  s.expression.fills.subject.abs_location.reset();
  s.expression.text = render(s.expression.fills, TemplateKind::phrase);
  return s;
}

}  // namespace

TEST(Statistics, LengthExample) {
  SceneBuilder b;
  b.add("a", "ship").add("b", "ship").add("c", "ship");
  std::vector<GroundingSample> samples;
  const std::vector<std::string> texts = {
      "The big ship", "The ship is on the left of", "one two three four five six seven eight nine ten eleven"};
  for (int i = 0; i < 3; ++i) {
    samples.push_back(sample_for(b.scene, std::string(1, static_cast<char>('a' + i))));
    samples.back().edited_text = texts[i];
  }
  const auto r = compute_statistics(samples, {b.scene});
  EXPECT_EQ(r.length_stats.mean, 7.0);
  EXPECT_EQ(r.length_stats.min, 3u);
  EXPECT_EQ(r.length_stats.max, 11u);
  EXPECT_EQ(r.length_stats.histogram, (std::map<std::size_t, std::size_t>{{3, 1}, {7, 1}, {11, 1}}));
}

TEST(Statistics, CatPlusExample) {
  SceneBuilder b;
  b.add("a", "airport").add("d", "dam").add("v1", "vehicle").add("v2", "vehicle");
  std::vector<GroundingSample> samples;
  for (const auto* id : {"a", "d", "v1", "v2"}) samples.push_back(sample_for(b.scene, id));
  const auto r = compute_statistics(samples, {b.scene});
  EXPECT_EQ(r.shares.cat, 1.0);
  EXPECT_EQ(r.shares.cat_plus, 0.5);
  EXPECT_EQ(r.shares.att, 0.0);
  EXPECT_EQ(r.shares.rel, 0.0);
  EXPECT_EQ(r.category_freq.at("vehicle"), 2u);
  EXPECT_EQ(r.image_count, 1u);
}

TEST(Statistics, MissingSceneIsError) {
  SceneBuilder b;
  b.add("a", "airport");
  auto s = sample_for(b.scene, "a");
  s.image_id = "other";
  EXPECT_THROW(compute_statistics({s}, {b.scene}), InvalidInput);
}

TEST(Statistics, EmptyDataset) {
  const auto r = compute_statistics({}, {});
  EXPECT_EQ(r.pair_count, 0u);
  EXPECT_EQ(r.length_stats.mean, 0.0);
}

TEST(Histogram, Bins) {
  Histogram h{32.0, {}};
  for (double v : {0.0, 31.9, 32.0, 100.0}) h.add(v);
  EXPECT_EQ(h.bins, (std::map<long, std::size_t>{{0, 2}, {1, 1}, {3, 1}}));
  EXPECT_EQ(h.mass(), 4u);
}

TEST(AttributeCount, PhraseAndSentence) {
  ExpressionFills f;
  f.subject.category = "ship";
  EXPECT_EQ(attribute_count(f), 1);
  f.subject.color = Color::red;
  f.subject.abs_location = Location::top;
  EXPECT_EQ(attribute_count(f), 3);
  f.relation = Relation::left_of;
  f.related = ObjectRef{};
  f.related->category = "bridge";
  f.related->size_word = SizeWord::large;
  EXPECT_EQ(attribute_count(f), 6);
}

class StatisticsProperty : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(StatisticsProperty, BruteForceAndInvariants) {
  const auto scenes = fixture::random_scenes(GetParam(), 50);
  auto samples = build_dataset(scenes, GetParam());
  ASSERT_FALSE(samples.empty());
  // A few reviewer edits with punctuation and mixed case.
  for (std::size_t i = 0; i < samples.size(); i += 9) samples[i].edited_text = "The  RED, ship... is here!";
  const auto r = compute_statistics(samples, scenes);

  std::size_t total = 0, mn = SIZE_MAX, mx = 0;
  std::map<std::string, std::size_t> words;
  for (const auto& s : samples) {
    const auto t = brute_tokens(s.text());
    EXPECT_EQ(tokenize(s.text()), t);
    total += t.size();
    mn = std::min(mn, t.size());
    mx = std::max(mx, t.size());
    for (const auto& w : t) ++words[w];
  }
  EXPECT_EQ(r.length_stats.mean, static_cast<double>(total) / static_cast<double>(samples.size()));
  EXPECT_EQ(r.length_stats.min, mn);
  EXPECT_EQ(r.length_stats.max, mx);
  EXPECT_EQ(r.word_freq, words);
  EXPECT_EQ(r.vocabulary_size, words.size());

  const auto n = r.pair_count;
  EXPECT_EQ(n, samples.size());
  std::size_t hist_mass = 0, len_mass = 0, cat_mass = 0;
  for (const auto& [k, v] : r.attrs_per_expression_hist) hist_mass += v;
  for (const auto& [k, v] : r.length_stats.histogram) len_mass += v;
  for (const auto& [k, v] : r.category_freq) cat_mass += v;
  EXPECT_EQ(hist_mass, n);
  EXPECT_EQ(len_mass, n);
  EXPECT_EQ(cat_mass, n);
  EXPECT_EQ(r.box_stats.width.mass(), n);
  EXPECT_EQ(r.box_stats.height.mass(), n);
  EXPECT_EQ(r.box_stats.area_ratio.mass(), n);

  const auto& s = r.shares;
  for (double v : {s.cat, s.cat_plus, s.att, s.att_plus, s.rel, s.rel_plus}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_LE(s.cat_plus, s.cat);
  EXPECT_LE(s.att_plus, s.att);
  EXPECT_LE(s.rel_plus, s.rel);
  // Every generated sentence resolves uniquely.
  EXPECT_EQ(s.rel_plus, s.rel);

  fixture::TempDir dir;
  export_dataset(samples, dir / "d.jsonl", DatasetFormat::jsonl);
  EXPECT_EQ(compute_statistics(load_dataset_jsonl(dir / "d.jsonl"), scenes), r);
}

INSTANTIATE_TEST_SUITE_P(Seeds, StatisticsProperty, ::testing::Values(1u, 2u, 3u, 4u, 5u));

TEST(StatsReport, Files) {
  const auto scenes = fixture::random_scenes(3, 10);
  const auto r = compute_statistics(build_dataset(scenes, 1), scenes);
  fixture::TempDir dir;
  write_stats_report(r, dir.path());
  for (const char* f : {"report.json", "category_freq.csv", "attrs_per_expression.csv",
                        "attribute_usage.csv", "shares.csv", "length_hist.csv", "box_width.csv",
                        "box_height.csv", "box_area_ratio.csv", "word_freq.csv"}) {
    EXPECT_TRUE(std::filesystem::is_regular_file(dir / f)) << f;
  }
  const auto j = json::Json::parse(json::read_file(dir / "report.json"));
  EXPECT_EQ(j["pair_count"], r.pair_count);
  EXPECT_EQ(j, json::Json::parse(stats_report_to_json(r)));
  const auto shares = json::read_file(dir / "shares.csv");
  EXPECT_NE(shares.find("cat+,"), std::string::npos);
}
