#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>

#include "refexp/review.hpp"
#include "refexp/serialization.hpp"
#include "synthetic.hpp"

using namespace refexp;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(REFEXP_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (const std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

json::Json last_json_line(const std::string& out) {
  auto end = out.find_last_not_of('\n');
  auto begin = out.rfind('\n', end);
  return json::Json::parse(out.substr(begin == std::string::npos ? 0 : begin + 1, end + 1));
}

void write_voc_corpus(const fs::path& dir, int images, std::uint64_t seed) {
  Rng rng(seed);
  const auto& cats = fixture::synthetic_categories();
  for (int i = 0; i < images; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "%05d", i);
    std::string xml = std::string("<annotation><filename>") + name +
                      ".jpg</filename><size><width>800</width><height>800</height><depth>3</depth></size>";
    const int n = fixture::rand_int(rng, 2, 8);
    for (int k = 0; k < n; ++k) {
      const auto b = fixture::random_grid_box(rng, 800);
      xml += "<object><name>" + cats[fixture::rand_int(rng, 0, 3)] + "</name><bndbox><xmin>" +
             std::to_string(static_cast<int>(b.x_min())) + "</xmin><ymin>" +
             std::to_string(static_cast<int>(b.y_min())) + "</ymin><xmax>" +
             std::to_string(static_cast<int>(b.x_max())) + "</xmax><ymax>" +
             std::to_string(static_cast<int>(b.y_max())) + "</ymax></bndbox></object>";
    }
    json::write_file(dir / (std::string(name) + ".xml"), xml + "</annotation>\n");
  }
}

class CliFixture : public ::testing::Test {
 protected:
  void SetUp() override { write_voc_corpus(dir_ / "voc", 15, 3); }
  std::string p(const std::string& rel) const { return (dir_ / rel).string(); }
  fixture::TempDir dir_;
};

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("generate --help").code, 0);
  const auto bad = run("generate --bogus");
  EXPECT_EQ(bad.code, 2);
  EXPECT_EQ(last_json_line(bad.out)["status"], "usage_error");
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("ingest --input x --out y --format yaml").code, 2);
}

TEST(Cli, MissingInputIsRuntimeError) {
  fixture::TempDir dir;
  const auto r = run("ingest --input " + (dir / "absent").string() + " --out " + (dir / "o").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(last_json_line(r.out)["status"], "error");
}

TEST_F(CliFixture, GenerateIsByteIdentical) {
  const auto a = run("generate --input " + p("voc") + " --out " + p("a") + " --seed 11");
  const auto b = run("generate --input " + p("voc") + " --out " + p("b") + " --seed 11 --threads 1");
  ASSERT_EQ(a.code, 0) << a.out;
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_EQ(last_json_line(a.out)["status"], "ok");
  for (const char* f : {"dataset.jsonl", "dropped.jsonl", "issues.jsonl", "discarded.jsonl", "scenes.jsonl"}) {
    EXPECT_EQ(json::read_file(dir_ / "a" / f), json::read_file(dir_ / "b" / f)) << f;
  }
  const auto c = run("generate --input " + p("voc") + " --out " + p("c") + " --seed 12");
  ASSERT_EQ(c.code, 0);
  EXPECT_FALSE(json::read_file(dir_ / "a" / "dataset.jsonl").empty());
}

TEST_F(CliFixture, IngestWritesAnnotations) {
  const auto r = run("ingest --input " + p("voc") + " --out " + p("ing"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(last_json_line(r.out)["images"], 15);
  EXPECT_TRUE(fs::is_regular_file(dir_ / "ing" / "annotations.jsonl"));
  EXPECT_TRUE(fs::is_regular_file(dir_ / "ing" / "issues.jsonl"));
}

TEST_F(CliFixture, PipelineStatsSplitEvaluateExport) {
  ASSERT_EQ(run("generate --input " + p("voc") + " --out " + p("g") + " --seed 5").code, 0);
  const auto dataset = load_dataset_jsonl(dir_ / "g" / "dataset.jsonl");
  ASSERT_FALSE(dataset.empty());

  const auto st = run("stats --input " + p("g/dataset.jsonl") + " --scenes " + p("g/scenes.jsonl") + " --out " + p("st"));
  ASSERT_EQ(st.code, 0);
  EXPECT_EQ(last_json_line(st.out)["pairs"], dataset.size());
  EXPECT_TRUE(fs::is_regular_file(dir_ / "st" / "report.json"));

  const auto sp = run("split --input " + p("g/dataset.jsonl") + " --out " + p("split.jsonl") + " --seed 2");
  ASSERT_EQ(sp.code, 0);
  for (const auto& s : load_dataset_jsonl(dir_ / "split.jsonl")) EXPECT_TRUE(s.split.has_value());

  std::ofstream preds(dir_ / "preds.jsonl");
  for (const auto& s : dataset) {
    preds << json::Json{{"sample_id", s.sample_id}, {"bbox", json::bbox_to_json(s.bbox)}}.dump() << "\n";
  }
  preds.close();
  const auto ev = run("evaluate --input " + p("preds.jsonl") + " --truth " + p("g/dataset.jsonl") + " --out " + p("ev"));
  ASSERT_EQ(ev.code, 0) << ev.out;
  const auto report = json::Json::parse(json::read_file(dir_ / "ev" / "report.json"));
  EXPECT_DOUBLE_EQ(report["overall"]["mean_iou"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(report["overall"]["cum_iou"].get<double>(), 1.0);

  // Decisions recorded offline in the log format, then exported by replay.
  {
    std::ofstream log(dir_ / "log.jsonl");
    const LogEntry entry{1, {dataset[0].sample_id, Verdict::accept, std::nullopt, "ann", 5}, "", true, false};
    log << log_entry_to_json(entry).dump() << "\n";
  }
  const auto ex = run("export --input " + p("g/dataset.jsonl") + " --log " + p("log.jsonl") + " --out " + p("verified.jsonl"));
  ASSERT_EQ(ex.code, 0) << ex.out;
  const auto verified = load_dataset_jsonl(dir_ / "verified.jsonl");
  ASSERT_EQ(verified.size(), 1u);
  EXPECT_EQ(verified[0].sample_id, dataset[0].sample_id);
}
