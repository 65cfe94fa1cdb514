// refexp: command-line front end for the dataset pipeline.

#include <CLI11.hpp>

#include <opencv2/imgcodecs.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

#include "refexp/annotation.hpp"
#include "refexp/attributes.hpp"
#include "refexp/dataset.hpp"
#include "refexp/error.hpp"
#include "refexp/evaluation.hpp"
#include "refexp/review.hpp"
#include "refexp/review_http.hpp"
#include "refexp/sampling.hpp"
#include "refexp/scene.hpp"
#include "refexp/serialization.hpp"
#include "refexp/statistics.hpp"

namespace fs = std::filesystem;
using refexp::json::Json;

namespace {

struct Options {
  std::string config;
  std::string input;
  std::string out;
  std::string format;
  std::string categories = "any";
  std::uint64_t seed = 0;
  double min_area_ratio = refexp::SamplingConfig{}.min_area_ratio;
  double max_area_ratio = refexp::SamplingConfig{}.max_area_ratio;
  int cap = refexp::SamplingConfig{}.max_per_category;
  std::string images;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool strict = false;
  std::string scenes;
  std::string fractions = "0.4,0.1,0.5";
  std::string thresholds;
  std::string truth;
  std::string log;
  std::string host = "127.0.0.1";
  int port = 8080;
  double lease_ttl_s = 300.0;
  std::string ui_dir;
};

/// Validation issues found in otherwise readable input; exit code 1.
struct ValidationFailure : refexp::Error {
  using Error::Error;
};

std::vector<double> parse_number_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw refexp::InvalidInput(std::string("bad number in ") + what + ": '" + item + "'");
    }
  }
  if (out.empty()) throw refexp::InvalidInput(std::string(what) + " is empty");
  return out;
}

refexp::AnnotationFormat annotation_format(const std::string& name) {
  if (name.empty()) return refexp::AnnotationFormat::voc_xml;
  const auto f = refexp::annotation_format_from_string(name);
  if (!f) throw refexp::InvalidInput("unknown annotation format '" + name + "'");
  return *f;
}

refexp::DatasetFormat dataset_format(const std::string& name) {
  if (name.empty()) return refexp::DatasetFormat::jsonl;
  const auto f = refexp::dataset_format_from_string(name);
  if (!f) throw refexp::InvalidInput("unknown dataset format '" + name + "'");
  return *f;
}

refexp::LoadOptions load_options(const Options& o) {
  refexp::LoadOptions lo;
  if (o.categories == "dior") {
    lo.categories = refexp::dior_categories();
  } else if (o.categories != "any") {
    std::stringstream ss(o.categories);
    std::string item;
    while (std::getline(ss, item, ',')) lo.categories.push_back(refexp::normalize_category(item));
  }
  return lo;
}

refexp::AttributeConfig attribute_config(const Options& o) {
  std::string path = o.config;
  if (path.empty()) {
    if (const char* env = std::getenv("REFEXP_CONFIG"); env && *env) path = env;
  }
  return path.empty() ? refexp::AttributeConfig{} : refexp::load_attribute_config(path);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw refexp::IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void check_issues(const Options& o, std::size_t issues) {
  if (o.strict && issues > 0) {
    throw ValidationFailure(std::to_string(issues) + " validation issue(s) in " + o.input);
  }
}

std::optional<fs::path> find_image(const fs::path& dir, const refexp::ImageRecord& rec) {
  std::error_code ec;
  if (!rec.file_path.empty()) {
    const fs::path p = fs::path(rec.file_path).is_absolute() ? fs::path(rec.file_path)
                                                              : dir / rec.file_path;
    if (fs::is_regular_file(p, ec)) return p;
  }
  for (const char* ext : {".jpg", ".jpeg", ".png", ".tif", ".tiff", ".bmp"}) {
    const fs::path p = dir / (rec.image_id + ext);
    if (fs::is_regular_file(p, ec)) return p;
  }
  return std::nullopt;
}

Json run_ingest(const Options& o) {
  const auto set = refexp::load_annotations(o.input, annotation_format(o.format), load_options(o));
  const fs::path out(o.out);
  ensure_dir(out);
  refexp::write_annotations_jsonl(out / "annotations.jsonl", set.images, set.objects);
  refexp::write_issues_jsonl(out / "issues.jsonl", set.issues);
  check_issues(o, set.issues.size());
  return {{"images", set.images.size()}, {"objects", set.objects.size()},
          {"issues", set.issues.size()}};
}

Json run_generate(const Options& o) {
  const auto cfg = attribute_config(o);
  const auto set = refexp::load_annotations(o.input, annotation_format(o.format), load_options(o));

  refexp::SamplingConfig sc;
  sc.min_area_ratio = o.min_area_ratio;
  sc.max_area_ratio = o.max_area_ratio;
  sc.max_per_category = o.cap;
  sc.seed = o.seed;
  const auto index = refexp::index_images(set.images);
  const auto sampled = refexp::sample_boxes(set.objects, index, sc);

  std::map<std::string, std::vector<refexp::ObjectInstance>> by_image;
  for (const auto& obj : sampled.kept) by_image[obj.image_id].push_back(obj);
  std::vector<const refexp::ImageRecord*> records;
  for (const auto& [id, objs] : by_image) records.push_back(&index.at(id));

  // Scenes are built in parallel; each slot is written by exactly one worker.
  std::vector<std::optional<refexp::Scene>> slots(records.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> with_pixels{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    const unsigned n = std::min<std::size_t>(o.threads, std::max<std::size_t>(1, records.size()));
    for (unsigned t = 0; t < n; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < records.size(); i = next++) {
          try {
            const auto& rec = *records[i];
            cv::Mat pixels;
            if (!o.images.empty()) {
              if (const auto file = find_image(o.images, rec)) {
                pixels = cv::imread(file->string(), cv::IMREAD_COLOR);
                if (pixels.empty()) throw refexp::IoError("cannot decode image " + file->string());
                ++with_pixels;
              }
            }
            slots[i] = refexp::build_scene(rec, by_image.at(rec.image_id), pixels, cfg);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = records.size();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<refexp::Scene> scenes;
  scenes.reserve(slots.size());
  for (auto& s : slots) scenes.push_back(std::move(*s));

  const auto built = refexp::build_dataset_detailed(scenes, o.seed, o.threads);

  const fs::path out(o.out);
  ensure_dir(out);
  refexp::export_dataset(built.samples, out / "dataset.jsonl", refexp::DatasetFormat::jsonl);
  refexp::write_drop_report_jsonl(out / "dropped.jsonl", sampled.dropped);
  refexp::write_issues_jsonl(out / "issues.jsonl", set.issues);
  refexp::write_discarded_jsonl(out / "discarded.jsonl", built.discarded);
  refexp::write_scenes_jsonl(out / "scenes.jsonl", scenes);
  check_issues(o, set.issues.size());

  return {{"images", set.images.size()},
          {"objects", set.objects.size()},
          {"issues", set.issues.size()},
          {"kept", sampled.kept.size()},
          {"dropped", sampled.dropped.size()},
          {"scenes", scenes.size()},
          {"images_with_pixels", with_pixels.load()},
          {"pairs", built.samples.size()},
          {"discarded", built.discarded.size()}};
}

Json run_stats(const Options& o) {
  const auto samples = refexp::load_dataset_jsonl(o.input);
  const auto scenes = refexp::load_scenes_jsonl(o.scenes);
  const auto report = refexp::compute_statistics(samples, scenes);
  refexp::write_stats_report(report, o.out);
  return {{"pairs", report.pair_count},
          {"images", report.image_count},
          {"vocabulary", report.vocabulary_size},
          {"mean_length", report.length_stats.mean},
          {"cat", report.shares.cat},
          {"cat_plus", report.shares.cat_plus},
          {"att", report.shares.att},
          {"att_plus", report.shares.att_plus},
          {"rel", report.shares.rel},
          {"rel_plus", report.shares.rel_plus}};
}

Json run_split(const Options& o) {
  const auto f = parse_number_list(o.fractions, "--fractions");
  if (f.size() != 3) throw refexp::InvalidInput("--fractions needs three values");
  auto samples = refexp::load_dataset_jsonl(o.input);
  samples = refexp::split_dataset(std::move(samples), {f[0], f[1], f[2]}, o.seed);
  refexp::export_dataset(samples, o.out, refexp::DatasetFormat::jsonl);
  std::map<std::string, std::size_t> counts{{"train", 0}, {"val", 0}, {"test", 0}};
  for (const auto& s : samples) ++counts[std::string(refexp::to_string(*s.split))];
  return {{"pairs", samples.size()},
          {"train", counts["train"]},
          {"val", counts["val"]},
          {"test", counts["test"]}};
}

Json run_evaluate(const Options& o) {
  const auto thresholds = o.thresholds.empty() ? refexp::kDefaultThresholds
                                               : parse_number_list(o.thresholds, "--thresholds");
  const auto predictions = refexp::load_predictions_jsonl(o.input);
  const auto truth = refexp::load_dataset_jsonl(o.truth);
  const auto report = refexp::evaluate_predictions(predictions, truth, thresholds);
  refexp::write_eval_report(report, o.out);
  Json precision = Json::object();
  for (const auto& [tau, value] : report.overall.precision_at) {
    std::ostringstream key;
    key << tau;
    precision[key.str()] = value;
  }
  return {{"samples", report.overall.count},
          {"missing", report.overall.missing},
          {"mean_iou", report.overall.mean_iou},
          {"cum_iou", report.overall.cum_iou},
          {"precision_at", precision}};
}

Json run_export(const Options& o) {
  auto samples = refexp::load_dataset_jsonl(o.input);
  const auto log = refexp::load_decision_log(o.log);
  samples = refexp::replay(std::move(samples), log);
  const auto progress = refexp::export_verified(samples, o.out, dataset_format(o.format));
  Json summary = refexp::progress_to_json(progress);
  summary["decisions"] = log.size();
  return summary;
}

Json run_serve(const Options& o, const std::string& command) {
  refexp::ReviewOptions ro;
  ro.lease_ttl_ms = static_cast<std::int64_t>(o.lease_ttl_s * 1000.0);
  ro.log_path = o.log;
  ro.snapshot_path = fs::path(o.log).string() + ".snapshot.json";
  refexp::ReviewService service(refexp::load_dataset_jsonl(o.input), std::move(ro));

  refexp::HttpOptions ho;
  ho.image_dir = o.images;
  ho.ui_dir = o.ui_dir;
  refexp::ReviewHttpServer server(service, ho);
  const int port = server.bind(o.host, o.port);

  // Signals are consumed by a dedicated thread so stop() runs outside a handler.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  std::jthread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });

  Json started{{"command", command}, {"status", "listening"}, {"host", o.host}, {"port", port},
               {"samples", service.samples().size()}};
  std::cout << started.dump() << std::endl;
  server.listen();
  if (waiter.joinable()) pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return refexp::progress_to_json(service.progress());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Referring-expression dataset toolkit"};
  app.require_subcommand(1);
  Options o;
  const CLI::IsMember kFormats({"voc_xml", "jsonl"});
  app.add_option("--config", o.config, "Attribute threshold config (overrides REFEXP_CONFIG)");

  const auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Random seed")->required();
  };

  auto* ingest = app.add_subcommand("ingest", "Parse annotations into canonical JSONL");
  ingest->add_option("--input", o.input, "Annotation file or directory")->required();
  ingest->add_option("--out", o.out, "Output directory")->required();
  ingest->add_option("--format", o.format, "voc_xml (default) or jsonl")->check(kFormats);
  ingest->add_option("--categories", o.categories, "dior, any, or a comma list")->capture_default_str();
  ingest->add_flag("--strict", o.strict, "Exit 1 when validation issues are found");

  auto* generate = app.add_subcommand("generate", "Sample boxes, extract attributes, generate expressions");
  generate->add_option("--input", o.input, "Annotation file or directory")->required();
  generate->add_option("--out", o.out, "Output directory")->required();
  generate->add_option("--format", o.format, "voc_xml (default) or jsonl")->check(kFormats);
  add_seed(generate);
  generate->add_option("--min-area-ratio", o.min_area_ratio)->capture_default_str();
  generate->add_option("--max-area-ratio", o.max_area_ratio)->capture_default_str();
  generate->add_option("--cap", o.cap, "Max kept objects per (image, category)")->capture_default_str();
  generate->add_option("--images", o.images, "Image directory for color and contour attributes");
  generate->add_option("--threads", o.threads)->check(CLI::PositiveNumber);
  generate->add_option("--categories", o.categories, "dior, any, or a comma list")->capture_default_str();
  generate->add_flag("--strict", o.strict, "Exit 1 when validation issues are found");

  auto* stats = app.add_subcommand("stats", "Dataset statistics report");
  stats->add_option("--input", o.input, "dataset.jsonl")->required();
  stats->add_option("--scenes", o.scenes, "scenes.jsonl")->required();
  stats->add_option("--out", o.out, "Output directory")->required();

  auto* split = app.add_subcommand("split", "Assign train/val/test splits by image");
  split->add_option("--input", o.input, "dataset.jsonl")->required();
  split->add_option("--out", o.out, "Output dataset.jsonl")->required();
  split->add_option("--fractions", o.fractions, "train,val,test")->capture_default_str();
  add_seed(split);

  auto* evaluate = app.add_subcommand("evaluate", "Score grounding predictions");
  evaluate->add_option("--input", o.input, "predictions.jsonl")->required();
  evaluate->add_option("--truth", o.truth, "dataset.jsonl")->required();
  evaluate->add_option("--out", o.out, "Output directory")->required();
  evaluate->add_option("--thresholds", o.thresholds, "Comma list of IoU thresholds");

  auto* serve = app.add_subcommand("serve", "Run the review service");
  serve->add_option("--input", o.input, "dataset.jsonl")->required();
  serve->add_option("--log", o.log, "Decision log (appended)")->required();
  serve->add_option("--host", o.host)->capture_default_str();
  serve->add_option("--port", o.port, "0 picks a free port")->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--lease-ttl", o.lease_ttl_s, "Seconds")->capture_default_str()->check(CLI::PositiveNumber);
  serve->add_option("--images", o.images, "Image directory");
  serve->add_option("--ui-dir", o.ui_dir, "Static files served at /");

  auto* exp = app.add_subcommand("export", "Replay decisions and export verified samples");
  exp->add_option("--input", o.input, "dataset.jsonl")->required();
  exp->add_option("--log", o.log, "Decision log")->required();
  exp->add_option("--out", o.out, "Output file (jsonl) or directory (voc_xml)")->required();
  exp->add_option("--format", o.format, "jsonl (default) or voc_xml")->check(kFormats);

  std::string command = "refexp";
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    std::cerr << app.help();
    std::cout << Json{{"command", command}, {"status", "usage_error"}, {"error", e.what()}}.dump()
              << std::endl;
    return 2;
  }
  command = app.get_subcommands().front()->get_name();

  try {
    Json result;
    if (command == "ingest") result = run_ingest(o);
    else if (command == "generate") result = run_generate(o);
    else if (command == "stats") result = run_stats(o);
    else if (command == "split") result = run_split(o);
    else if (command == "evaluate") result = run_evaluate(o);
    else if (command == "serve") result = run_serve(o, command);
    else result = run_export(o);
    Json summary{{"command", command}, {"status", "ok"}};
    summary.update(result);
    std::cout << summary.dump() << std::endl;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "refexp " << command << ": " << e.what() << "\n";
    std::cout << Json{{"command", command}, {"status", "error"}, {"error", e.what()}}.dump()
              << std::endl;
    return 1;
  }
}
