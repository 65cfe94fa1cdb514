#include "refexp/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "refexp/error.hpp"
#include "refexp/seed.hpp"
#include "refexp/serialization.hpp"

namespace refexp {

namespace fs = std::filesystem;

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

std::string_view to_string(SampleStatus s) noexcept {
  switch (s) {
    case SampleStatus::pending: return "pending";
    case SampleStatus::accepted: return "accepted";
    case SampleStatus::edited: return "edited";
    case SampleStatus::rejected: return "rejected";
  }
  return "pending";
}

std::optional<Split> split_from_string(std::string_view s) noexcept {
  for (auto v : {Split::train, Split::val, Split::test}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<SampleStatus> sample_status_from_string(std::string_view s) noexcept {
  for (auto v : {SampleStatus::pending, SampleStatus::accepted, SampleStatus::edited,
                 SampleStatus::rejected}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<DatasetFormat> dataset_format_from_string(std::string_view s) noexcept {
  if (s == "jsonl") return DatasetFormat::jsonl;
  if (s == "voc_xml") return DatasetFormat::voc_xml;
  return std::nullopt;
}

std::string make_sample_id(std::string_view image_id, std::string_view object_id) {
  std::string key(image_id);
  key.push_back('\x1f');
  key.append(object_id);
  return to_hex(fnv1a64(key));
}

// ---------------------------------------------------------------------------
// Build

namespace {

BuildOutput build_scene_samples(const Scene& scene, std::uint64_t seed) {
  BuildOutput out;
  const std::uint64_t scene_seed = derive_seed(seed, scene.image.image_id);
  for (const auto& obj : scene.objects) {
    auto result = generate_expression(obj.object_id, scene, derive_seed(scene_seed, obj.object_id));
    if (auto* discarded = std::get_if<Discarded>(&result)) {
      out.discarded.push_back({scene.image.image_id, obj.object_id, discarded->reason});
      continue;
    }
    out.samples.push_back(GroundingSample{
        .sample_id = make_sample_id(scene.image.image_id, obj.object_id),
        .image_id = scene.image.image_id,
        .object_id = obj.object_id,
        .category = obj.category,
        .image_width = scene.image.width,
        .image_height = scene.image.height,
        .bbox = obj.bbox,
        .expression = std::move(std::get<Expression>(result)),
        .split = std::nullopt,
        .status = SampleStatus::pending,
        .edited_text = std::nullopt});
  }
  return out;
}

}  // namespace

BuildOutput build_dataset_detailed(const std::vector<Scene>& scenes, std::uint64_t seed,
                                   unsigned threads) {
  std::vector<std::size_t> order(scenes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scenes[a].image.image_id < scenes[b].image.image_id;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (scenes[order[i]].image.image_id == scenes[order[i - 1]].image.image_id) {
      throw InvalidInput("build_dataset: duplicate scene for image '" +
                         scenes[order[i]].image.image_id + "'");
    }
  }

  std::vector<BuildOutput> parts(scenes.size());
  std::vector<std::exception_ptr> errors(scenes.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < order.size(); i = next++) {
      try {
        parts[i] = build_scene_samples(scenes[order[i]], seed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(scenes.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  BuildOutput out;
  std::set<std::string> ids;
  for (auto& part : parts) {
    for (auto& s : part.samples) {
      if (!ids.insert(s.sample_id).second) {
        throw InvalidInput("build_dataset: sample id collision for '" + s.image_id + "/" +
                           s.object_id + "'");
      }
      out.samples.push_back(std::move(s));
    }
    std::move(part.discarded.begin(), part.discarded.end(), std::back_inserter(out.discarded));
  }
  return out;
}

std::vector<GroundingSample> build_dataset(const std::vector<Scene>& scenes, std::uint64_t seed,
                                           unsigned threads) {
  return build_dataset_detailed(scenes, seed, threads).samples;
}

// ---------------------------------------------------------------------------
// Split

std::vector<GroundingSample> split_dataset(std::vector<GroundingSample> samples,
                                           const SplitFractions& fractions, std::uint64_t seed) {
  const auto f = fractions.as_array();
  if (std::any_of(f.begin(), f.end(), [](double v) { return !(v >= 0.0); }) ||
      std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
    throw InvalidInput("split_dataset: fractions must be non-negative and sum to 1");
  }
  std::map<std::string, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < samples.size(); ++i) by_image[samples[i].image_id].push_back(i);
  if (by_image.size() < f.size()) {
    throw InvalidInput("split_dataset: " + std::to_string(by_image.size()) +
                       " images cannot fill 3 splits");
  }

  std::vector<const std::vector<std::size_t>*> images;
  for (const auto& [id, members] : by_image) images.push_back(&members);
  Rng rng(derive_seed(seed, "split"));
  seeded_shuffle(images, rng);

  const double total = static_cast<double>(samples.size());
  std::array<double, 3> assigned{};
  constexpr std::array kSplits = {Split::train, Split::val, Split::test};
  for (const auto* members : images) {
    std::size_t best = 0;
    double best_deficit = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < kSplits.size(); ++s) {
      const double deficit = f[s] * total - assigned[s];
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = s;
      }
    }
    assigned[best] += static_cast<double>(members->size());
    for (std::size_t idx : *members) samples[idx].split = kSplits[best];
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Export / load

namespace {

std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void export_voc(const std::vector<GroundingSample>& samples, const fs::path& dir) {
  namespace pt = boost::property_tree;
  std::map<std::string, std::vector<const GroundingSample*>> by_image;
  for (const auto& s : samples) by_image[s.image_id].push_back(&s);

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

  for (auto& [image_id, members] : by_image) {
    std::sort(members.begin(), members.end(),
              [](const auto* a, const auto* b) { return a->object_id < b->object_id; });
    pt::ptree annotation;
    annotation.put("filename", image_id);
    annotation.put("size.width", members.front()->image_width);
    annotation.put("size.height", members.front()->image_height);
    annotation.put("size.depth", 3);
    for (const auto* s : members) {
      pt::ptree object;
      object.put("name", s->category);
      object.put("bndbox.xmin", format_number(s->bbox.x_min()));
      object.put("bndbox.ymin", format_number(s->bbox.y_min()));
      object.put("bndbox.xmax", format_number(s->bbox.x_max()));
      object.put("bndbox.ymax", format_number(s->bbox.y_max()));
      object.put("description", s->text());
      annotation.add_child("object", object);
    }
    pt::ptree doc;
    doc.add_child("annotation", annotation);
    std::ostringstream os;
    pt::write_xml(os, doc, pt::xml_writer_make_settings<std::string>(' ', 2));
    json::write_file(dir / (image_id + ".xml"), os.str());
  }
}

}  // namespace

void export_dataset(const std::vector<GroundingSample>& samples, const fs::path& path,
                    DatasetFormat format) {
  if (format == DatasetFormat::voc_xml) {
    export_voc(samples, path);
    return;
  }
  std::string out;
  for (const auto& s : samples) out += json::sample_to_json(s).dump() + "\n";
  json::write_file(path, out);
}

std::vector<GroundingSample> load_dataset_jsonl(const fs::path& path) {
  const std::string text = json::read_file(path);
  std::vector<GroundingSample> samples;
  std::set<std::string> ids;
  json::for_each_jsonl_line(text, path.string(), [&](const json::Json& j, std::size_t line) {
    auto s = json::sample_from_json(j);
    if (!ids.insert(s.sample_id).second) {
      throw ParseError(path.string(), line, "duplicate sample_id '" + s.sample_id + "'");
    }
    samples.push_back(std::move(s));
  });
  return samples;
}

void write_discarded_jsonl(const fs::path& path, const std::vector<DiscardedObject>& discarded) {
  std::string out;
  for (const auto& d : discarded) {
    json::Json j;
    j["image_id"] = d.image_id;
    j["object_id"] = d.object_id;
    j["reason"] = d.reason;
    out += j.dump() + "\n";
  }
  json::write_file(path, out);
}

void write_scenes_jsonl(const fs::path& path, const std::vector<Scene>& scenes) {
  std::string out;
  for (const auto& scene : scenes) out += json::scene_to_json(scene).dump() + "\n";
  json::write_file(path, out);
}

std::vector<Scene> load_scenes_jsonl(const fs::path& path) {
  const std::string text = json::read_file(path);
  std::vector<Scene> scenes;
  json::for_each_jsonl_line(text, path.string(), [&](const json::Json& j, std::size_t) {
    scenes.push_back(json::scene_from_json(j));
  });
  return scenes;
}

}  // namespace refexp
