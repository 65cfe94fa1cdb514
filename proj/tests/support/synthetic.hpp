#pragma once

// Seeded generators and brute-force oracles shared by the test binaries.

#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "refexp/attributes.hpp"
#include "refexp/dataset.hpp"
#include "refexp/evaluation.hpp"
#include "refexp/expression.hpp"
#include "refexp/geometry.hpp"
#include "refexp/scene.hpp"
#include "refexp/seed.hpp"

namespace refexp::fixture {

inline int rand_int(Rng& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

/// Integer box with corners on a grid of `grid` x `grid`.
inline BBox random_grid_box(Rng& rng, int grid) {
  const int x0 = rand_int(rng, 0, grid - 1);
  const int y0 = rand_int(rng, 0, grid - 1);
  const int x1 = rand_int(rng, x0 + 1, grid);
  const int y1 = rand_int(rng, y0 + 1, grid);
  return BBox(x0, y0, x1, y1);
}

/// Pixel-count oracle: number of unit cells covered by both / either box.
struct RasterCounts {
  long long inter = 0;
  long long uni = 0;
  long long enclosing = 0;
};

inline RasterCounts rasterize(const BBox& a, const BBox& b, int grid) {
  RasterCounts c;
  int ex0 = grid, ey0 = grid, ex1 = 0, ey1 = 0;
  for (int y = 0; y < grid; ++y) {
    for (int x = 0; x < grid; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      const bool in_a = cx > a.x_min() && cx < a.x_max() && cy > a.y_min() && cy < a.y_max();
      const bool in_b = cx > b.x_min() && cx < b.x_max() && cy > b.y_min() && cy < b.y_max();
      c.inter += in_a && in_b;
      c.uni += in_a || in_b;
      if (in_a || in_b) {
        ex0 = std::min(ex0, x);
        ey0 = std::min(ey0, y);
        ex1 = std::max(ex1, x + 1);
        ey1 = std::max(ey1, y + 1);
      }
    }
  }
  c.enclosing = static_cast<long long>(ex1 - ex0) * (ey1 - ey0);
  return c;
}

struct SceneSpec {
  int min_objects = 3;
  int max_objects = 12;
  int max_categories = 4;
  int image_size = 800;
};

inline const std::vector<std::string>& synthetic_categories() {
  static const std::vector<std::string> cats = {"vehicle", "ship", "bridge", "airplane",
                                                "storagetank", "dam"};
  return cats;
}

/// A random scene whose own attributes are drawn from narrow vocabularies so
/// that every disambiguation step (and discarding) occurs often. Relations
/// are computed from the boxes by the extraction functions.
inline Scene random_scene(Rng& rng, const std::string& image_id, const SceneSpec& spec = {}) {
  const int n = rand_int(rng, spec.min_objects, spec.max_objects);
  const int n_cats = rand_int(rng, 1, spec.max_categories);
  ImageRecord image{image_id, spec.image_size, spec.image_size, image_id + ".jpg", std::nullopt};
  std::vector<ObjectInstance> objects;
  for (int i = 0; i < n; ++i) {
    const int w = rand_int(rng, 8, 220);
    const int h = rand_int(rng, 8, 220);
    const int x = rand_int(rng, 0, spec.image_size - w);
    const int y = rand_int(rng, 0, spec.image_size - h);
    char id[32];
    std::snprintf(id, sizeof id, "%s_%04d", image_id.c_str(), i);
    objects.push_back({id, image_id, synthetic_categories()[rand_int(rng, 0, n_cats - 1)],
                       BBox(x, y, x + w, y + h)});
  }
  Scene scene;
  scene.image = image;
  scene.objects = objects;
  static constexpr std::array<std::optional<Color>, 3> kColors = {std::nullopt, Color::red,
                                                                  Color::blue};
  static constexpr std::array<std::optional<Shape>, 3> kShapes = {std::nullopt, Shape::round,
                                                                  Shape::rectangular};
  for (const auto& o : objects) {
    AttributeSet a;
    a.category = o.category;
    a.color = kColors[rand_int(rng, 0, 2)];
    a.size_word = extract_size_word(area_ratio(o.bbox, image.width, image.height));
    a.geometry = kShapes[rand_int(rng, 0, 2)];
    if (rand_int(rng, 0, 3) != 0) a.abs_location = extract_abs_location(o.bbox, image.width, image.height);
    scene.attributes.emplace(o.object_id, a);
  }
  for (const auto& s : objects) {
    for (const auto& t : objects) {
      if (s.object_id == t.object_id) continue;
      if (auto f = extract_rel_location(s, t)) scene.relations.push_back(*f);
      if (auto f = extract_rel_size(s, t, image)) scene.relations.push_back(*f);
    }
  }
  return scene;
}

inline std::vector<Scene> random_scenes(std::uint64_t seed, int count, const SceneSpec& spec = {}) {
  Rng rng(seed);
  std::vector<Scene> out;
  for (int i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "img%05d", i);
    out.push_back(random_scene(rng, id, spec));
  }
  return out;
}

/// Scene builder with explicit attributes and relations.
struct SceneBuilder {
  Scene scene;
  explicit SceneBuilder(std::string image_id = "img") {
    scene.image = {std::move(image_id), 800, 800, "", std::nullopt};
  }
  SceneBuilder& add(const std::string& id, const std::string& cat, AttributeSet a = {},
                    BBox box = BBox(0, 0, 10, 10)) {
    scene.objects.push_back({id, scene.image.image_id, cat, box});
    a.category = cat;
    scene.attributes[id] = a;
    std::sort(scene.objects.begin(), scene.objects.end(),
              [](auto& x, auto& y) { return x.object_id < y.object_id; });
    return *this;
  }
  SceneBuilder& rel(const std::string& s, Relation r, const std::string& o) {
    scene.relations.push_back({s, o, r});
    scene.relations.push_back({o, s, converse(r)});
    return *this;
  }
};

/// Minimal pending sample with a hand-built phrase expression.
inline GroundingSample make_sample(const std::string& image_id, const std::string& object_id,
                                   const std::string& category, const BBox& box, int w = 800,
                                   int h = 800) {
  Expression e;
  e.target_id = object_id;
  e.fills.subject.article = Article::the;
  e.fills.subject.category = category;
  e.fills.subject.abs_location = extract_abs_location(box, w, h);
  e.text = render(e.fills, TemplateKind::phrase);
  return GroundingSample{.sample_id = make_sample_id(image_id, object_id),
                         .image_id = image_id,
                         .object_id = object_id,
                         .category = category,
                         .image_width = w,
                         .image_height = h,
                         .bbox = box,
                         .expression = e,
                         .split = std::nullopt,
                         .status = SampleStatus::pending,
                         .edited_text = std::nullopt};
}

/// `n` images with `per_image` samples each.
inline std::vector<GroundingSample> make_samples(int n_images, int per_image, std::uint64_t seed = 1) {
  Rng rng(seed);
  std::vector<GroundingSample> out;
  for (int i = 0; i < n_images; ++i) {
    char img[32];
    std::snprintf(img, sizeof img, "im%05d", i);
    for (int k = 0; k < per_image; ++k) {
      char obj[48];
      std::snprintf(obj, sizeof obj, "%s_%04d", img, k);
      out.push_back(make_sample(img, obj, synthetic_categories()[rand_int(rng, 0, 3)],
                                random_grid_box(rng, 800)));
    }
  }
  return out;
}

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("refexp_test_" + to_hex((static_cast<std::uint64_t>(rd()) << 32) ^ ++counter));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace refexp::fixture
