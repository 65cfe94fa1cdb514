#include "refexp/expression.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <stdexcept>
#include <tuple>

#include "refexp/error.hpp"
#include "refexp/seed.hpp"

namespace refexp {

std::string_view to_string(TemplateKind k) noexcept {
  return k == TemplateKind::phrase ? "phrase" : "sentence";
}

std::optional<TemplateKind> template_kind_from_string(std::string_view s) noexcept {
  if (s == "phrase") return TemplateKind::phrase;
  if (s == "sentence") return TemplateKind::sentence;
  return std::nullopt;
}

std::string_view to_string(OwnAttribute a) noexcept {
  switch (a) {
    case OwnAttribute::color: return "color";
    case OwnAttribute::size: return "size";
    case OwnAttribute::geometry: return "geometry";
    case OwnAttribute::abs_location: return "abs_location";
  }
  return "color";
}

namespace {

constexpr std::array kPriority = {OwnAttribute::color, OwnAttribute::size,
                                  OwnAttribute::geometry, OwnAttribute::abs_location};

bool present(const AttributeSet& a, OwnAttribute which) {
  switch (which) {
    case OwnAttribute::color: return a.color.has_value();
    case OwnAttribute::size: return a.size_word.has_value();
    case OwnAttribute::geometry: return a.geometry.has_value();
    case OwnAttribute::abs_location: return a.abs_location.has_value();
  }
  return false;
}

/// True when both sets hold the same present value for `which`.
bool same_value(const AttributeSet& a, const AttributeSet& b, OwnAttribute which) {
  switch (which) {
    case OwnAttribute::color: return a.color && a.color == b.color;
    case OwnAttribute::size: return a.size_word && a.size_word == b.size_word;
    case OwnAttribute::geometry: return a.geometry && a.geometry == b.geometry;
    case OwnAttribute::abs_location: return a.abs_location && a.abs_location == b.abs_location;
  }
  return false;
}

void copy_attribute(ObjectRef& ref, const AttributeSet& a, OwnAttribute which) {
  switch (which) {
    case OwnAttribute::color: ref.color = a.color; break;
    case OwnAttribute::size: ref.size_word = a.size_word; break;
    case OwnAttribute::geometry: ref.geometry = a.geometry; break;
    case OwnAttribute::abs_location: ref.abs_location = a.abs_location; break;
  }
}

bool matches(const ObjectRef& ref, const AttributeSet& a) {
  return a.category == ref.category && (!ref.color || ref.color == a.color) &&
         (!ref.size_word || ref.size_word == a.size_word) &&
         (!ref.geometry || ref.geometry == a.geometry) &&
         (!ref.abs_location || ref.abs_location == a.abs_location);
}

std::vector<Slot> present_slots(const ObjectRef& ref) {
  std::vector<Slot> slots;
  if (ref.color) slots.push_back(Slot::color);
  if (ref.size_word) slots.push_back(Slot::size);
  if (ref.geometry) slots.push_back(Slot::geometry);
  return slots;
}

std::string_view slot_word(const ObjectRef& ref, Slot s) {
  switch (s) {
    case Slot::color: return to_string(*ref.color);
    case Slot::size: return to_string(*ref.size_word);
    case Slot::geometry: return to_string(*ref.geometry);
  }
  return {};
}

std::string_view relation_phrase(Relation r) {
  switch (r) {
    case Relation::left_of: return "on the left of";
    case Relation::right_of: return "on the right of";
    case Relation::above: return "above";
    case Relation::below: return "below";
    case Relation::upper_left_of: return "on the upper left of";
    case Relation::upper_right_of: return "on the upper right of";
    case Relation::lower_left_of: return "on the lower left of";
    case Relation::lower_right_of: return "on the lower right of";
    case Relation::smaller_than: return "smaller than";
    case Relation::larger_than: return "larger than";
  }
  return {};
}

bool starts_with_vowel(std::string_view word) {
  if (word.empty()) return false;
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(word.front())));
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

std::string render_ref(const ObjectRef& ref, bool sentence_initial) {
  if (ref.category.empty()) throw InvalidInput("render: missing category (a1)");
  std::vector<std::string_view> words;
  std::vector<Slot> order;
  for (Slot s : ref.order) {
    const auto slots = present_slots(ref);
    if (std::find(slots.begin(), slots.end(), s) != slots.end() &&
        std::find(order.begin(), order.end(), s) == order.end()) {
      order.push_back(s);
    }
  }
  for (Slot s : present_slots(ref)) {
    if (std::find(order.begin(), order.end(), s) == order.end()) order.push_back(s);
  }
  for (Slot s : order) words.push_back(slot_word(ref, s));
  words.push_back(ref.category);

  std::string article;
  if (ref.article == Article::the) {
    article = "the";
  } else {
    article = starts_with_vowel(words.front()) ? "an" : "a";
  }
  if (sentence_initial) article[0] = static_cast<char>(std::toupper(article[0]));

  std::string out = article;
  for (auto w : words) {
    out += ' ';
    out += w;
  }
  if (ref.abs_location) {
    out += " in the ";
    out += to_string(*ref.abs_location);
    out += " of the image";
  }
  return out;
}

std::vector<const ObjectInstance*> same_category_others(const ObjectInstance& target,
                                                        const Scene& scene) {
  std::vector<const ObjectInstance*> others;
  for (const auto& o : scene.objects) {
    if (o.object_id != target.object_id && o.category == target.category) others.push_back(&o);
  }
  return others;
}

const ObjectInstance& require_target(const std::string& target_id, const Scene& scene) {
  const ObjectInstance* t = scene.find(target_id);
  if (t == nullptr) {
    throw InvalidInput("object '" + target_id + "' is not in scene '" + scene.image.image_id + "'");
  }
  return *t;
}

int token_total(const std::string& text) { return static_cast<int>(tokenize(text).size()); }

}  // namespace

int ObjectRef::attribute_count() const noexcept {
  return static_cast<int>(color.has_value()) + static_cast<int>(size_word.has_value()) +
         static_cast<int>(geometry.has_value()) + static_cast<int>(abs_location.has_value());
}

bool ObjectRef::has(OwnAttribute a) const noexcept {
  switch (a) {
    case OwnAttribute::color: return color.has_value();
    case OwnAttribute::size: return size_word.has_value();
    case OwnAttribute::geometry: return geometry.has_value();
    case OwnAttribute::abs_location: return abs_location.has_value();
  }
  return false;
}

std::string render(const ExpressionFills& fills, TemplateKind kind) {
  if (kind == TemplateKind::phrase) {
    if (fills.relation || fills.related) {
      throw InvalidInput("render: phrase fills must not carry a relation");
    }
    return render_ref(fills.subject, true);
  }
  if (!fills.relation || !fills.related) {
    throw InvalidInput("render: sentence needs a relation and a related object");
  }
  std::string out = render_ref(fills.subject, true);
  out += " is ";
  out += relation_phrase(*fills.relation);
  out += ' ';
  out += render_ref(*fills.related, false);
  return out;
}

// ---------------------------------------------------------------------------
// Resolution

std::set<std::string> resolve_ref(const ObjectRef& ref, const Scene& scene) {
  std::set<std::string> out;
  for (const auto& o : scene.objects) {
    const auto it = scene.attributes.find(o.object_id);
    if (it != scene.attributes.end() && matches(ref, it->second)) out.insert(o.object_id);
  }
  return out;
}

std::set<std::string> resolve_expression(const ExpressionFills& fills, const Scene& scene) {
  std::set<std::string> subjects = resolve_ref(fills.subject, scene);
  if (!fills.relation) return subjects;
  if (!fills.related) return {};
  const std::set<std::string> related = resolve_ref(*fills.related, scene);
  std::set<std::string> out;
  for (const auto& r : scene.relations) {
    if (r.value == *fills.relation && subjects.contains(r.subject_id) &&
        related.contains(r.object_id)) {
      out.insert(r.subject_id);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Step predicates

bool category_unique(const std::string& target_id, const Scene& scene) {
  return same_category_others(require_target(target_id, scene), scene).empty();
}

std::vector<OwnAttribute> distinguishing_attributes(const std::string& target_id,
                                                    const Scene& scene) {
  const ObjectInstance& target = require_target(target_id, scene);
  const AttributeSet& mine = scene.attributes_of(target_id);
  const auto others = same_category_others(target, scene);
  std::vector<OwnAttribute> out;
  for (OwnAttribute which : kPriority) {
    if (!present(mine, which)) continue;
    const bool unique = std::none_of(others.begin(), others.end(), [&](const auto* o) {
      return same_value(mine, scene.attributes_of(o->object_id), which);
    });
    if (unique) out.push_back(which);
  }
  return out;
}

std::optional<ObjectRef> minimal_reference(const std::string& object_id, const Scene& scene) {
  const ObjectInstance& obj = require_target(object_id, scene);
  ObjectRef ref;
  ref.article = Article::the;
  ref.category = obj.category;
  if (category_unique(object_id, scene)) return ref;
  const auto distinguishing = distinguishing_attributes(object_id, scene);
  if (distinguishing.empty()) return std::nullopt;
  copy_attribute(ref, scene.attributes_of(object_id), distinguishing.front());
  return ref;
}

std::vector<RelationCandidate> distinguishing_relations(const std::string& target_id,
                                                        const Scene& scene) {
  const ObjectInstance& target = require_target(target_id, scene);
  const auto others = same_category_others(target, scene);

  std::set<std::tuple<std::string, std::string, Relation>> facts;
  for (const auto& r : scene.relations) facts.emplace(r.subject_id, r.object_id, r.value);

  std::map<std::string, std::optional<ObjectRef>> refs;
  std::vector<RelationCandidate> out;
  for (const auto& r : scene.relations) {
    if (r.subject_id != target_id) continue;
    const bool shared = std::any_of(others.begin(), others.end(), [&](const auto* o) {
      return facts.contains({o->object_id, r.object_id, r.value});
    });
    if (shared) continue;
    auto [it, inserted] = refs.try_emplace(r.object_id);
    if (inserted) it->second = minimal_reference(r.object_id, scene);
    if (!it->second) continue;
    out.push_back({r, *it->second});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.fact.object_id, a.fact.value) < std::tie(b.fact.object_id, b.fact.value);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Generation

GenerationResult generate_expression(const std::string& target_id, const Scene& scene,
                                     std::uint64_t seed) {
  const ObjectInstance& target = require_target(target_id, scene);
  const AttributeSet& mine = scene.attributes_of(target_id);
  Rng rng(seed);

  Expression expr;
  expr.target_id = target_id;
  expr.seed = seed;
  ObjectRef& subject = expr.fills.subject;
  subject.category = target.category;

  auto add_optional_attributes = [&](std::optional<OwnAttribute> fixed) {
    for (OwnAttribute which : kPriority) {
      if (!present(mine, which) || which == fixed) continue;
      if (coin_flip(rng)) copy_attribute(subject, mine, which);
    }
    subject.order = present_slots(subject);
    seeded_shuffle(subject.order, rng);
  };

  if (category_unique(target_id, scene)) {
    expr.step = 1;
    subject.article = coin_flip(rng) ? Article::the : Article::a;
    add_optional_attributes(std::nullopt);
    // Pad short phrases with an attribute; location is always describable.
    if (token_total(render_ref(subject, true)) < kMinExpressionTokens) {
      for (OwnAttribute which : {OwnAttribute::abs_location, OwnAttribute::color,
                                 OwnAttribute::size, OwnAttribute::geometry}) {
        if (present(mine, which)) {
          copy_attribute(subject, mine, which);
          subject.order = present_slots(subject);
          break;
        }
      }
    }
  } else if (const auto unique_attrs = distinguishing_attributes(target_id, scene);
             !unique_attrs.empty()) {
    expr.step = 2;
    subject.article = Article::the;
    copy_attribute(subject, mine, unique_attrs.front());
    add_optional_attributes(unique_attrs.front());
  } else if (const auto relations = distinguishing_relations(target_id, scene);
             !relations.empty()) {
    expr.step = 3;
    subject.article = Article::the;
    // Prefer related objects named by category alone.
    std::vector<const RelationCandidate*> pool;
    for (const auto& c : relations) {
      if (c.related.attribute_count() == 0) pool.push_back(&c);
    }
    if (pool.empty()) {
      for (const auto& c : relations) pool.push_back(&c);
    }
    const RelationCandidate& chosen = *pool[uniform_below(rng, pool.size())];
    expr.fills.relation = chosen.fact.value;
    expr.fills.related = chosen.related;
  } else {
    return Discarded{target_id, "no distinguishing attribute or relation"};
  }

  expr.template_kind = expr.fills.kind();
  expr.text = render(expr.fills, expr.template_kind);
  if (token_total(expr.text) < kMinExpressionTokens) {
    return Discarded{target_id, "expression shorter than three words"};
  }
  const auto resolved = resolve_expression(expr.fills, scene);
  if (resolved.size() != 1 || *resolved.begin() != target_id) {
    throw std::logic_error("generated expression for '" + target_id + "' is ambiguous");
  }
  return expr;
}

// ---------------------------------------------------------------------------
// Grammar and tokens

namespace {

const std::regex& phrase_pattern() {
  static const std::regex re = [] {
    const std::string attr =
        "(?:red|orange|yellow|green|cyan|blue|purple|white|gray|black|tiny|small|large|huge|"
        "round|square|rectangular|slender)";
    const std::string word = "(?!(?:is|in|the|of|on|a|an)(?: |$))[a-z0-9][a-z0-9-]*";
    const std::string loc =
        "(?: in the (?:top left|top right|bottom left|bottom right|top|bottom|left|right|"
        "middle) of the image)?";
    const std::string ref = "(?: " + attr + "){0,3} " + word + "(?: " + word + "){0,3}" + loc;
    return std::regex("^(?:The|A|An)" + ref + "$");
  }();
  return re;
}

const std::regex& sentence_pattern() {
  static const std::regex re = [] {
    const std::string attr =
        "(?:red|orange|yellow|green|cyan|blue|purple|white|gray|black|tiny|small|large|huge|"
        "round|square|rectangular|slender)";
    const std::string word = "(?!(?:is|in|the|of|on|a|an)(?: |$))[a-z0-9][a-z0-9-]*";
    const std::string loc =
        "(?: in the (?:top left|top right|bottom left|bottom right|top|bottom|left|right|"
        "middle) of the image)?";
    const std::string ref = "(?: " + attr + "){0,3} " + word + "(?: " + word + "){0,3}" + loc;
    const std::string rel =
        "(?:on the left of|on the right of|above|below|on the upper left of|"
        "on the upper right of|on the lower left of|on the lower right of|smaller than|"
        "larger than)";
    return std::regex("^(?:The|A|An)" + ref + " is " + rel + " (?:the|a|an)" + ref + "$");
  }();
  return re;
}

}  // namespace

bool matches_template_grammar(std::string_view text, TemplateKind kind) {
  const std::string s(text);
  return std::regex_match(s, kind == TemplateKind::phrase ? phrase_pattern() : sentence_pattern());
}

bool matches_any_template(std::string_view text) {
  return matches_template_grammar(text, TemplateKind::phrase) ||
         matches_template_grammar(text, TemplateKind::sentence);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    std::size_t b = 0;
    std::size_t e = current.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(current[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(current[e - 1]))) --e;
    if (e > b) tokens.push_back(current.substr(b, e - b));
    current.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush();
  return tokens;
}

}  // namespace refexp
