#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "refexp/attributes.hpp"
#include "refexp/scene.hpp"

namespace refexp {

/// "A" renders as "An" before a vowel.
enum class Article { the, a };
enum class TemplateKind { phrase, sentence };
/// The freely ordered own-attribute slots (a2, a3, a4).
enum class Slot { color, size, geometry };
/// Own-attribute kinds in tie-break priority order.
enum class OwnAttribute { color, size, geometry, abs_location };

std::string_view to_string(TemplateKind k) noexcept;
std::optional<TemplateKind> template_kind_from_string(std::string_view s) noexcept;
std::string_view to_string(OwnAttribute a) noexcept;

/// A reference to one object through its category and a subset of its own
/// attributes.
struct ObjectRef {
  Article article = Article::the;
  std::string category;
  std::optional<Color> color;
  std::optional<SizeWord> size_word;
  std::optional<Shape> geometry;
  std::optional<Location> abs_location;
  /// Rendering order of the present a2..a4 slots. Slots that are present but
  /// not listed are appended in color, size, geometry order.
  std::vector<Slot> order;

  /// Number of own-attribute constraints besides the category.
  int attribute_count() const noexcept;
  bool has(OwnAttribute a) const noexcept;

  friend bool operator==(const ObjectRef&, const ObjectRef&) = default;
};

/// Structured template fills. A phrase uses only `subject`; a sentence
/// relates `subject` to `related` through `relation`.
struct ExpressionFills {
  ObjectRef subject;
  std::optional<Relation> relation;
  std::optional<ObjectRef> related;

  TemplateKind kind() const noexcept {
    return relation ? TemplateKind::sentence : TemplateKind::phrase;
  }
  friend bool operator==(const ExpressionFills&, const ExpressionFills&) = default;
};

struct Expression {
  std::string target_id;
  TemplateKind template_kind = TemplateKind::phrase;
  ExpressionFills fills;
  std::string text;
  std::uint64_t seed = 0;
  /// Which generation step produced it (1: unique category, 2: unique own
  /// attribute, 3: unique relation).
  int step = 1;

  friend bool operator==(const Expression&, const Expression&) = default;
};

struct Discarded {
  std::string target_id;
  std::string reason;
};

using GenerationResult = std::variant<Expression, Discarded>;

/// Renders fills: single spaces, leading capital, no trailing period, a5 as
/// "in the <loc> of the image". Throws InvalidInput on an empty category or
/// an incomplete sentence.
std::string render(const ExpressionFills& fills, TemplateKind kind);

/// Generated expressions never have fewer tokens than this.
inline constexpr int kMinExpressionTokens = 3;

/// The four-step disambiguation procedure. Emitted expressions always
/// resolve to exactly the target. Throws InvalidInput if target is not in
/// the scene.
GenerationResult generate_expression(const std::string& target_id,
                                     const Scene& scene, std::uint64_t seed);

/// All objects of the scene that satisfy every constraint in the fills.
std::set<std::string> resolve_expression(const ExpressionFills& fills,
                                         const Scene& scene);
inline std::set<std::string> resolve_expression(const Expression& expr,
                                                const Scene& scene) {
  return resolve_expression(expr.fills, scene);
}

/// Objects matching a single reference (category + present attributes).
std::set<std::string> resolve_ref(const ObjectRef& ref, const Scene& scene);

// Step predicates, exposed so callers can audit which step applied.

bool category_unique(const std::string& target_id, const Scene& scene);

/// Own attributes of the target whose value no other same-category object
/// shares, in priority order.
std::vector<OwnAttribute> distinguishing_attributes(const std::string& target_id,
                                                    const Scene& scene);

struct RelationCandidate {
  RelationalFact fact;
  ObjectRef related;  // minimal reference that identifies fact.object_id
};

/// Relations holding for the target but for no other object of its
/// category, whose related object is identifiable by category alone or by
/// one own attribute.
std::vector<RelationCandidate> distinguishing_relations(const std::string& target_id,
                                                        const Scene& scene);

/// Minimal reference to `object_id`: category only if unique, otherwise
/// category plus the highest-priority distinguishing attribute; nullopt if
/// neither suffices.
std::optional<ObjectRef> minimal_reference(const std::string& object_id,
                                           const Scene& scene);

/// Checks text against the phrase or sentence template pattern.
bool matches_template_grammar(std::string_view text, TemplateKind kind);
bool matches_any_template(std::string_view text);

/// Lower-case, whitespace split, leading/trailing punctuation stripped.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace refexp
