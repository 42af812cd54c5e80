#pragma once

// Resolves sketch phrases to schema elements.

#include <optional>
#include <string>
#include <vector>

#include "tursio/context_model.hpp"
#include "tursio/intent.hpp"
#include "tursio/json_io.hpp"
#include "tursio/keyword_index.hpp"

namespace tursio {

/// Error carrying a machine-readable payload (alternatives, offending phrase).
class DetailedError : public Error {
 public:
  DetailedError(std::string code, const std::string& message, json details)
      : Error(std::move(code), message), details_(std::move(details)) {}
  const json& details() const noexcept { return details_; }

 private:
  json details_;
};

struct Target {
  enum class Kind { Column, Measure, Table } kind = Kind::Column;
  std::string table_id;
  std::string name;  // column or custom-measure name; empty for tables

  /// "T" for tables, "T.name" otherwise; a table sorts before its columns.
  std::string ref() const { return name.empty() ? table_id : table_id + "." + name; }
  ColumnRef column_ref() const { return {table_id, name}; }
  bool operator==(const Target&) const = default;
};

enum class Basis { ExactAlias, TokenOverlap, SampleValueHit, PrioritizationRule };
std::string_view to_string(Basis b);

struct ScoredTarget {
  Target target;
  double score = 0.0;
  Basis basis = Basis::TokenOverlap;
  std::optional<Value> sample_value;  // SampleValueHit only
  bool operator==(const ScoredTarget&) const = default;
};

/// Secondary keys after score: position in `priority`, then in `table_order`,
/// then ref().
struct TieBreak {
  std::vector<ColumnRef> priority;
  std::vector<std::string> table_order;
};

/// Index of the winner. Scores within a relative 1e-9 of the top score tie, so
/// scaling every score by the same positive factor cannot change it. Throws on
/// empty input.
size_t choose_target(const std::vector<ScoredTarget>& candidates, const TieBreak& tie);
std::vector<ScoredTarget> rank_targets(std::vector<ScoredTarget> candidates, const TieBreak& tie);

enum class PhraseRole { Select, Group, Filter, Time, Order };
std::string_view to_string(PhraseRole r);

struct Grounding {
  std::string phrase;
  PhraseRole role = PhraseRole::Select;
  std::optional<Target> target;  // empty only when pii_shadow is set
  double score = 0.0;
  Basis basis = Basis::TokenOverlap;
  std::vector<ScoredTarget> alternatives;  // runners-up, best first
  std::optional<ColumnRef> pii_shadow;     // select phrase whose best match is PII
  AggFunc aggregate = AggFunc::None;
  std::string comparator;                  // filter and time groundings
  std::optional<Value> value;
  std::optional<Value> upper;              // time windows: exclusive end
  bool descending = true;                  // order groundings
};

json grounding_to_json(const Grounding& g);

/// Phrase tokens: stemmed, no stopwords, grammar words or numbers.
std::set<std::string> phrase_tokens(std::string_view phrase);

/// Scores of every non-PII candidate for a phrase, name-based and sample-value hits.
std::vector<ScoredTarget> score_phrase(std::string_view phrase, const std::vector<std::string>& tables,
                                       const ContextGraph& graph);

/// Grounds every phrase of the sketch. `tables` is identify_tables output order.
/// Throws DetailedError("UngroundedPhrase") with the nearest alternatives.
std::vector<Grounding> ground(const QuerySketch& sketch, const std::vector<std::string>& tables,
                              const ContextGraph& graph, const KeywordIndex& index);

inline constexpr double kGroundingFloor = 0.3;

}  // namespace tursio
