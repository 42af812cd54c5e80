#pragma once

// QuerySketch and the deterministic intent grammar:
//   [command] [aggregate-word] SELECT-phrases [by GROUP-phrases]
//   [with|where|which|who|have FILTER-phrases] [time-phrase] [ordered by ...] [top N]

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tursio/context_model.hpp"
#include "tursio/json_io.hpp"

namespace tursio {

enum class AggFunc { None, Sum, Avg, Count, Min, Max };
std::string_view to_string(AggFunc f);
AggFunc agg_func_from_string(std::string_view s);

struct Literal {
  enum class Kind { Number, String, Date } kind = Kind::String;
  std::string text;
  bool operator==(const Literal&) const = default;
};

struct SelectTerm {
  std::string phrase;
  AggFunc aggregate = AggFunc::None;
  bool operator==(const SelectTerm&) const = default;
};

struct FilterTerm {
  std::string phrase;
  std::string comparator;          // "=", "<>", ">", ">=", "<", "<="; "=" when implied
  std::optional<Literal> literal;  // absent: value comes from a sample-value hit
  bool operator==(const FilterTerm&) const = default;
};

/// Half-open date range [start, end), ISO dates.
struct TimeWindow {
  std::string label;   // e.g. "last quarter"
  std::string start;
  std::string end;
  std::string anchor;  // phrase naming the date column, may be empty
  bool operator==(const TimeWindow&) const = default;
};

struct OrderTerm {
  std::string phrase;
  bool descending = true;
  bool operator==(const OrderTerm&) const = default;
};

struct QuerySketch {
  std::vector<SelectTerm> select_terms;
  std::vector<std::string> group_terms;
  std::vector<FilterTerm> filter_terms;
  std::optional<TimeWindow> time_window;
  std::optional<OrderTerm> order_term;
  std::optional<int64_t> limit;
  bool wants_aggregate = false;
  bool fallback = false;  // grammar could not parse; whole question is the select term
  bool operator==(const QuerySketch&) const = default;
};

json sketch_to_json(const QuerySketch& s);
/// Throws Error("InvalidPayload") on a malformed sketch document.
QuerySketch sketch_from_json(const json& j);

/// Calendar date, proleptic Gregorian.
struct CivilDate {
  int year = 1970;
  int month = 1;
  int day = 1;
  auto operator<=>(const CivilDate&) const = default;
  std::string iso() const;
  /// Accepts "YYYY-MM-DD" or an ISO timestamp; throws Error("InvalidPayload").
  static CivilDate parse(std::string_view text);
  CivilDate add_days(int days) const;
  CivilDate add_months(int months) const;  // day clamped to 1
};

/// Lowercases and strips currency, thousands separators and final punctuation.
std::string normalize_question(std::string_view question);

/// Grammar parse; `clock` is the ISO instant relative periods resolve against.
QuerySketch parse_intent_grammar(std::string_view question, std::string_view clock);

/// One (question, sketch) pair per measure x dimension, at most 50.
std::vector<std::pair<std::string, QuerySketch>> sample_questions(const ContextGraph& graph);

/// Words the grammar consumes (aggregate, comparator, time and command words).
bool is_grammar_word(std::string_view token);

}  // namespace tursio
