#pragma once

// Structural SQL comparison: component sets, per-component F1 and corpus runs.

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "tursio/json_io.hpp"
#include "tursio/planner.hpp"

namespace tursio {

/// Normalized component sets. Columns are "table.column" with aliases resolved;
/// derived-table outputs resolve to the columns they were computed from.
struct ComponentSets {
  std::set<std::string> tables;
  std::set<std::string> joins;       // "a.x=b.y", sides sorted
  std::set<std::string> columns;     // projected column refs
  std::set<std::string> filters;     // "col op class:value"
  std::set<std::string> group_by;
  std::set<std::string> aggregates;  // "sum(t.c)", "count(*)"
  bool operator==(const ComponentSets&) const = default;
};

json components_to_json(const ComponentSets& c);

/// Throws Error("ParseFailure") / Error("NotReadOnly").
ComponentSets canonicalize(std::string_view sql);

struct StructuralScore {
  double tables = 0, joins = 0, columns = 0, filters = 0, group_by = 0, aggregates = 0;
  double overall = 0;  // mean of the six
};

json score_to_json(const StructuralScore& s);

/// F1 of two sets; 1.0 when both are empty.
double set_f1(const std::set<std::string>& predicted, const std::set<std::string>& reference);

StructuralScore score_components(const ComponentSets& predicted, const ComponentSets& reference);
StructuralScore score_structural(std::string_view predicted_sql, std::string_view reference_sql);

struct CorpusItem {
  std::string question;
  std::string reference_sql;
  std::vector<std::string> tags;
};

/// JSON lines of {question, reference_sql, tags}. Throws Error("MalformedDocument").
std::vector<CorpusItem> parse_corpus(std::string_view jsonl);
std::vector<CorpusItem> load_corpus(const std::filesystem::path& path);

/// {per_question: [...], means: {...}, count}. Planner failures score 0.
json run_corpus(const std::vector<CorpusItem>& corpus, const PreparedGraph& graph, Adjudicator& adjudicator,
                const PlannerOptions& options = {});

}  // namespace tursio
