#pragma once

// Question -> SQL: parse, identify tables, ground, compose, apply rules, emit,
// rewrite. Never executes anything.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tursio/adjudicator.hpp"
#include "tursio/context_model.hpp"
#include "tursio/keyword_index.hpp"
#include "tursio/plan_tree.hpp"
#include "tursio/rules.hpp"
#include "tursio/sql_emit.hpp"

namespace tursio {

/// Compact, PII-free description of a graph handed to the adjudicator.
json graph_summary(const ContextGraph& graph);

/// Per-graph state reused across questions.
struct PreparedGraph {
  explicit PreparedGraph(ContextGraph g);

  ContextGraph graph;
  KeywordIndex index;
  std::vector<std::pair<std::string, QuerySketch>> samples;  // normalized question -> sketch
  json summary;
};

struct PlannerOptions {
  std::string clock = "2025-04-01T00:00:00Z";
  std::string principal;
  RuleConfig rules;
  Dialect dialect;
};

struct PlannerError {
  std::string stage;  // parse_intent, identify_tables, ground, compose_tree, apply_rules, emit_sql
  std::string code;
  std::string message;
  json details = json::object();
};

struct PlanOutcome {
  std::string sql;
  std::optional<PlanNode> tree;
  json audit;  // one record per call, including failures
  std::optional<PlannerError> error;

  bool ok() const { return !error.has_value(); }
};

PlanOutcome plan_query(const std::string& question, const PreparedGraph& prepared, Adjudicator& adjudicator,
                       const PlannerOptions& options = {});
PlanOutcome plan_query(const std::string& question, const ContextGraph& graph, Adjudicator& adjudicator,
                       const PlannerOptions& options = {});

/// Graph columns an SQL statement reads. Unqualified names count against every
/// table in scope that has them. Throws Error("ParseFailure") / Error("NotReadOnly").
std::set<ColumnRef> referenced_columns(std::string_view sql, const ContextGraph& graph);

struct RewriteCheck {
  bool ok = true;
  std::string reason;  // UnknownTable, UnknownColumn, PiiIntroduced, NotReadOnly, ParseFailure
};

/// Accepts SQL that parses, is read-only and reads only non-PII graph columns.
RewriteCheck validate_rewrite(std::string_view sql, const ContextGraph& graph);

}  // namespace tursio
