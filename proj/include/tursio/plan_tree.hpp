#pragma once

// Relational operator tree built from groundings, rewritten by the rules and
// serialized by the emitter.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tursio/context_model.hpp"
#include "tursio/grounding.hpp"
#include "tursio/intent.hpp"
#include "tursio/json_io.hpp"
#include "tursio/keyword_index.hpp"

namespace tursio {

enum class NodeKind { Scan, Join, Filter, Project, Aggregate, PreAggregate, Sort, Limit };
std::string_view to_string(NodeKind k);

/// An output or grouping expression. `table_id` names a graph table or, above a
/// PreAggregate, that node's relation name.
struct ColumnExpr {
  std::string table_id{};
  std::string column{};            // empty with `star` or `expression`
  AggFunc agg = AggFunc::None;
  bool distinct = false;         // COUNT(DISTINCT column)
  bool star = false;             // COUNT(*)
  std::string expression{};        // custom measure body, columns unqualified
  std::string ratio_column{};      // AVG as SUM(column) * 1.0 / SUM(ratio_column)
  std::string alias{};
  bool pii = false;
  bool operator==(const ColumnExpr&) const = default;
};

struct Predicate {
  ColumnRef column;
  std::string op{};                // = <> < <= > >= range not_null raw
  std::optional<Value> value{};
  std::optional<Value> upper{};    // range: exclusive end
  std::string raw{};               // enforcer rule text, columns unqualified
  bool pii = false;
  bool operator==(const Predicate&) const = default;
};

struct SortKey {
  ColumnExpr expr;               // rendered as its alias when it has one
  bool descending = false;
  bool operator==(const SortKey&) const = default;
};

struct PlanNode {
  NodeKind kind = NodeKind::Scan;
  std::string table_id{};                // Scan: graph table; PreAggregate: relation name
  std::optional<JoinEdge> edge{};        // Join: a graph edge
  std::vector<Predicate> predicates{};   // Filter
  std::vector<ColumnExpr> columns{};     // Project outputs; Aggregate / PreAggregate measures
  std::vector<ColumnExpr> group_by{};    // Aggregate groups; PreAggregate keys
  bool distinct = false;               // Project
  std::vector<SortKey> order{};          // Sort
  int64_t limit = 0;                   // Limit
  std::vector<PlanNode> children{};

  bool operator==(const PlanNode&) const = default;
};

json plan_to_json(const PlanNode& node);

/// Graph tables scanned anywhere below `node`, in tree order.
std::vector<std::string> scanned_tables(const PlanNode& node);

/// Visits every node, parents first.
void visit_nodes(const PlanNode& node, const std::function<void(const PlanNode&)>& fn);

/// Checks the tree invariants: Join edges come from the graph, at most one
/// Aggregate and one PreAggregate per root-to-leaf path, column references
/// resolve to relations below them. Returns the violations found.
std::vector<std::string> check_tree(const PlanNode& root, const ContextGraph& graph);

/// Primary key plus up to two non-PII text columns: how an entity is listed.
std::vector<ColumnExpr> entity_columns(const TableNode& table);

/// Left-deep join tree over `tables` following `edges`, starting at tables[0].
/// A table listed in `substitutes` is replaced by that node.
PlanNode join_tree(const std::vector<std::string>& tables, const std::vector<JoinEdge>& edges,
                   const std::map<std::string, PlanNode>& substitutes = {});

/// Throws Error("TypeMismatch") when a literal does not fit its column.
PlanNode compose_tree(const QuerySketch& sketch, const std::vector<Grounding>& groundings,
                      const JoinPath& path, const ContextGraph& graph);

}  // namespace tursio
