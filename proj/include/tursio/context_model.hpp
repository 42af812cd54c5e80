#pragma once

// The context graph: tables, scored join edges and per-column annotations,
// plus the annotation log the planner consumes.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tursio/value.hpp"

namespace tursio {

struct ColumnRef {
  std::string table_id;
  std::string column;

  std::string to_string() const { return table_id + "." + column; }
  static ColumnRef parse(std::string_view dotted);
  auto operator<=>(const ColumnRef&) const = default;
};

enum class ColumnRole { Dimension, Measure };

struct ColumnMeta {
  std::string name;
  DataType data_type = DataType::Text;
  ColumnRole role = ColumnRole::Dimension;
  std::string display_name;
  std::string description;
  std::vector<std::string> aliases;
  bool pii = false;
  std::vector<Value> sample_values;  // at most 20
  std::optional<std::string> stats_ref;

  bool operator==(const ColumnMeta&) const = default;
};

struct TableNode {
  std::string table_id;
  std::string physical_name;
  std::string display_name;
  std::string alias;
  std::string description;
  std::vector<ColumnMeta> columns;
  std::vector<std::string> primary_key;
  int64_t row_count_estimate = 0;

  const ColumnMeta* column(std::string_view name) const;
  ColumnMeta* column(std::string_view name);
  bool operator==(const TableNode&) const = default;
};

/// Cardinality reads left-to-right: ManyToOne means many left rows per right row.
enum class Cardinality { OneToOne, OneToMany, ManyToOne, ManyToMany };
enum class EdgeOrigin { Inferred, UserDeclared };

struct JoinSide {
  std::string table_id;
  std::vector<std::string> columns;
  bool operator==(const JoinSide&) const = default;
};

struct JoinEdge {
  JoinSide left;
  JoinSide right;
  std::string condition_kind = "equi";
  double confidence = 1.0;
  Cardinality cardinality = Cardinality::ManyToOne;
  EdgeOrigin origin = EdgeOrigin::Inferred;

  bool touches(std::string_view table) const {
    return left.table_id == table || right.table_id == table;
  }
  const std::string& other(std::string_view table) const {
    return left.table_id == table ? right.table_id : left.table_id;
  }
  /// True when each row of `table` can match several rows on the other side.
  bool fans_out_from(std::string_view table) const;
  bool operator==(const JoinEdge&) const = default;
};

/// Flips an edge so the lexicographically smaller table id is on the left.
JoinEdge canonical(JoinEdge edge);
Cardinality reversed(Cardinality c);

enum class AnnotationKind { Prioritization, Synonym, Description, CustomMeasure, EnforcerRule };

struct AnnotationTarget {
  enum class Kind { Table, Column, Graph } kind = Kind::Graph;
  std::string table_id;
  std::string column;
  bool operator==(const AnnotationTarget&) const = default;
};

struct PrioritizationPayload {
  std::string term;
  std::vector<ColumnRef> candidates;  // most preferred first
  bool operator==(const PrioritizationPayload&) const = default;
};
struct SynonymPayload {
  std::string term;
  bool operator==(const SynonymPayload&) const = default;
};
struct DescriptionPayload {
  std::string text;
  bool operator==(const DescriptionPayload&) const = default;
};
struct CustomMeasurePayload {
  std::string name;
  std::string expression;
  std::string source_table;
  bool operator==(const CustomMeasurePayload&) const = default;
};
struct EnforcerRulePayload {
  std::string predicate;
  bool operator==(const EnforcerRulePayload&) const = default;
};

using AnnotationPayload = std::variant<PrioritizationPayload, SynonymPayload, DescriptionPayload,
                                       CustomMeasurePayload, EnforcerRulePayload>;

struct Annotation {
  AnnotationTarget target;
  AnnotationKind kind = AnnotationKind::Synonym;
  AnnotationPayload payload;
  std::string author;
  std::string created_at;
  bool operator==(const Annotation&) const = default;
};

struct ContextGraph {
  std::string graph_id;
  std::vector<TableNode> tables;  // sorted by table_id
  std::vector<JoinEdge> joins;    // canonical orientation, sorted
  int64_t version = 1;
  std::string built_at;
  std::vector<Annotation> annotations;  // event log, applied in order

  const TableNode* table(std::string_view id) const;
  TableNode* table(std::string_view id);
  const ColumnMeta* column(const ColumnRef& ref) const;
  bool operator==(const ContextGraph&) const = default;
};

struct Violation {
  std::string rule;     // e.g. "DanglingJoin"
  std::string element;  // offending table/column/alias
  bool operator==(const Violation&) const = default;
};

std::vector<Violation> validate_graph(const ContextGraph& graph);

/// Returns a new graph with version+1 and the annotation folded in. The input is untouched.
/// Throws Error("UnresolvedTarget") or Error("InvalidPayload").
ContextGraph apply_annotation(const ContextGraph& graph, const Annotation& ann);

/// Sorts tables and joins and canonicalizes edge orientation in place.
void normalize(ContextGraph& graph);

std::string serialize_graph(const ContextGraph& graph);
/// Throws Error("MalformedDocument") or Error("UnsupportedSchemaVersion").
ContextGraph deserialize_graph(std::string_view document);

// Folded views of the annotation log consumed by the planner.

/// Prioritizations by term; a later annotation for the same term replaces an earlier one.
std::vector<PrioritizationPayload> active_prioritizations(const ContextGraph& graph);
std::vector<std::string> enforcer_predicates(const ContextGraph& graph, std::string_view table_id);
std::vector<CustomMeasurePayload> custom_measures(const ContextGraph& graph);

std::string_view to_string(AnnotationKind kind);
std::string_view to_string(Cardinality c);
std::string_view to_string(ColumnRole role);

}  // namespace tursio
