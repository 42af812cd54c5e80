#include "tursio/context_model.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <map>
#include <set>

#include "tursio/json_io.hpp"
#include "tursio/sql_ast.hpp"
#include "tursio/text.hpp"

namespace tursio {

ColumnRef ColumnRef::parse(std::string_view dotted) {
  auto dot = dotted.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == dotted.size())
    throw Error("InvalidPayload", fmt::format("column reference '{}' is not TABLE.column", dotted));
  return {std::string(dotted.substr(0, dot)), std::string(dotted.substr(dot + 1))};
}

const ColumnMeta* TableNode::column(std::string_view name) const {
  for (auto& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

ColumnMeta* TableNode::column(std::string_view name) {
  for (auto& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

const TableNode* ContextGraph::table(std::string_view id) const {
  for (auto& t : tables)
    if (t.table_id == id) return &t;
  return nullptr;
}

TableNode* ContextGraph::table(std::string_view id) {
  for (auto& t : tables)
    if (t.table_id == id) return &t;
  return nullptr;
}

const ColumnMeta* ContextGraph::column(const ColumnRef& ref) const {
  const TableNode* t = table(ref.table_id);
  return t ? t->column(ref.column) : nullptr;
}

Cardinality reversed(Cardinality c) {
  switch (c) {
    case Cardinality::OneToMany: return Cardinality::ManyToOne;
    case Cardinality::ManyToOne: return Cardinality::OneToMany;
    default: return c;
  }
}

bool JoinEdge::fans_out_from(std::string_view table) const {
  if (cardinality == Cardinality::ManyToMany) return true;
  if (left.table_id == table) return cardinality == Cardinality::OneToMany;
  return cardinality == Cardinality::ManyToOne;
}

JoinEdge canonical(JoinEdge edge) {
  if (edge.right.table_id < edge.left.table_id) {
    std::swap(edge.left, edge.right);
    edge.cardinality = reversed(edge.cardinality);
  }
  return edge;
}

void normalize(ContextGraph& graph) {
  std::sort(graph.tables.begin(), graph.tables.end(),
            [](const TableNode& a, const TableNode& b) { return a.table_id < b.table_id; });
  for (auto& e : graph.joins) e = canonical(std::move(e));
  std::sort(graph.joins.begin(), graph.joins.end(), [](const JoinEdge& a, const JoinEdge& b) {
    return std::tie(a.left.table_id, a.left.columns, a.right.table_id, a.right.columns) <
           std::tie(b.left.table_id, b.left.columns, b.right.table_id, b.right.columns);
  });
}

std::vector<Violation> validate_graph(const ContextGraph& graph) {
  std::vector<Violation> out;
  std::set<std::string> ids;
  std::map<std::string, int> alias_count;
  for (auto& t : graph.tables) {
    if (!ids.insert(t.table_id).second) out.push_back({"DuplicateTableId", t.table_id});
    if (t.alias.empty() || t.alias.size() > 24) out.push_back({"InvalidAlias", t.table_id});
    ++alias_count[t.alias];
    std::set<std::string> cols;
    for (auto& c : t.columns) {
      std::string where = t.table_id + "." + c.name;
      if (!cols.insert(c.name).second) out.push_back({"DuplicateColumn", where});
      if (c.role == ColumnRole::Measure && !is_numeric(c.data_type))
        out.push_back({"MeasureNotNumeric", where});
      if (c.pii && !c.sample_values.empty()) out.push_back({"PiiSamplesPresent", where});
      if (c.sample_values.size() > 20) out.push_back({"TooManySamples", where});
    }
    for (auto& pk : t.primary_key)
      if (!cols.count(pk)) out.push_back({"UnknownPrimaryKey", t.table_id + "." + pk});
  }
  for (auto& [alias, n] : alias_count)
    if (n > 1 && !alias.empty()) out.push_back({"DuplicateAlias", alias});

  for (auto& e : graph.joins) {
    bool dangling = false;
    for (const JoinSide* side : {&e.left, &e.right}) {
      if (!graph.table(side->table_id)) {
        out.push_back({"DanglingJoin", side->table_id});
        dangling = true;
      }
    }
    std::string edge_name = e.left.table_id + "-" + e.right.table_id;
    if (e.left.columns.empty() || e.left.columns.size() != e.right.columns.size())
      out.push_back({"JoinArity", edge_name});
    if (e.confidence < 0.0 || e.confidence > 1.0) out.push_back({"ConfidenceOutOfRange", edge_name});
    if (e.origin == EdgeOrigin::UserDeclared && e.confidence != 1.0)
      out.push_back({"UserDeclaredConfidence", edge_name});
    if (dangling) continue;
    if (e.left.table_id == e.right.table_id) out.push_back({"SelfJoin", edge_name});
    if (e.right.table_id < e.left.table_id) out.push_back({"NonCanonicalEdge", edge_name});
    for (const JoinSide* side : {&e.left, &e.right}) {
      const TableNode* t = graph.table(side->table_id);
      for (auto& c : side->columns)
        if (!t->column(c)) out.push_back({"UnknownJoinColumn", side->table_id + "." + c});
    }
  }
  return out;
}

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error("InvalidPayload", msg); }

// Column references of `expression` must belong to `table` (bare, or qualified by
// the table id, physical name or alias) and must not be PII.
void check_expression_columns(const TableNode& table, const std::string& expression,
                              bool predicate) {
  sql::Expr parsed;
  try {
    parsed = sql::parse_expression(expression);
  } catch (const Error& e) {
    invalid(fmt::format("expression '{}' does not parse: {}", expression, e.what()));
  }
  if (predicate && sql::contains_aggregate(parsed))
    invalid("enforcer predicate must not aggregate");
  sql::visit_columns(parsed, [&](const sql::Expr& col) {
    if (!col.qualifier.empty()) {
      auto q = text::lower(col.qualifier);
      if (q != text::lower(table.table_id) && q != text::lower(table.physical_name) &&
          q != text::lower(table.alias))
        invalid(fmt::format("expression references foreign table '{}'", col.qualifier));
    }
    const ColumnMeta* meta = nullptr;
    for (auto& c : table.columns)
      if (text::lower(c.name) == text::lower(col.name)) meta = &c;
    if (!meta)
      invalid(fmt::format("expression references '{}' which is not a column of {}", col.name,
                          table.table_id));
    if (meta->pii) invalid(fmt::format("expression references PII column '{}'", col.name));
  });
}

bool column_carries_term(const ColumnMeta& c, const std::set<std::string>& term) {
  std::set<std::string> vocab = text::token_set(c.name);
  for (auto& a : c.aliases) {
    auto more = text::token_set(a);
    vocab.insert(more.begin(), more.end());
  }
  auto disp = text::token_set(c.display_name);
  vocab.insert(disp.begin(), disp.end());
  return std::all_of(term.begin(), term.end(), [&](auto& t) { return vocab.count(t) > 0; });
}

}  // namespace

ContextGraph apply_annotation(const ContextGraph& graph, const Annotation& ann) {
  ContextGraph out = graph;
  TableNode* table = nullptr;
  ColumnMeta* column = nullptr;
  switch (ann.target.kind) {
    case AnnotationTarget::Kind::Table:
      table = out.table(ann.target.table_id);
      if (!table) throw Error("UnresolvedTarget", "no table " + ann.target.table_id);
      break;
    case AnnotationTarget::Kind::Column:
      table = out.table(ann.target.table_id);
      if (table) column = table->column(ann.target.column);
      if (!column)
        throw Error("UnresolvedTarget",
                    fmt::format("no column {}.{}", ann.target.table_id, ann.target.column));
      break;
    case AnnotationTarget::Kind::Graph:
      break;
  }

  auto kind_matches = [&](AnnotationKind k, size_t index) {
    return ann.kind == k && ann.payload.index() == index;
  };

  switch (ann.kind) {
    case AnnotationKind::Synonym: {
      if (!kind_matches(AnnotationKind::Synonym, 1)) invalid("payload does not match kind");
      auto& p = std::get<SynonymPayload>(ann.payload);
      if (text::trim(p.term).empty()) invalid("synonym term is empty");
      if (!table) invalid("synonym needs a table or column target");
      if (column) {
        if (std::find(column->aliases.begin(), column->aliases.end(), p.term) ==
            column->aliases.end())
          column->aliases.push_back(p.term);
      }
      break;
    }
    case AnnotationKind::Description: {
      if (!kind_matches(AnnotationKind::Description, 2)) invalid("payload does not match kind");
      auto& p = std::get<DescriptionPayload>(ann.payload);
      if (column) column->description = p.text;
      else if (table) table->description = p.text;
      else invalid("description needs a table or column target");
      break;
    }
    case AnnotationKind::Prioritization: {
      if (!kind_matches(AnnotationKind::Prioritization, 0)) invalid("payload does not match kind");
      auto& p = std::get<PrioritizationPayload>(ann.payload);
      if (p.candidates.size() < 2) invalid("prioritization needs at least two candidates");
      auto term = text::token_set(p.term);
      if (term.empty()) invalid("prioritization term is empty");
      std::set<ColumnRef> seen;
      for (auto& ref : p.candidates) {
        const ColumnMeta* c = out.column(ref);
        if (!c) throw Error("UnresolvedTarget", "no column " + ref.to_string());
        if (!seen.insert(ref).second) invalid("duplicate candidate " + ref.to_string());
        if (c->pii) invalid("prioritization cannot name PII column " + ref.to_string());
        if (!column_carries_term(*c, term))
          invalid(fmt::format("{} does not carry the term '{}'", ref.to_string(), p.term));
      }
      for (auto& prior : graph.annotations) {
        if (prior.kind != AnnotationKind::Prioritization) continue;
        if (text::token_set(std::get<PrioritizationPayload>(prior.payload).term) == term)
          fmt::print(stderr, "warning: prioritization for '{}' replaces an earlier one\n", p.term);
      }
      break;
    }
    case AnnotationKind::CustomMeasure: {
      if (!kind_matches(AnnotationKind::CustomMeasure, 3)) invalid("payload does not match kind");
      auto& p = std::get<CustomMeasurePayload>(ann.payload);
      if (text::split_identifier(p.name).empty()) invalid("custom measure needs a name");
      const TableNode* source = out.table(p.source_table);
      if (!source) throw Error("UnresolvedTarget", "no table " + p.source_table);
      if (table && table->table_id != p.source_table)
        invalid("custom measure target differs from its source table");
      check_expression_columns(*source, p.expression, false);
      break;
    }
    case AnnotationKind::EnforcerRule: {
      if (!kind_matches(AnnotationKind::EnforcerRule, 4)) invalid("payload does not match kind");
      auto& p = std::get<EnforcerRulePayload>(ann.payload);
      if (!table || column) invalid("enforcer rule needs a table target");
      check_expression_columns(*table, p.predicate, true);
      break;
    }
  }
  out.annotations.push_back(ann);
  out.version = graph.version + 1;
  return out;
}

std::vector<PrioritizationPayload> active_prioritizations(const ContextGraph& graph) {
  std::vector<PrioritizationPayload> out;
  for (auto& a : graph.annotations) {
    if (a.kind != AnnotationKind::Prioritization) continue;
    auto& p = std::get<PrioritizationPayload>(a.payload);
    auto term = text::token_set(p.term);
    std::erase_if(out, [&](auto& q) { return text::token_set(q.term) == term; });
    out.push_back(p);
  }
  return out;
}

std::vector<std::string> enforcer_predicates(const ContextGraph& graph,
                                             std::string_view table_id) {
  std::vector<std::string> out;
  for (auto& a : graph.annotations)
    if (a.kind == AnnotationKind::EnforcerRule && a.target.table_id == table_id)
      out.push_back(std::get<EnforcerRulePayload>(a.payload).predicate);
  return out;
}

std::vector<CustomMeasurePayload> custom_measures(const ContextGraph& graph) {
  std::vector<CustomMeasurePayload> out;
  for (auto& a : graph.annotations) {
    if (a.kind != AnnotationKind::CustomMeasure) continue;
    auto& p = std::get<CustomMeasurePayload>(a.payload);
    std::erase_if(out, [&](auto& q) { return q.name == p.name && q.source_table == p.source_table; });
    out.push_back(p);
  }
  return out;
}

std::string_view to_string(AnnotationKind kind) {
  switch (kind) {
    case AnnotationKind::Prioritization: return "Prioritization";
    case AnnotationKind::Synonym: return "Synonym";
    case AnnotationKind::Description: return "Description";
    case AnnotationKind::CustomMeasure: return "CustomMeasure";
    case AnnotationKind::EnforcerRule: return "EnforcerRule";
  }
  return "";
}

AnnotationKind annotation_kind_from_string(std::string_view s) {
  for (auto k : {AnnotationKind::Prioritization, AnnotationKind::Synonym,
                 AnnotationKind::Description, AnnotationKind::CustomMeasure,
                 AnnotationKind::EnforcerRule})
    if (to_string(k) == s) return k;
  throw Error("InvalidPayload", fmt::format("unknown annotation kind '{}'", s));
}

std::string_view to_string(Cardinality c) {
  switch (c) {
    case Cardinality::OneToOne: return "OneToOne";
    case Cardinality::OneToMany: return "OneToMany";
    case Cardinality::ManyToOne: return "ManyToOne";
    case Cardinality::ManyToMany: return "ManyToMany";
  }
  return "";
}

std::string_view to_string(ColumnRole role) {
  return role == ColumnRole::Measure ? "Measure" : "Dimension";
}

// ---------------------------------------------------------------------------
// JSON

namespace {

Cardinality cardinality_from(std::string_view s) {
  for (auto c : {Cardinality::OneToOne, Cardinality::OneToMany, Cardinality::ManyToOne,
                 Cardinality::ManyToMany})
    if (to_string(c) == s) return c;
  throw Error("MalformedDocument", fmt::format("unknown cardinality '{}'", s));
}

std::string_view target_kind_name(AnnotationTarget::Kind k) {
  switch (k) {
    case AnnotationTarget::Kind::Table: return "Table";
    case AnnotationTarget::Kind::Column: return "Column";
    case AnnotationTarget::Kind::Graph: return "Graph";
  }
  return "";
}

}  // namespace

json value_to_json(const Value& v) {
  struct Visitor {
    json operator()(std::monostate) const { return nullptr; }
    json operator()(int64_t i) const { return i; }
    json operator()(double d) const { return d; }
    json operator()(const std::string& s) const { return s; }
    json operator()(bool b) const { return b; }
  };
  return std::visit(Visitor{}, v);
}

Value value_from_json(const json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw Error("MalformedDocument", "sample value must be a scalar");
}

void to_json(json& j, const ColumnRef& r) { j = r.to_string(); }
void from_json(const json& j, ColumnRef& r) { r = ColumnRef::parse(j.get<std::string>()); }

void to_json(json& j, const Annotation& a) {
  json target = {{"kind", target_kind_name(a.target.kind)}};
  if (a.target.kind != AnnotationTarget::Kind::Graph) target["table_id"] = a.target.table_id;
  if (a.target.kind == AnnotationTarget::Kind::Column) target["column"] = a.target.column;
  json payload = std::visit(
      [](auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, PrioritizationPayload>)
          return {{"term", p.term}, {"candidates", p.candidates}};
        else if constexpr (std::is_same_v<P, SynonymPayload>)
          return {{"term", p.term}};
        else if constexpr (std::is_same_v<P, DescriptionPayload>)
          return {{"text", p.text}};
        else if constexpr (std::is_same_v<P, CustomMeasurePayload>)
          return {{"name", p.name}, {"expression", p.expression}, {"source_table", p.source_table}};
        else
          return {{"predicate", p.predicate}};
      },
      a.payload);
  j = {{"target", target},
       {"kind", to_string(a.kind)},
       {"payload", payload},
       {"author", a.author},
       {"created_at", a.created_at}};
}

void from_json(const json& j, Annotation& a) {
  const json& t = j.at("target");
  auto tk = t.at("kind").get<std::string>();
  if (tk == "Table") a.target.kind = AnnotationTarget::Kind::Table;
  else if (tk == "Column") a.target.kind = AnnotationTarget::Kind::Column;
  else if (tk == "Graph") a.target.kind = AnnotationTarget::Kind::Graph;
  else throw Error("InvalidPayload", "unknown target kind " + tk);
  a.target.table_id = t.value("table_id", "");
  a.target.column = t.value("column", "");
  a.kind = annotation_kind_from_string(j.at("kind").get<std::string>());
  const json& p = j.at("payload");
  switch (a.kind) {
    case AnnotationKind::Prioritization:
      a.payload = PrioritizationPayload{p.at("term").get<std::string>(),
                                        p.at("candidates").get<std::vector<ColumnRef>>()};
      break;
    case AnnotationKind::Synonym:
      a.payload = SynonymPayload{p.at("term").get<std::string>()};
      break;
    case AnnotationKind::Description:
      a.payload = DescriptionPayload{p.at("text").get<std::string>()};
      break;
    case AnnotationKind::CustomMeasure:
      a.payload = CustomMeasurePayload{p.at("name").get<std::string>(),
                                       p.at("expression").get<std::string>(),
                                       p.at("source_table").get<std::string>()};
      break;
    case AnnotationKind::EnforcerRule:
      a.payload = EnforcerRulePayload{p.at("predicate").get<std::string>()};
      break;
  }
  a.author = j.value("author", "");
  a.created_at = j.value("created_at", "");
}

void to_json(json& j, const JoinEdge& e) {
  j = {{"left", {{"table_id", e.left.table_id}, {"columns", e.left.columns}}},
       {"right", {{"table_id", e.right.table_id}, {"columns", e.right.columns}}},
       {"condition_kind", e.condition_kind},
       {"confidence", e.confidence},
       {"cardinality", to_string(e.cardinality)},
       {"origin", e.origin == EdgeOrigin::Inferred ? "Inferred" : "UserDeclared"}};
}

void from_json(const json& j, JoinEdge& e) {
  e.left.table_id = j.at("left").at("table_id").get<std::string>();
  e.left.columns = j.at("left").at("columns").get<std::vector<std::string>>();
  e.right.table_id = j.at("right").at("table_id").get<std::string>();
  e.right.columns = j.at("right").at("columns").get<std::vector<std::string>>();
  e.condition_kind = j.value("condition_kind", "equi");
  e.confidence = j.at("confidence").get<double>();
  e.cardinality = cardinality_from(j.at("cardinality").get<std::string>());
  auto origin = j.at("origin").get<std::string>();
  if (origin == "Inferred") e.origin = EdgeOrigin::Inferred;
  else if (origin == "UserDeclared") e.origin = EdgeOrigin::UserDeclared;
  else throw Error("MalformedDocument", "unknown edge origin " + origin);
}

void to_json(json& j, const TableNode& t) {
  json cols = json::array();
  for (auto& c : t.columns) {
    json samples = json::array();
    for (auto& v : c.sample_values) samples.push_back(value_to_json(v));
    json col = {{"name", c.name},
                {"data_type", to_string(c.data_type)},
                {"role", to_string(c.role)},
                {"display_name", c.display_name},
                {"description", c.description},
                {"aliases", c.aliases},
                {"pii", c.pii},
                {"sample_values", samples}};
    col["stats_ref"] = c.stats_ref ? json(*c.stats_ref) : json(nullptr);
    cols.push_back(std::move(col));
  }
  j = {{"table_id", t.table_id},
       {"physical_name", t.physical_name},
       {"display_name", t.display_name},
       {"alias", t.alias},
       {"description", t.description},
       {"columns", cols},
       {"primary_key", t.primary_key},
       {"row_count_estimate", t.row_count_estimate}};
}

void from_json(const json& j, TableNode& t) {
  t.table_id = j.at("table_id").get<std::string>();
  t.physical_name = j.at("physical_name").get<std::string>();
  t.display_name = j.at("display_name").get<std::string>();
  t.alias = j.at("alias").get<std::string>();
  t.description = j.at("description").get<std::string>();
  t.primary_key = j.at("primary_key").get<std::vector<std::string>>();
  t.row_count_estimate = j.at("row_count_estimate").get<int64_t>();
  t.columns.clear();
  for (auto& c : j.at("columns")) {
    ColumnMeta m;
    m.name = c.at("name").get<std::string>();
    m.data_type = data_type_from_string(c.at("data_type").get<std::string>());
    auto role = c.at("role").get<std::string>();
    if (role == "Measure") m.role = ColumnRole::Measure;
    else if (role == "Dimension") m.role = ColumnRole::Dimension;
    else throw Error("MalformedDocument", "unknown role " + role);
    m.display_name = c.at("display_name").get<std::string>();
    m.description = c.at("description").get<std::string>();
    m.aliases = c.at("aliases").get<std::vector<std::string>>();
    m.pii = c.at("pii").get<bool>();
    for (auto& v : c.at("sample_values")) m.sample_values.push_back(value_from_json(v));
    if (c.contains("stats_ref") && !c.at("stats_ref").is_null())
      m.stats_ref = c.at("stats_ref").get<std::string>();
    t.columns.push_back(std::move(m));
  }
}

std::string serialize_graph(const ContextGraph& graph) {
  json doc = {{"schema_version", 1},
              {"graph_id", graph.graph_id},
              {"version", graph.version},
              {"built_at", graph.built_at},
              {"tables", graph.tables},
              {"joins", graph.joins},
              {"annotations", graph.annotations}};
  return doc.dump(2) + "\n";
}

ContextGraph deserialize_graph(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    throw Error("MalformedDocument", fmt::format("graph document is not JSON: {}", e.what()));
  }
  if (!doc.is_object() || !doc.contains("schema_version"))
    throw Error("MalformedDocument", "graph document lacks schema_version");
  if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != 1)
    throw Error("UnsupportedSchemaVersion",
                fmt::format("unsupported schema_version {}", doc["schema_version"].dump()));
  try {
    ContextGraph g;
    g.graph_id = doc.at("graph_id").get<std::string>();
    g.version = doc.at("version").get<int64_t>();
    g.built_at = doc.value("built_at", "");
    g.tables = doc.at("tables").get<std::vector<TableNode>>();
    g.joins = doc.at("joins").get<std::vector<JoinEdge>>();
    g.annotations = doc.value("annotations", json::array()).get<std::vector<Annotation>>();
    return g;
  } catch (const json::exception& e) {
    throw Error("MalformedDocument", fmt::format("graph document is malformed: {}", e.what()));
  }
}

}  // namespace tursio
