#include "tursio/plan_tree.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <set>

#include "tursio/text.hpp"

namespace tursio {

std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Scan: return "Scan";
    case NodeKind::Join: return "Join";
    case NodeKind::Filter: return "Filter";
    case NodeKind::Project: return "Project";
    case NodeKind::Aggregate: return "Aggregate";
    case NodeKind::PreAggregate: return "PreAggregate";
    case NodeKind::Sort: return "Sort";
    case NodeKind::Limit: return "Limit";
  }
  return "";
}

namespace {

json column_json(const ColumnExpr& c) {
  json j = {{"table", c.table_id}};
  if (!c.column.empty()) j["column"] = c.column;
  if (c.agg != AggFunc::None) j["agg"] = to_string(c.agg);
  if (c.distinct) j["distinct"] = true;
  if (c.star) j["star"] = true;
  if (!c.expression.empty()) j["expression"] = c.expression;
  if (!c.ratio_column.empty()) j["ratio_column"] = c.ratio_column;
  if (!c.alias.empty()) j["alias"] = c.alias;
  if (c.pii) j["pii"] = true;
  return j;
}

json predicate_json(const Predicate& p) {
  json j = {{"column", p.column.to_string()}, {"op", p.op}};
  if (p.value) j["value"] = value_to_json(*p.value);
  if (p.upper) j["upper"] = value_to_json(*p.upper);
  if (!p.raw.empty()) j["raw"] = p.raw;
  if (p.pii) j["pii"] = true;
  return j;
}

}  // namespace

json plan_to_json(const PlanNode& n) {
  json j = {{"kind", to_string(n.kind)}};
  switch (n.kind) {
    case NodeKind::Scan: j["table"] = n.table_id; break;
    case NodeKind::Join:
      if (n.edge)
        j["edge"] = fmt::format("{}.{} = {}.{}", n.edge->left.table_id, text::join(n.edge->left.columns, ","),
                                n.edge->right.table_id, text::join(n.edge->right.columns, ","));
      break;
    case NodeKind::Filter: {
      json ps = json::array();
      for (auto& p : n.predicates) ps.push_back(predicate_json(p));
      j["predicates"] = ps;
      break;
    }
    case NodeKind::Project:
    case NodeKind::Aggregate:
    case NodeKind::PreAggregate: {
      if (n.kind == NodeKind::PreAggregate) j["relation"] = n.table_id;
      json cs = json::array(), gs = json::array();
      for (auto& c : n.columns) cs.push_back(column_json(c));
      for (auto& c : n.group_by) gs.push_back(column_json(c));
      j["columns"] = cs;
      if (n.kind != NodeKind::Project) j[n.kind == NodeKind::Aggregate ? "group_by" : "keys"] = gs;
      if (n.distinct) j["distinct"] = true;
      break;
    }
    case NodeKind::Sort: {
      json ks = json::array();
      for (auto& k : n.order) {
        json kj = column_json(k.expr);
        kj["direction"] = k.descending ? "desc" : "asc";
        ks.push_back(kj);
      }
      j["order"] = ks;
      break;
    }
    case NodeKind::Limit: j["limit"] = n.limit; break;
  }
  if (!n.children.empty()) {
    json ch = json::array();
    for (auto& c : n.children) ch.push_back(plan_to_json(c));
    j["children"] = ch;
  }
  return j;
}

void visit_nodes(const PlanNode& node, const std::function<void(const PlanNode&)>& fn) {
  fn(node);
  for (auto& c : node.children) visit_nodes(c, fn);
}

std::vector<std::string> scanned_tables(const PlanNode& node) {
  std::vector<std::string> out;
  visit_nodes(node, [&](const PlanNode& n) {
    if (n.kind == NodeKind::Scan && std::find(out.begin(), out.end(), n.table_id) == out.end())
      out.push_back(n.table_id);
  });
  return out;
}

namespace {

/// Relations visible to expressions above `n`: scans, and PreAggregate names
/// without looking inside them.
void relations(const PlanNode& n, std::map<std::string, const PlanNode*>& out) {
  if (n.kind == NodeKind::Scan || n.kind == NodeKind::PreAggregate) {
    out[n.table_id] = &n;
    return;
  }
  for (auto& c : n.children) relations(c, out);
}

void check_column(const ColumnExpr& c, const std::map<std::string, const PlanNode*>& scope,
                  const ContextGraph& g, std::vector<std::string>& out) {
  auto it = scope.find(c.table_id);
  if (it == scope.end()) {
    out.push_back(fmt::format("column of {} has no relation below it", c.table_id));
    return;
  }
  if (c.star || !c.expression.empty()) return;
  const PlanNode* rel = it->second;
  auto has = [&](const std::string& name) {
    if (name.empty()) return true;
    if (rel->kind == NodeKind::Scan) return g.column({c.table_id, name}) != nullptr;
    for (auto& k : rel->group_by)
      if (k.column == name) return true;
    for (auto& m : rel->columns)
      if (m.alias == name) return true;
    return false;
  };
  if (!has(c.column) || !has(c.ratio_column))
    out.push_back(fmt::format("unknown column {}.{}", c.table_id, c.column));
}

void check(const PlanNode& n, const ContextGraph& g, int aggs, int pre, std::vector<std::string>& out) {
  if (n.kind == NodeKind::Aggregate && ++aggs > 1) out.push_back("nested Aggregate");
  if (n.kind == NodeKind::PreAggregate && ++pre > 1) out.push_back("nested PreAggregate");
  size_t arity = n.children.size();
  switch (n.kind) {
    case NodeKind::Scan:
      if (arity != 0) out.push_back("Scan with children");
      if (!g.table(n.table_id)) out.push_back("Scan of unknown table " + n.table_id);
      break;
    case NodeKind::Join: {
      if (arity != 2) {
        out.push_back("Join without two inputs");
        break;
      }
      if (!n.edge) {
        out.push_back("Join without an edge");
        break;
      }
      auto e = canonical(*n.edge);
      bool found = std::any_of(g.joins.begin(), g.joins.end(),
                               [&](const JoinEdge& j) { return j.left == e.left && j.right == e.right; });
      if (!found) out.push_back("Join edge not in the graph");
      break;
    }
    default:
      if (arity != 1) out.push_back(fmt::format("{} needs one input", to_string(n.kind)));
  }
  if (arity == 1 && n.kind != NodeKind::Scan) {
    std::map<std::string, const PlanNode*> scope;
    relations(n.children[0], scope);
    for (auto& c : n.columns) check_column(c, scope, g, out);
    for (auto& c : n.group_by) check_column(c, scope, g, out);
    for (auto& k : n.order)
      if (k.expr.alias.empty()) check_column(k.expr, scope, g, out);
    for (auto& p : n.predicates)
      if (!scope.count(p.column.table_id)) out.push_back("predicate on a relation not below it");
  }
  for (auto& c : n.children) check(c, g, aggs, pre, out);
}

}  // namespace

std::vector<std::string> check_tree(const PlanNode& root, const ContextGraph& graph) {
  std::vector<std::string> out;
  check(root, graph, 0, 0, out);
  return out;
}

std::vector<ColumnExpr> entity_columns(const TableNode& t) {
  std::vector<ColumnExpr> out;
  for (auto& k : t.primary_key) out.push_back({t.table_id, k});
  int text_cols = 0;
  for (auto& c : t.columns) {
    if (text_cols == 2) break;
    if (c.pii || c.data_type != DataType::Text) continue;
    if (std::find(t.primary_key.begin(), t.primary_key.end(), c.name) != t.primary_key.end()) continue;
    out.push_back({t.table_id, c.name});
    ++text_cols;
  }
  if (out.empty())
    for (auto& c : t.columns)
      if (!c.pii) {
        out.push_back({t.table_id, c.name});
        break;
      }
  return out;
}

PlanNode join_tree(const std::vector<std::string>& tables, const std::vector<JoinEdge>& edges,
                   const std::map<std::string, PlanNode>& substitutes) {
  if (tables.empty()) throw Error("DisconnectedModels", "no tables to join");
  auto leaf = [&](const std::string& id) {
    auto it = substitutes.find(id);
    if (it != substitutes.end()) return it->second;
    PlanNode s;
    s.kind = NodeKind::Scan;
    s.table_id = id;
    return s;
  };
  PlanNode tree = leaf(tables[0]);
  std::set<std::string> in = {tables[0]};
  std::vector<bool> used(edges.size(), false);
  for (bool progress = true; progress;) {
    progress = false;
    for (size_t i = 0; i < edges.size(); ++i) {
      if (used[i]) continue;
      bool l = in.count(edges[i].left.table_id) > 0, r = in.count(edges[i].right.table_id) > 0;
      if (l == r) continue;
      const std::string& next = l ? edges[i].right.table_id : edges[i].left.table_id;
      PlanNode j;
      j.kind = NodeKind::Join;
      j.edge = edges[i];
      j.children.push_back(std::move(tree));
      j.children.push_back(leaf(next));
      tree = std::move(j);
      in.insert(next);
      used[i] = true;
      progress = true;
    }
  }
  for (auto& t : tables)
    if (!in.count(t)) throw Error("DisconnectedModels", "no join path reaches " + t);
  return tree;
}

namespace {

bool is_range(const std::string& op) { return op == "<" || op == "<=" || op == ">" || op == ">="; }

Value coerce(const Value& v, const ColumnMeta& c, const std::string& op, const std::string& ref) {
  auto mismatch = [&] {
    return Error("TypeMismatch", fmt::format("{} {} {} does not type-check ({} column)", ref, op,
                                             value_to_string(v), to_string(c.data_type)));
  };
  bool numeric_value = std::holds_alternative<int64_t>(v) || std::holds_alternative<double>(v);
  if (is_numeric(c.data_type)) {
    if (numeric_value) return v;
    if (auto s = std::get_if<std::string>(&v)) {
      if (auto parsed = parse_as(*s, DataType::Decimal)) return *parsed;
    }
    throw mismatch();
  }
  if (is_temporal(c.data_type)) {
    auto s = std::get_if<std::string>(&v);
    if (s && (looks_date(*s) || looks_timestamp(*s))) return v;
    throw mismatch();
  }
  if (c.data_type == DataType::Boolean) {
    if (auto s = std::get_if<std::string>(&v); s && looks_boolean(*s)) return *parse_as(*s, DataType::Boolean);
    if (std::holds_alternative<bool>(v)) return v;
    throw mismatch();
  }
  if (is_range(op)) throw mismatch();
  return value_to_string(v);
}

std::string agg_alias(const ColumnExpr& c, const ContextGraph& g) {
  if (!c.alias.empty()) return c.alias;
  if (c.star || (c.distinct && c.agg == AggFunc::Count)) {
    const TableNode* t = g.table(c.table_id);
    return "count_" + (t ? t->physical_name : text::lower(c.table_id));
  }
  return fmt::format("{}_{}", to_string(c.agg), c.column);
}

void add_unique(std::vector<ColumnExpr>& v, ColumnExpr c) {
  if (std::find(v.begin(), v.end(), c) == v.end()) v.push_back(std::move(c));
}

bool same_source(const ColumnExpr& a, const ColumnExpr& b) {
  return a.table_id == b.table_id && a.column == b.column && a.agg == b.agg && a.star == b.star &&
         a.distinct == b.distinct && a.expression == b.expression;
}

}  // namespace

PlanNode compose_tree(const QuerySketch& sketch, const std::vector<Grounding>& groundings,
                      const JoinPath& path, const ContextGraph& graph) {
  bool joins = path.tables.size() > 1;
  auto measures = custom_measures(graph);

  std::vector<Predicate> preds;
  for (auto& g : groundings) {
    if (g.role != PhraseRole::Filter && g.role != PhraseRole::Time) continue;
    if (!g.target || g.target->kind != Target::Kind::Column) continue;
    const ColumnMeta* c = graph.column(g.target->column_ref());
    if (!c) throw Error("UnresolvedTarget", "unknown column " + g.target->ref());
    Predicate p;
    p.column = g.target->column_ref();
    p.pii = c->pii;
    if (g.role == PhraseRole::Time) {
      p.op = "range";
      if (!is_temporal(c->data_type)) throw Error("TypeMismatch", g.target->ref() + " is not a date column");
      p.value = g.value;
      p.upper = g.upper;
    } else if (g.comparator.empty() || !g.value) {
      p.op = "not_null";
    } else {
      p.op = g.comparator;
      p.value = coerce(*g.value, *c, g.comparator, g.target->ref());
    }
    if (std::find(preds.begin(), preds.end(), p) == preds.end()) preds.push_back(std::move(p));
  }

  bool aggregate = sketch.wants_aggregate;
  for (auto& g : groundings) {
    if (g.role == PhraseRole::Group) aggregate = true;
    if (g.role == PhraseRole::Select && (g.aggregate != AggFunc::None ||
                                         (g.target && g.target->kind == Target::Kind::Measure)))
      aggregate = true;
  }

  auto table_count = [&](const std::string& tid) {
    const TableNode* t = graph.table(tid);
    ColumnExpr c{tid};
    c.agg = AggFunc::Count;
    if (joins && t && !t->primary_key.empty()) {
      c.column = t->primary_key.front();
      c.distinct = true;
    } else {
      c.star = true;
    }
    return c;
  };

  std::vector<ColumnExpr> outputs, groups;
  auto select_expr = [&](const Grounding& g) -> std::optional<ColumnExpr> {
    if (g.pii_shadow) {
      ColumnExpr c{g.pii_shadow->table_id, g.pii_shadow->column};
      c.agg = g.aggregate;
      c.pii = true;
      return c;
    }
    const Target& t = *g.target;
    if (t.kind == Target::Kind::Table) {
      if (!aggregate) return std::nullopt;
      return table_count(t.table_id);
    }
    if (t.kind == Target::Kind::Measure) {
      for (auto& m : measures)
        if (m.source_table == t.table_id && m.name == t.name) {
          ColumnExpr c{t.table_id};
          c.expression = m.expression;
          c.alias = m.name;
          return c;
        }
      throw Error("UnresolvedTarget", "unknown measure " + t.ref());
    }
    const ColumnMeta* meta = graph.column(t.column_ref());
    if (!meta) throw Error("UnresolvedTarget", "unknown column " + t.ref());
    ColumnExpr c{t.table_id, t.name};
    c.pii = meta->pii;
    c.agg = g.aggregate;
    if (aggregate && c.agg == AggFunc::None && meta->role == ColumnRole::Measure && is_numeric(meta->data_type))
      c.agg = AggFunc::Sum;
    return c;
  };

  for (auto& g : groundings) {
    if (g.role != PhraseRole::Group || !g.target) continue;
    if (g.target->kind == Target::Kind::Table) {
      for (auto& c : entity_columns(*graph.table(g.target->table_id))) add_unique(groups, c);
    } else if (g.target->kind == Target::Kind::Column) {
      ColumnExpr c{g.target->table_id, g.target->name};
      c.pii = graph.column(g.target->column_ref())->pii;
      add_unique(groups, c);
    }
  }
  for (auto& g : groundings) {
    if (g.role != PhraseRole::Select) continue;
    if (!aggregate && g.target && g.target->kind == Target::Kind::Table) {
      for (auto& c : entity_columns(*graph.table(g.target->table_id))) add_unique(outputs, c);
      continue;
    }
    auto c = select_expr(g);
    if (!c) continue;
    if (aggregate && c->agg == AggFunc::None && c->expression.empty() && !c->pii) add_unique(groups, *c);
    else add_unique(outputs, *c);
  }

  std::vector<SortKey> order;
  for (auto& g : groundings) {
    if (g.role != PhraseRole::Order || !g.target) continue;
    ColumnExpr want;
    if (g.target->kind == Target::Kind::Table) {
      want = table_count(g.target->table_id);
    } else {
      Grounding as_select = g;
      auto c = select_expr(as_select);
      if (!c) continue;
      want = *c;
    }
    auto match = [&](std::vector<ColumnExpr>& v) -> const ColumnExpr* {
      for (auto& o : v)
        if (same_source(o, want)) return &o;
      return nullptr;
    };
    const ColumnExpr* hit = match(outputs);
    if (!hit) hit = match(groups);
    if (!hit) {
      if (aggregate && want.agg == AggFunc::None && want.expression.empty()) add_unique(groups, want);
      else add_unique(outputs, want);
      hit = match(outputs) ? match(outputs) : match(groups);
    }
    order.push_back({*hit, g.descending});
  }

  if (aggregate) {
    std::set<std::string> seen;
    for (auto& c : outputs) {
      if (c.agg == AggFunc::None && c.expression.empty()) continue;
      std::string base = agg_alias(c, graph);
      std::string alias = base;
      for (int i = 2; seen.count(alias); ++i) alias = fmt::format("{}_{}", base, i);
      seen.insert(alias);
      std::string old = c.alias;
      for (auto& k : order)
        if (same_source(k.expr, c) && k.expr.alias == old) k.expr.alias = alias;
      c.alias = alias;
    }
  }
  if (sketch.limit && order.empty() && aggregate) {
    for (auto& c : outputs)
      if (c.agg != AggFunc::None || !c.expression.empty()) {
        order.push_back({c, true});
        break;
      }
  }
  if (!order.empty()) {
    // ties resolve on the grouping or listed columns so LIMIT stays deterministic
    for (auto& c : aggregate ? groups : outputs) {
      if (c.agg != AggFunc::None || !c.expression.empty()) continue;
      bool present = std::any_of(order.begin(), order.end(), [&](auto& k) { return same_source(k.expr, c); });
      if (!present) order.push_back({c, false});
    }
  }

  PlanNode tree = join_tree(path.tables, path.edges);
  if (!preds.empty()) {
    PlanNode f;
    f.kind = NodeKind::Filter;
    f.predicates = std::move(preds);
    f.children.push_back(std::move(tree));
    tree = std::move(f);
  }
  PlanNode top;
  top.kind = aggregate ? NodeKind::Aggregate : NodeKind::Project;
  top.columns = std::move(outputs);
  if (aggregate) top.group_by = std::move(groups);
  else top.distinct = joins;
  top.children.push_back(std::move(tree));
  tree = std::move(top);
  if (!order.empty()) {
    PlanNode s;
    s.kind = NodeKind::Sort;
    s.order = std::move(order);
    s.children.push_back(std::move(tree));
    tree = std::move(s);
  }
  if (sketch.limit) {
    PlanNode l;
    l.kind = NodeKind::Limit;
    l.limit = *sketch.limit;
    l.children.push_back(std::move(tree));
    tree = std::move(l);
  }
  return tree;
}

}  // namespace tursio
