#include "tursio/rules.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <map>
#include <set>

namespace tursio {

namespace {

/// The Project/Aggregate node of the single-input chain from the root.
PlanNode* core_node(PlanNode& root) {
  PlanNode* n = &root;
  while (n->kind == NodeKind::Limit || n->kind == NodeKind::Sort) {
    if (n->children.empty()) return nullptr;
    n = &n->children[0];
  }
  return n->kind == NodeKind::Project || n->kind == NodeKind::Aggregate ? n : nullptr;
}

bool column_is_pii(const ColumnExpr& c, const ContextGraph& g) {
  if (c.pii) return true;
  if (c.column.empty()) return false;
  const ColumnMeta* m = g.column({c.table_id, c.column});
  return m && m->pii;
}

template <typename T, typename Pred>
bool erase_if_any(std::vector<T>& v, Pred p) {
  auto it = std::remove_if(v.begin(), v.end(), p);
  bool changed = it != v.end();
  v.erase(it, v.end());
  return changed;
}

}  // namespace

bool scrub_pii(PlanNode& tree, const ContextGraph& g) {
  bool changed = false;
  auto pii = [&](const ColumnExpr& c) { return column_is_pii(c, g); };
  std::function<void(PlanNode&)> walk = [&](PlanNode& n) {
    bool outputs = erase_if_any(n.columns, pii);
    changed |= outputs;
    changed |= erase_if_any(n.group_by, pii);
    changed |= erase_if_any(n.order, [&](const SortKey& k) { return pii(k.expr); });
    changed |= erase_if_any(n.predicates, [&](const Predicate& p) {
      if (p.pii) return true;
      const ColumnMeta* m = p.column.column.empty() ? nullptr : g.column(p.column);
      return m && m->pii;
    });
    if (outputs && n.columns.empty() && (n.kind == NodeKind::Project || n.kind == NodeKind::Aggregate))
      throw Error("PiiOnlyQuery", "every requested output is a PII column");
    for (auto& c : n.children) walk(c);
  };
  walk(tree);
  // a Sort left without keys is dropped
  std::function<void(PlanNode&)> prune = [&](PlanNode& n) {
    while (n.kind == NodeKind::Sort && n.order.empty()) {
      PlanNode child = std::move(n.children[0]);
      n = std::move(child);
    }
    for (auto& c : n.children) prune(c);
  };
  prune(tree);
  return changed;
}

bool append_enforcer_rules(PlanNode& tree, const ContextGraph& g) {
  PlanNode* core = core_node(tree);
  if (!core || core->children.empty()) return false;
  std::vector<Predicate> extra;
  for (auto& t : scanned_tables(*core))
    for (auto& raw : enforcer_predicates(g, t)) {
      Predicate p;
      p.column = {t, ""};
      p.op = "raw";
      p.raw = raw;
      extra.push_back(std::move(p));
    }
  if (extra.empty()) return false;
  PlanNode& below = core->children[0];
  if (below.kind != NodeKind::Filter) {
    PlanNode f;
    f.kind = NodeKind::Filter;
    f.children.push_back(std::move(below));
    below = std::move(f);
  }
  for (auto& p : extra)
    if (std::find(below.predicates.begin(), below.predicates.end(), p) == below.predicates.end())
      below.predicates.push_back(p);
  return true;
}

namespace {

void collect_edges(const PlanNode& n, std::vector<JoinEdge>& out) {
  if (n.kind == NodeKind::Join && n.edge) out.push_back(*n.edge);
  for (auto& c : n.children) collect_edges(c, out);
}

/// Tables reachable from `start` without crossing `blocked` or leaving `allowed`.
std::set<std::string> reach(const std::string& start, const std::vector<JoinEdge>& edges,
                            const JoinEdge* blocked, const std::set<std::string>* allowed) {
  std::set<std::string> seen = {start};
  std::vector<std::string> stack = {start};
  while (!stack.empty()) {
    std::string cur = stack.back();
    stack.pop_back();
    for (auto& e : edges) {
      if (blocked && e == *blocked) continue;
      if (!e.touches(cur)) continue;
      const std::string& nxt = e.other(cur);
      if (allowed && !allowed->count(nxt)) continue;
      if (seen.insert(nxt).second) stack.push_back(nxt);
    }
  }
  return seen;
}

/// Tables beyond an edge that fans out when walking away from `root`.
void fan_out_beyond(const std::string& root, const std::vector<JoinEdge>& edges,
                    const std::set<std::string>* allowed, std::set<std::string>& out,
                    std::vector<JoinEdge>* fanning = nullptr) {
  std::set<std::string> visited = {root};
  std::vector<std::string> stack = {root};
  while (!stack.empty()) {
    std::string cur = stack.back();
    stack.pop_back();
    for (auto& e : edges) {
      if (!e.touches(cur)) continue;
      const std::string& nxt = e.other(cur);
      if (visited.count(nxt) || (allowed && !allowed->count(nxt))) continue;
      visited.insert(nxt);
      if (e.fans_out_from(cur)) {
        auto side = reach(nxt, edges, &e, allowed);
        out.insert(side.begin(), side.end());
        if (fanning) fanning->push_back(e);
        continue;
      }
      stack.push_back(nxt);
    }
  }
}

/// Edges on the path from `from` to `to` inside `allowed`, walked in that direction.
bool path_fans_out(const std::string& from, const std::string& to, const std::vector<JoinEdge>& edges,
                   const std::set<std::string>& allowed) {
  std::map<std::string, std::pair<std::string, const JoinEdge*>> parent;
  std::vector<std::string> queue = {from};
  parent[from] = {"", nullptr};
  for (size_t i = 0; i < queue.size(); ++i) {
    std::string cur = queue[i];
    for (auto& e : edges) {
      if (!e.touches(cur)) continue;
      const std::string& nxt = e.other(cur);
      if (!allowed.count(nxt) || parent.count(nxt)) continue;
      parent[nxt] = {cur, &e};
      queue.push_back(nxt);
    }
  }
  for (std::string cur = to; cur != from;) {
    auto [prev, e] = parent.at(cur);
    if (e->fans_out_from(prev)) return true;
    cur = prev;
  }
  return false;
}

bool roots_fan_out(const ColumnExpr& c) {
  if (!c.expression.empty()) return true;
  if (c.agg == AggFunc::Sum || c.agg == AggFunc::Avg) return true;
  return c.agg == AggFunc::Count && !c.distinct;
}

std::string unique_name(std::string base, std::set<std::string>& taken) {
  std::string name = base;
  for (int i = 2; taken.count(name); ++i) name = fmt::format("{}_{}", base, i);
  taken.insert(name);
  return name;
}

}  // namespace

bool rewrite_symmetric_aggregates(PlanNode& tree, const ContextGraph& g) {
  PlanNode* agg = core_node(tree);
  if (!agg || agg->kind != NodeKind::Aggregate || agg->children.empty()) return false;
  PlanNode* filter = agg->children[0].kind == NodeKind::Filter ? &agg->children[0] : nullptr;
  PlanNode& rel = filter ? filter->children[0] : agg->children[0];

  std::vector<std::string> tables = scanned_tables(rel);
  std::vector<JoinEdge> edges;
  collect_edges(rel, edges);
  if (edges.empty()) return false;

  std::set<std::string> roots;
  for (auto& c : agg->columns)
    if (roots_fan_out(c)) roots.insert(c.table_id);
  std::set<std::string> collapsed;
  for (auto& r : roots) fan_out_beyond(r, edges, nullptr, collapsed);
  if (collapsed.empty()) return false;

  std::vector<std::string> outer;
  for (auto& t : tables)
    if (!collapsed.count(t)) outer.push_back(t);
  if (outer.empty())
    throw Error("UnsupportedConstruct", "measures fan out in both directions of a join");

  for (auto& gcol : agg->group_by)
    if (collapsed.count(gcol.table_id))
      throw Error("UnsupportedConstruct",
                  fmt::format("cannot group by {}.{} on a pre-aggregated side", gcol.table_id, gcol.column));

  std::set<std::string> outer_set(outer.begin(), outer.end());
  std::set<std::string> assigned;
  std::map<std::string, PlanNode> substitutes;
  std::vector<std::string> join_tables = outer;
  std::vector<JoinEdge> join_edges;
  for (auto& e : edges)
    if (outer_set.count(e.left.table_id) && outer_set.count(e.right.table_id)) join_edges.push_back(e);

  std::set<std::string> relation_names;
  for (auto& t : g.tables) relation_names.insert(t.alias);

  for (auto& start : tables) {
    if (!collapsed.count(start) || assigned.count(start)) continue;
    auto comp = reach(start, edges, nullptr, &collapsed);
    assigned.insert(comp.begin(), comp.end());
    const JoinEdge* attach = nullptr;
    for (auto& e : edges) {
      bool l = comp.count(e.left.table_id) > 0, r = comp.count(e.right.table_id) > 0;
      bool lo = outer_set.count(e.left.table_id) > 0, ro = outer_set.count(e.right.table_id) > 0;
      if ((l && ro) || (r && lo)) {
        if (attach) throw Error("UnsupportedConstruct", "pre-aggregated side attaches twice");
        attach = &e;
      }
    }
    if (!attach) throw Error("UnsupportedConstruct", "pre-aggregated side is detached");
    const JoinSide& key_side = comp.count(attach->left.table_id) ? attach->left : attach->right;
    const std::string& key_table = key_side.table_id;

    PlanNode pre;
    pre.kind = NodeKind::PreAggregate;
    pre.table_id = unique_name(g.table(key_table)->alias + "_agg", relation_names);
    for (auto& k : key_side.columns) pre.group_by.push_back({key_table, k});
    std::set<std::string> partial_names;
    for (auto& k : key_side.columns) partial_names.insert(k);

    for (auto& c : agg->columns) {
      if (!comp.count(c.table_id)) continue;
      if (!c.expression.empty())
        throw Error("UnsupportedConstruct", "custom measure " + c.alias + " on a pre-aggregated side");
      if (roots_fan_out(c)) {
        std::set<std::string> beyond;
        fan_out_beyond(c.table_id, edges, &comp, beyond);
        if (!beyond.empty())
          throw Error("UnsupportedConstruct", "measure " + c.alias + " fans out inside its pre-aggregate");
      } else if (c.distinct && path_fans_out(c.table_id, key_table, edges, comp)) {
        throw Error("UnsupportedConstruct", "count " + c.alias + " fans out inside its pre-aggregate");
      }
      ColumnExpr outer_col{pre.table_id};
      outer_col.alias = c.alias;
      auto partial = [&](AggFunc f, std::string base) {
        ColumnExpr p = c;
        p.agg = f;
        p.alias = unique_name(std::move(base), partial_names);
        p.ratio_column.clear();
        pre.columns.push_back(p);
        return p.alias;
      };
      switch (c.agg) {
        case AggFunc::Sum:
          outer_col.agg = AggFunc::Sum;
          outer_col.column = partial(AggFunc::Sum, "sum_" + c.column);
          break;
        case AggFunc::Avg:
          outer_col.agg = AggFunc::Avg;
          outer_col.column = partial(AggFunc::Sum, "sum_" + c.column);
          outer_col.ratio_column = partial(AggFunc::Count, "cnt_" + c.column);
          break;
        case AggFunc::Min:
        case AggFunc::Max:
          outer_col.agg = c.agg;
          outer_col.column = partial(c.agg, std::string(to_string(c.agg)) + "_" + c.column);
          break;
        case AggFunc::Count:
          outer_col.agg = AggFunc::Sum;
          if (c.distinct && comp.size() == 1 && g.table(c.table_id)->primary_key == std::vector{c.column}) {
            // a lone table: every row is one entity
            c.distinct = false;
            c.star = true;
            c.column.clear();
          }
          if (c.star || c.distinct)
            outer_col.column = partial(AggFunc::Count, "count_" + g.table(c.table_id)->physical_name);
          else
            outer_col.column = partial(AggFunc::Count, "cnt_" + c.column);
          break;
        case AggFunc::None:
          throw Error("UnsupportedConstruct", "plain column on a pre-aggregated side");
      }
      c = outer_col;
    }

    std::vector<std::string> inner_tables = {key_table};
    for (auto& t : tables)
      if (comp.count(t) && t != key_table) inner_tables.push_back(t);
    std::vector<JoinEdge> inner_edges;
    for (auto& e : edges)
      if (comp.count(e.left.table_id) && comp.count(e.right.table_id)) inner_edges.push_back(e);
    PlanNode inner = join_tree(inner_tables, inner_edges);
    std::vector<Predicate> moved;
    if (filter) {
      auto it = std::stable_partition(filter->predicates.begin(), filter->predicates.end(),
                                      [&](const Predicate& p) { return !comp.count(p.column.table_id); });
      moved.assign(it, filter->predicates.end());
      filter->predicates.erase(it, filter->predicates.end());
    }
    if (!moved.empty()) {
      PlanNode f;
      f.kind = NodeKind::Filter;
      f.predicates = std::move(moved);
      f.children.push_back(std::move(inner));
      inner = std::move(f);
    }
    pre.children.push_back(std::move(inner));
    substitutes[key_table] = std::move(pre);
    join_tables.push_back(key_table);
    join_edges.push_back(*attach);
  }

  PlanNode rebuilt = join_tree(join_tables, join_edges, substitutes);
  if (filter && filter->predicates.empty()) {
    agg->children[0] = std::move(rebuilt);
  } else if (filter) {
    filter->children[0] = std::move(rebuilt);
  } else {
    agg->children[0] = std::move(rebuilt);
  }
  // Sort keys carry copies of the outputs; refresh them by alias.
  std::function<void(PlanNode&)> refresh = [&](PlanNode& n) {
    if (n.kind == NodeKind::Sort)
      for (auto& k : n.order)
        for (auto& c : agg->columns)
          if (!k.expr.alias.empty() && k.expr.alias == c.alias) k.expr = c;
    if (&n != agg)
      for (auto& ch : n.children) refresh(ch);
  };
  refresh(tree);
  return true;
}

bool add_default_limit(PlanNode& tree, int64_t limit) {
  if (tree.kind == NodeKind::Limit) return false;
  PlanNode l;
  l.kind = NodeKind::Limit;
  l.limit = limit;
  l.children.push_back(std::move(tree));
  tree = std::move(l);
  return true;
}

RuleOutcome apply_rules(PlanNode tree, const ContextGraph& graph, const RuleConfig& config) {
  RuleOutcome out;
  if (scrub_pii(tree, graph)) out.fired.push_back("pii_scrub");
  if (append_enforcer_rules(tree, graph)) out.fired.push_back("enforcer_rules");
  if (rewrite_symmetric_aggregates(tree, graph)) out.fired.push_back("symmetric_aggregate");
  if (add_default_limit(tree, config.default_limit)) out.fired.push_back("default_limit");
  out.tree = std::move(tree);
  return out;
}

}  // namespace tursio
