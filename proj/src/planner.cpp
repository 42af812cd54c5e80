#include "tursio/planner.hpp"

#include <algorithm>
#include <chrono>
#include <fmt/format.h>
#include <functional>
#include <map>

#include "tursio/grounding.hpp"
#include "tursio/sql_ast.hpp"
#include "tursio/text.hpp"

namespace tursio {

json graph_summary(const ContextGraph& g) {
  json tables = json::array();
  for (auto& t : g.tables) {
    json cols = json::array();
    for (auto& c : t.columns) {
      if (c.pii) continue;
      cols.push_back({{"name", c.name}, {"type", to_string(c.data_type)}, {"role", to_string(c.role)},
                      {"display_name", c.display_name}});
    }
    tables.push_back({{"table_id", t.table_id}, {"physical_name", t.physical_name}, {"alias", t.alias},
                      {"display_name", t.display_name}, {"columns", cols}});
  }
  json joins = json::array();
  for (auto& e : g.joins)
    joins.push_back({{"left", e.left.table_id + "." + text::join(e.left.columns, ",")},
                     {"right", e.right.table_id + "." + text::join(e.right.columns, ",")},
                     {"cardinality", to_string(e.cardinality)}});
  return {{"graph_id", g.graph_id}, {"version", g.version}, {"tables", tables}, {"joins", joins}};
}

PreparedGraph::PreparedGraph(ContextGraph g)
    : graph(std::move(g)), index(build_keyword_index(graph)), summary(graph_summary(graph)) {
  for (auto& [q, sketch] : sample_questions(graph)) samples.emplace_back(normalize_question(q), sketch);
}

namespace {

const TableNode* table_by_name(const ContextGraph& g, const std::string& name) {
  std::string n = text::lower(name);
  for (auto& t : g.tables)
    if (text::lower(t.physical_name) == n || text::lower(t.table_id) == n) return &t;
  return nullptr;
}

struct ColumnWalk {
  const ContextGraph& g;
  std::set<ColumnRef> refs{};
  std::vector<std::string> problems{};
  std::set<std::string> ctes{};
  std::vector<const std::map<std::string, std::string>*> outer{};

  void statement(const sql::SelectStmt& s) {
    for (auto& c : s.ctes) {
      statement(*c.query);
      ctes.insert(text::lower(c.name));
    }
    std::map<std::string, std::string> scope;  // lowercase alias -> table id, "" for derived
    for (auto& f : s.from) {
      if (f.subquery) {
        statement(*f.subquery);
        scope[text::lower(f.alias)] = "";
        continue;
      }
      std::string key = text::lower(f.alias.empty() ? f.table : f.alias);
      if (ctes.count(text::lower(f.table))) {
        scope[key] = "";
      } else if (const TableNode* t = table_by_name(g, f.table)) {
        scope[key] = t->table_id;
      } else {
        problems.push_back("UnknownTable");
        scope[key] = "";
      }
    }
    std::set<std::string> output_aliases;
    for (auto& i : s.items)
      if (!i.alias.empty()) output_aliases.insert(text::lower(i.alias));

    auto on_column = [&](const sql::Expr& e) {
      if (e.kind != sql::ExprKind::Column) return;
      std::string name = text::lower(e.name);
      if (!e.qualifier.empty()) {
        const std::string* tid = nullptr;
        if (auto it = scope.find(text::lower(e.qualifier)); it != scope.end()) tid = &it->second;
        for (auto* o : outer)
          if (auto oi = o->find(text::lower(e.qualifier)); !tid && oi != o->end()) tid = &oi->second;
        if (!tid) {
          problems.push_back("UnknownColumn");
          return;
        }
        if (tid->empty()) return;
        const TableNode* t = g.table(*tid);
        for (auto& c : t->columns)
          if (text::lower(c.name) == name) {
            refs.insert({t->table_id, c.name});
            return;
          }
        problems.push_back("UnknownColumn");
        return;
      }
      bool found = false, derived = false;
      for (auto& [alias, tid] : scope) {
        if (tid.empty()) {
          derived = true;
          continue;
        }
        for (auto& c : g.table(tid)->columns)
          if (text::lower(c.name) == name) {
            refs.insert({tid, c.name});
            found = true;
          }
      }
      if (!found && !derived && !output_aliases.count(name)) problems.push_back("UnknownColumn");
    };
    std::function<void(const sql::Expr&)> visit = [&](const sql::Expr& e) {
      on_column(e);
      for (auto& a : e.args) visit(a);
      if (e.over) {
        for (auto& p : e.over->partition_by) visit(p);
        for (auto& o : e.over->order_by) visit(o.first);
      }
      if (e.subquery) {
        outer.push_back(&scope);
        statement(*e.subquery);
        outer.pop_back();
      }
    };
    for (auto& i : s.items) visit(i.expr);
    for (auto& f : s.from)
      if (f.on) visit(*f.on);
    if (s.where) visit(*s.where);
    for (auto& e : s.group_by) visit(e);
    if (s.having) visit(*s.having);
    for (auto& [e, _] : s.order_by) visit(e);
    if (s.union_next) statement(*s.union_next);
  }
};

}  // namespace

std::set<ColumnRef> referenced_columns(std::string_view sql, const ContextGraph& graph) {
  ColumnWalk w{graph};
  w.statement(sql::parse_select(sql));
  return w.refs;
}

RewriteCheck validate_rewrite(std::string_view sql, const ContextGraph& graph) {
  ColumnWalk w{graph};
  try {
    w.statement(sql::parse_select(sql));
  } catch (const Error& e) {
    return {false, e.code()};
  }
  if (!w.problems.empty()) return {false, w.problems.front()};
  for (auto& r : w.refs)
    if (const ColumnMeta* c = graph.column(r); c && c->pii) return {false, "PiiIntroduced"};
  return {};
}

PlanOutcome plan_query(const std::string& question, const PreparedGraph& prepared, Adjudicator& adjudicator,
                       const PlannerOptions& options) {
  auto started = std::chrono::steady_clock::now();
  const ContextGraph& graph = prepared.graph;
  Transcript transcript;
  PlanOutcome out;
  json& audit = out.audit;
  audit = {{"question", question},
           {"graph_id", graph.graph_id},
           {"graph_version", graph.version},
           {"clock", options.clock},
           {"principal", options.principal},
           {"rewrite_applied", false}};
  std::string stage = "parse_intent";
  try {
    QuerySketch sketch;
    std::string source = "grammar";
    std::string normalized = normalize_question(question);
    auto sample = std::find_if(prepared.samples.begin(), prepared.samples.end(),
                               [&](auto& s) { return s.first == normalized; });
    if (sample != prepared.samples.end()) {
      sketch = sample->second;
      source = "sample_question";
    } else if (auto parsed = adjudicator.parse_intent(question, prepared.summary, transcript)) {
      sketch = *parsed;
      source = "adjudicator";
    } else {
      sketch = parse_intent_grammar(question, options.clock);
    }
    audit["sketch"] = sketch_to_json(sketch);
    audit["sketch_source"] = source;

    stage = "identify_tables";
    std::vector<std::string> phrases;
    if (sketch.fallback) {
      phrases.push_back(question);
    } else {
      for (auto& s : sketch.select_terms) phrases.push_back(s.phrase);
      for (auto& g : sketch.group_terms) phrases.push_back(g);
      for (auto& f : sketch.filter_terms) phrases.push_back(f.phrase);
      if (sketch.time_window) phrases.push_back(sketch.time_window->anchor);
      if (sketch.order_term) phrases.push_back(sketch.order_term->phrase);
    }
    TableSelection selection = identify_tables(phrases, graph, prepared.index);
    audit["tables_identified"] = selection.tables;

    stage = "ground";
    auto groundings = ground(sketch, selection.tables, graph, prepared.index);
    json gj = json::array();
    for (auto& g : groundings) gj.push_back(grounding_to_json(g));
    audit["groundings"] = gj;
    std::vector<std::string> used;
    auto use = [&](const std::string& t) {
      if (std::find(used.begin(), used.end(), t) == used.end()) used.push_back(t);
    };
    for (auto& t : selection.tables)
      for (auto& g : groundings)
        if (g.target && g.target->table_id == t) use(t);
    for (auto& g : groundings)
      if (g.target) use(g.target->table_id);
    if (used.empty()) used = selection.tables;
    JoinPath path = connect_tables(graph, used);
    json edges = json::array();
    for (auto& e : path.edges)
      edges.push_back(fmt::format("{}.{} = {}.{}", e.left.table_id, text::join(e.left.columns, ","),
                                  e.right.table_id, text::join(e.right.columns, ",")));
    audit["tables"] = path.tables;
    audit["join_path"] = edges;

    stage = "compose_tree";
    PlanNode tree = compose_tree(sketch, groundings, path, graph);

    stage = "apply_rules";
    RuleOutcome ruled = apply_rules(std::move(tree), graph, options.rules);
    audit["rules_fired"] = ruled.fired;
    if (auto problems = check_tree(ruled.tree, graph); !problems.empty())
      throw Error("UnsupportedConstruct", "invalid plan: " + problems.front());
    audit["tree"] = plan_to_json(ruled.tree);

    stage = "emit_sql";
    std::string sql = emit_sql(ruled.tree, graph, options.dialect);
    for (auto& ref : referenced_columns(sql, graph))
      if (graph.column(ref)->pii) throw Error("PiiOnlyQuery", "emitted SQL reads PII column " + ref.to_string());
    audit["emitted_sql"] = sql;

    stage = "rewrite_sql";
    if (!adjudicator.deterministic()) {
      std::string rewritten = adjudicator.rewrite_sql(sql, question, prepared.summary, transcript);
      if (rewritten != sql) {
        RewriteCheck check = validate_rewrite(rewritten, graph);
        if (check.ok) {
          sql = rewritten;
          audit["rewrite_applied"] = true;
        } else {
          audit["rewrite_rejected"] = "RewriteRejected: " + check.reason;
        }
      }
    }
    audit["sql"] = sql;
    out.sql = sql;
    out.tree = std::move(ruled.tree);
  } catch (const DetailedError& e) {
    out.error = PlannerError{stage, e.code(), e.what(), e.details()};
  } catch (const Error& e) {
    out.error = PlannerError{stage, e.code(), e.what(), json::object()};
  }
  if (out.error)
    audit["error"] = {{"stage", out.error->stage},
                      {"code", out.error->code},
                      {"message", out.error->message},
                      {"details", out.error->details}};
  audit["transcript"] = transcript.to_json();
  audit["latency_ms"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return out;
}

PlanOutcome plan_query(const std::string& question, const ContextGraph& graph, Adjudicator& adjudicator,
                       const PlannerOptions& options) {
  return plan_query(question, PreparedGraph(graph), adjudicator, options);
}

}  // namespace tursio
