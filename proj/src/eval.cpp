#include "tursio/eval.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <sstream>

#include "tursio/sql_ast.hpp"
#include "tursio/text.hpp"

namespace tursio {

json components_to_json(const ComponentSets& c) {
  return {{"tables", c.tables},   {"joins", c.joins},       {"columns", c.columns},
          {"filters", c.filters}, {"group_by", c.group_by}, {"aggregates", c.aggregates}};
}

namespace {

using sql::Expr;
using sql::ExprKind;

/// What a name resolves to: a base column, optionally wrapped in an aggregate
/// computed inside a derived table.
struct Resolved {
  std::string column;  // "table.column", or the bare name when unresolvable
  std::string agg;     // lowercase aggregate applied inside a derived table
  bool star = false;
};

struct Relation {
  std::string table;  // base table, lowercase; empty for derived
  std::map<std::string, Resolved> outputs;
};

using Scope = std::map<std::string, Relation>;

class Canonicalizer {
 public:
  ComponentSets out;

  std::map<std::string, Resolved> statement(const sql::SelectStmt& s, bool top) {
    for (auto& c : s.ctes) ctes_[text::lower(c.name)] = statement(*c.query, false);
    Scope scope;
    for (auto& f : s.from) {
      Relation r;
      std::string name = text::lower(f.alias.empty() ? f.table : f.alias);
      if (f.subquery) {
        r.outputs = statement(*f.subquery, false);
      } else if (auto it = ctes_.find(text::lower(f.table)); it != ctes_.end()) {
        r.outputs = it->second;
      } else {
        r.table = text::lower(f.table);
        out.tables.insert(r.table);
      }
      scope[name] = std::move(r);
    }
    for (auto& f : s.from)
      if (f.on) conjuncts(*f.on, scope);
    if (s.where) conjuncts(*s.where, scope);
    if (s.having) conjuncts(*s.having, scope);

    std::map<std::string, Resolved> outputs;
    for (auto& item : s.items) {
      if (item.expr.kind == ExprKind::Star) continue;
      if (top) project(item.expr, scope);
      Resolved r = describe_output(item.expr, scope);
      std::string name = item.alias.empty() && item.expr.kind == ExprKind::Column ? text::lower(item.expr.name)
                                                                                  : text::lower(item.alias);
      if (!name.empty()) outputs[name] = r;
    }
    if (top)
      for (auto& g : s.group_by) {
        auto cols = columns_in(g, scope);
        out.group_by.insert(cols.begin(), cols.end());
      }
    if (s.union_next) statement(*s.union_next, top);
    return outputs;
  }

 private:
  std::map<std::string, std::map<std::string, Resolved>> ctes_;

  Resolved resolve(const Expr& e, const Scope& scope) const {
    std::string name = text::lower(e.name);
    auto from = [&](const Relation& r) -> Resolved {
      if (!r.table.empty()) return {r.table + "." + name, ""};
      if (auto it = r.outputs.find(name); it != r.outputs.end()) return it->second;
      return {name, ""};
    };
    if (!e.qualifier.empty()) {
      auto it = scope.find(text::lower(e.qualifier));
      if (it != scope.end()) return from(it->second);
      return {name, ""};
    }
    if (scope.size() == 1) return from(scope.begin()->second);
    for (auto& [_, r] : scope)
      if (r.table.empty() && r.outputs.count(name)) return from(r);
    return {name, ""};
  }

  std::vector<std::string> columns_in(const Expr& e, const Scope& scope) const {
    std::vector<std::string> cols;
    std::function<void(const Expr&)> walk = [&](const Expr& x) {
      if (x.kind == ExprKind::Column) {
        Resolved r = resolve(x, scope);
        if (!r.star) cols.push_back(r.column);
      }
      for (auto& a : x.args) walk(a);
    };
    walk(e);
    return cols;
  }

  Resolved describe_output(const Expr& e, const Scope& scope) const {
    if (e.kind == ExprKind::Column) return resolve(e, scope);
    if (e.kind == ExprKind::Func && sql::is_aggregate_function(e.name)) {
      std::string f = text::lower(e.name);
      if (e.args.empty() || e.args[0].kind == ExprKind::Star) return {"", f, true};
      Resolved inner = describe_output(e.args[0], scope);
      inner.agg = combine(f, inner.agg);
      return inner;
    }
    for (auto& a : e.args) {
      Resolved r = describe_output(a, scope);
      if (!r.column.empty() || r.star) return r;
    }
    return {};
  }

  static std::string combine(const std::string& outer, const std::string& inner) {
    if (inner.empty()) return outer;
    if (outer == "sum" || outer == "min" || outer == "max") return inner;
    return outer;
  }

  static std::string agg_text(const std::string& f, const Resolved& r) {
    return f + "(" + (r.star || r.column.empty() ? std::string("*") : r.column) + ")";
  }

  /// SUM(d.s) * 1.0 / SUM(d.c) over a derived SUM(x) and COUNT(x) reads as AVG(x).
  bool ratio_average(const Expr& e, const Scope& scope) {
    if (e.kind != ExprKind::Binary || e.name != "/") return false;
    const Expr* num = &e.args[0];
    if (num->kind == ExprKind::Binary && num->name == "*") {
      if (num->args[1].kind == ExprKind::Literal) num = &num->args[0];
      else if (num->args[0].kind == ExprKind::Literal) num = &num->args[1];
    }
    const Expr& den = e.args[1];
    auto inner = [&](const Expr& x) -> std::optional<Resolved> {
      if (x.kind != ExprKind::Func || x.name != "SUM" || x.args.size() != 1) return std::nullopt;
      if (x.args[0].kind != ExprKind::Column) return std::nullopt;
      return resolve(x.args[0], scope);
    };
    auto n = inner(*num), d = inner(den);
    if (!n || !d || n->agg != "sum" || d->agg != "count" || n->column != d->column) return false;
    out.aggregates.insert("avg(" + n->column + ")");
    out.columns.insert(n->column);
    return true;
  }

  void project(const Expr& e, const Scope& scope) {
    if (ratio_average(e, scope)) return;
    if (e.kind == ExprKind::Func && sql::is_aggregate_function(e.name)) {
      Resolved r = describe_output(e, scope);
      out.aggregates.insert(agg_text(r.agg, r));
      if (!r.star && !r.column.empty()) out.columns.insert(r.column);
      return;
    }
    if (e.kind == ExprKind::Column) {
      Resolved r = resolve(e, scope);
      if (!r.agg.empty()) out.aggregates.insert(agg_text(r.agg, r));
      out.columns.insert(r.column);
      return;
    }
    for (auto& a : e.args) project(a, scope);
  }

  std::string operand(const Expr& e, const Scope& scope) const {
    if (e.kind == ExprKind::Column) {
      Resolved r = resolve(e, scope);
      return r.agg.empty() ? r.column : agg_text(r.agg, r);
    }
    if (e.kind == ExprKind::Func && sql::is_aggregate_function(e.name)) {
      Resolved r = describe_output(e, scope);
      return agg_text(r.agg, r);
    }
    return "expr:" + text::lower(sql::render(e));
  }

  static std::string literal(const Expr& e) {
    switch (e.literal) {
      case sql::LiteralKind::Number: {
        auto v = parse_as(e.name, DataType::Decimal);
        return "number:" + (v ? fmt::format("{}", std::get<double>(*v)) : e.name);
      }
      case sql::LiteralKind::String:
        if (looks_date(e.name) || looks_timestamp(e.name)) return "date:" + e.name.substr(0, 10);
        return "string:" + text::lower(e.name);
      case sql::LiteralKind::Boolean: return "boolean:" + text::lower(e.name);
      case sql::LiteralKind::Null: return "null";
    }
    return "";
  }

  static std::string flip(const std::string& op) {
    if (op == "<") return ">";
    if (op == ">") return "<";
    if (op == "<=") return ">=";
    if (op == ">=") return "<=";
    return op;
  }

  static bool is_value(const Expr& e) {
    return e.kind == ExprKind::Literal || (e.kind == ExprKind::Unary && e.name == "-" && !e.args.empty() &&
                                           e.args[0].kind == ExprKind::Literal);
  }

  static std::string value_text(const Expr& e) {
    if (e.kind == ExprKind::Unary) {
      Expr neg = e.args[0];
      neg.name = "-" + neg.name;
      return literal(neg);
    }
    return literal(e);
  }

  void conjuncts(const Expr& e, const Scope& scope) {
    if (e.kind == ExprKind::Binary && e.name == "AND") {
      conjuncts(e.args[0], scope);
      conjuncts(e.args[1], scope);
      return;
    }
    if (e.kind == ExprKind::Binary && e.args.size() == 2) {
      const Expr& l = e.args[0];
      const Expr& r = e.args[1];
      if (e.name == "=" && l.kind == ExprKind::Column && r.kind == ExprKind::Column) {
        std::string a = operand(l, scope), b = operand(r, scope);
        if (a > b) std::swap(a, b);
        out.joins.insert(a + "=" + b);
        return;
      }
      if (is_value(r) && !is_value(l)) {
        out.filters.insert(operand(l, scope) + " " + text::lower(e.name) + " " + value_text(r));
        return;
      }
      if (is_value(l) && !is_value(r)) {
        out.filters.insert(operand(r, scope) + " " + flip(text::lower(e.name)) + " " + value_text(l));
        return;
      }
    }
    if (e.kind == ExprKind::IsNull) {
      out.filters.insert(operand(e.args[0], scope) + (e.negated ? " is not null" : " is null"));
      return;
    }
    if (e.kind == ExprKind::Between && !e.negated) {
      std::string c = operand(e.args[0], scope);
      out.filters.insert(c + " >= " + value_text(e.args[1]));
      out.filters.insert(c + " <= " + value_text(e.args[2]));
      return;
    }
    if (e.kind == ExprKind::InList) {
      std::vector<std::string> vals;
      for (size_t i = 1; i < e.args.size(); ++i) vals.push_back(value_text(e.args[i]));
      std::sort(vals.begin(), vals.end());
      out.filters.insert(operand(e.args[0], scope) + (e.negated ? " not in (" : " in (") + text::join(vals, ",") +
                         ")");
      return;
    }
    if (e.subquery) {
      statement(*e.subquery, false);
      return;
    }
    std::string rendered;
    try {
      rendered = text::lower(sql::render(e));
    } catch (const Error&) {
      rendered = "subquery";
    }
    out.filters.insert("expr:" + rendered);
  }
};

}  // namespace

ComponentSets canonicalize(std::string_view sql_text) {
  Canonicalizer c;
  c.statement(sql::parse_select(sql_text), true);
  return c.out;
}

double set_f1(const std::set<std::string>& p, const std::set<std::string>& r) {
  if (p.empty() && r.empty()) return 1.0;
  size_t tp = 0;
  for (auto& x : p) tp += r.count(x);
  if (tp == 0) return 0.0;
  double precision = static_cast<double>(tp) / static_cast<double>(p.size());
  double recall = static_cast<double>(tp) / static_cast<double>(r.size());
  return 2 * precision * recall / (precision + recall);
}

StructuralScore score_components(const ComponentSets& p, const ComponentSets& r) {
  StructuralScore s;
  s.tables = set_f1(p.tables, r.tables);
  s.joins = set_f1(p.joins, r.joins);
  s.columns = set_f1(p.columns, r.columns);
  s.filters = set_f1(p.filters, r.filters);
  s.group_by = set_f1(p.group_by, r.group_by);
  s.aggregates = set_f1(p.aggregates, r.aggregates);
  s.overall = (s.tables + s.joins + s.columns + s.filters + s.group_by + s.aggregates) / 6.0;
  return s;
}

StructuralScore score_structural(std::string_view predicted, std::string_view reference) {
  return score_components(canonicalize(predicted), canonicalize(reference));
}

json score_to_json(const StructuralScore& s) {
  return {{"tables", s.tables},     {"joins", s.joins},           {"columns", s.columns},
          {"filters", s.filters},   {"group_by", s.group_by},     {"aggregates", s.aggregates},
          {"overall", s.overall}};
}

std::vector<CorpusItem> parse_corpus(std::string_view jsonl) {
  std::vector<CorpusItem> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      CorpusItem item;
      item.question = j.at("question").get<std::string>();
      item.reference_sql = j.at("reference_sql").get<std::string>();
      if (j.contains("tags")) item.tags = j.at("tags").get<std::vector<std::string>>();
      out.push_back(std::move(item));
    } catch (const json::exception& e) {
      throw Error("MalformedDocument", fmt::format("corpus line {}: {}", lineno, e.what()));
    }
  }
  return out;
}

std::vector<CorpusItem> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("NotFound", "cannot open corpus " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_corpus(ss.str());
}

json run_corpus(const std::vector<CorpusItem>& corpus, const PreparedGraph& graph, Adjudicator& adjudicator,
                const PlannerOptions& options) {
  json per = json::array();
  StructuralScore sum;
  for (auto& item : corpus) {
    json row = {{"question", item.question}, {"tags", item.tags}, {"reference_sql", item.reference_sql}};
    StructuralScore s;
    PlanOutcome plan = plan_query(item.question, graph, adjudicator, options);
    if (plan.ok()) {
      row["sql"] = plan.sql;
      try {
        s = score_structural(plan.sql, item.reference_sql);
      } catch (const Error& e) {
        row["error"] = {{"stage", "score"}, {"code", e.code()}, {"message", e.what()}};
      }
    } else {
      row["sql"] = nullptr;
      row["error"] = {{"stage", plan.error->stage}, {"code", plan.error->code}, {"message", plan.error->message}};
    }
    row["scores"] = score_to_json(s);
    per.push_back(row);
    sum.tables += s.tables;
    sum.joins += s.joins;
    sum.columns += s.columns;
    sum.filters += s.filters;
    sum.group_by += s.group_by;
    sum.aggregates += s.aggregates;
    sum.overall += s.overall;
  }
  double n = corpus.empty() ? 1.0 : static_cast<double>(corpus.size());
  StructuralScore mean{sum.tables / n,  sum.joins / n,    sum.columns / n, sum.filters / n,
                       sum.group_by / n, sum.aggregates / n, sum.overall / n};
  json means = corpus.empty() ? json::object() : score_to_json(mean);
  return {{"count", corpus.size()}, {"per_question", per}, {"means", means}};
}

}  // namespace tursio
