#include "tursio/sql_emit.hpp"

#include <algorithm>
#include <array>
#include <fmt/format.h>
#include <map>

#include "tursio/sql_ast.hpp"
#include "tursio/text.hpp"

namespace tursio {

namespace {

constexpr std::array kReserved = {
    "all",    "and",      "as",     "asc",    "between", "by",     "case",        "cast",   "check",
    "column", "create",   "cross",  "date",   "default", "delete", "desc",        "distinct", "drop",
    "else",   "end",      "exists", "false",  "fetch",   "for",    "from",        "full",   "group",
    "having", "in",       "index",  "inner",  "insert",  "into",   "is",          "join",   "key",
    "left",   "like",     "limit",  "natural", "not",    "null",   "offset",      "on",     "or",
    "order",  "outer",    "primary", "references", "right", "rows", "select",     "set",    "table",
    "then",   "time",     "timestamp", "to",  "transaction", "true", "union",     "unique", "update",
    "user",   "using",    "values", "when",   "where",   "with",
};

}  // namespace

bool is_reserved_word(std::string_view word) {
  std::string w = text::lower(word);
  return std::find(kReserved.begin(), kReserved.end(), w) != kReserved.end();
}

std::string quote_identifier(const std::string& id, const Dialect& d) {
  bool plain = !id.empty() && (std::islower(static_cast<unsigned char>(id[0])) || id[0] == '_');
  for (char c : id)
    if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_'))
      plain = false;
  if (plain && !is_reserved_word(id)) return id;
  std::string out(1, d.quote);
  for (char c : id) {
    out += c;
    if (c == d.quote) out += c;
  }
  return out + d.quote;
}

namespace {

std::string literal(const Value& v) {
  return std::visit(
      [](auto&& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "NULL";
        else if constexpr (std::is_same_v<T, bool>) return x ? "TRUE" : "FALSE";
        else if constexpr (std::is_same_v<T, int64_t>) return std::to_string(x);
        else if constexpr (std::is_same_v<T, double>) return fmt::format("{}", x);
        else {
          std::string out = "'";
          for (char c : x) {
            if (c == '\'') out += "''";
            else out += c;
          }
          return out + "'";
        }
      },
      v);
}

class Emitter {
 public:
  Emitter(const ContextGraph& g, const Dialect& d) : g_(g), d_(d) {}

  std::string statement(const PlanNode& root) {
    const PlanNode* n = &root;
    const PlanNode* limit = nullptr;
    const PlanNode* sort = nullptr;
    if (n->kind == NodeKind::Limit) {
      limit = n;
      n = &n->children.at(0);
    }
    if (n->kind == NodeKind::Sort) {
      sort = n;
      n = &n->children.at(0);
    }
    if (n->kind != NodeKind::Project && n->kind != NodeKind::Aggregate)
      throw Error("UnsupportedConstruct", fmt::format("cannot emit a tree rooted at {}", to_string(n->kind)));
    return select(*n, sort, limit);
  }

 private:
  using Scope = std::map<std::string, std::string>;

  void scope_of(const PlanNode& n, Scope& s) const {
    if (n.kind == NodeKind::Scan) {
      s[n.table_id] = g_.table(n.table_id)->alias;
    } else if (n.kind == NodeKind::PreAggregate) {
      s[n.table_id] = n.table_id;
      for (auto& t : scanned_tables(n)) s[t] = n.table_id;
    } else {
      for (auto& c : n.children) scope_of(c, s);
    }
  }

  std::string qual(const Scope& s, const std::string& table) const {
    auto it = s.find(table);
    if (it == s.end()) throw Error("UnsupportedConstruct", "no relation for " + table);
    return it->second;
  }

  std::string col(const Scope& s, const std::string& table, const std::string& column) const {
    return qual(s, table) + "." + quote_identifier(column, d_);
  }

  sql::RenderOptions render_opts(const Scope& s, const std::string& table) const {
    sql::RenderOptions o;
    o.default_qualifier = qual(s, table);
    o.quote = [this](const std::string& id) { return quote_identifier(id, d_); };
    return o;
  }

  std::string expr(const Scope& s, const ColumnExpr& c) const {
    if (!c.expression.empty()) return sql::render(sql::parse_expression(c.expression), render_opts(s, c.table_id));
    if (c.star) return "COUNT(*)";
    std::string ref = col(s, c.table_id, c.column);
    if (!c.ratio_column.empty())
      return fmt::format("SUM({}) * 1.0 / SUM({})", ref, col(s, c.table_id, c.ratio_column));
    if (c.agg == AggFunc::None) return ref;
    return fmt::format("{}({}{})", text::upper(to_string(c.agg)), c.distinct ? "DISTINCT " : "", ref);
  }

  std::string item(const Scope& s, const ColumnExpr& c) const {
    std::string e = expr(s, c);
    return c.alias.empty() ? e : e + " AS " + quote_identifier(c.alias, d_);
  }

  std::string predicate(const Scope& s, const Predicate& p) const {
    if (p.op == "raw") {
      std::string r = sql::render(sql::parse_expression(p.raw), render_opts(s, p.column.table_id));
      return "(" + r + ")";
    }
    std::string ref = col(s, p.column.table_id, p.column.column);
    if (p.op == "not_null") return ref + " IS NOT NULL";
    if (p.op == "range")
      return fmt::format("{} >= {} AND {} < {}", ref, literal(*p.value), ref, literal(*p.upper));
    return fmt::format("{} {} {}", ref, p.op, literal(p.value.value_or(Value{})));
  }

  std::string relation(const PlanNode& n, const Scope& s) {
    switch (n.kind) {
      case NodeKind::Scan: {
        const TableNode* t = g_.table(n.table_id);
        return quote_identifier(t->physical_name, d_) + " AS " + t->alias;
      }
      case NodeKind::PreAggregate: {
        if (!d_.derived_tables)
          throw Error("UnsupportedConstruct", "dialect " + d_.name + " has no subqueries in FROM");
        return "(" + select(n, nullptr, nullptr) + ") AS " + n.table_id;
      }
      case NodeKind::Join: {
        const JoinEdge& e = *n.edge;
        std::vector<std::string> conds;
        for (size_t i = 0; i < e.left.columns.size() && i < e.right.columns.size(); ++i)
          conds.push_back(col(s, e.left.table_id, e.left.columns[i]) + " = " +
                          col(s, e.right.table_id, e.right.columns[i]));
        std::string right = relation(n.children[1], s);
        if (n.children[1].kind == NodeKind::Join) right = "(" + right + ")";
        return relation(n.children[0], s) + " JOIN " + right + " ON " + text::join(conds, " AND ");
      }
      default:
        throw Error("UnsupportedConstruct", fmt::format("{} inside FROM", to_string(n.kind)));
    }
  }

  std::string select(const PlanNode& core, const PlanNode* sort, const PlanNode* limit) {
    const PlanNode* below = &core.children.at(0);
    const PlanNode* filter = nullptr;
    if (below->kind == NodeKind::Filter) {
      filter = below;
      below = &below->children.at(0);
    }
    Scope s;
    scope_of(*below, s);

    std::vector<std::string> items;
    bool grouped = core.kind != NodeKind::Project;
    if (grouped)
      for (auto& c : core.group_by) items.push_back(item(s, c));
    for (auto& c : core.columns) items.push_back(item(s, c));
    if (items.empty()) throw Error("UnsupportedConstruct", "empty select list");

    std::string out = "SELECT ";
    if (core.distinct) out += "DISTINCT ";
    out += text::join(items, ", ") + " FROM " + relation(*below, s);
    if (filter && !filter->predicates.empty()) {
      std::vector<std::string> ps;
      for (auto& p : filter->predicates) ps.push_back(predicate(s, p));
      out += " WHERE " + text::join(ps, " AND ");
    }
    if (grouped && !core.group_by.empty()) {
      std::vector<std::string> gs;
      for (auto& c : core.group_by) gs.push_back(expr(s, c));
      out += " GROUP BY " + text::join(gs, ", ");
    }
    if (sort && !sort->order.empty()) {
      std::vector<std::string> os;
      for (auto& k : sort->order) {
        std::string e = k.expr.alias.empty() ? expr(s, k.expr) : quote_identifier(k.expr.alias, d_);
        os.push_back(k.descending ? e + " DESC" : e);
      }
      out += " ORDER BY " + text::join(os, ", ");
    }
    if (limit) {
      out += d_.fetch_first ? fmt::format(" FETCH FIRST {} ROWS ONLY", limit->limit)
                            : fmt::format(" LIMIT {}", limit->limit);
    }
    return out;
  }

  const ContextGraph& g_;
  const Dialect& d_;
};

}  // namespace

std::string emit_sql(const PlanNode& tree, const ContextGraph& graph, const Dialect& dialect) {
  return Emitter(graph, dialect).statement(tree);
}

}  // namespace tursio
