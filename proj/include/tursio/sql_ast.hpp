#pragma once

// Read-only SQL front end: tokenizer, expression/SELECT parser and a renderer.
// Shared by custom-measure validation, rewrite validation, PII re-checks and
// the structural scorer.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tursio/value.hpp"

namespace tursio::sql {

struct SelectStmt;

enum class ExprKind {
  Column,
  Literal,
  Star,
  Func,
  Binary,
  Unary,
  Case,
  InList,
  InSubquery,
  Between,
  IsNull,
  Subquery,
  Exists,
};

enum class LiteralKind { Number, String, Null, Boolean };

struct WindowSpec;

struct Expr {
  ExprKind kind = ExprKind::Literal;
  std::string qualifier;  // Column / Star
  std::string name;       // Column name, function name (upper), operator, literal text
  LiteralKind literal = LiteralKind::Null;
  bool distinct = false;  // COUNT(DISTINCT x)
  bool negated = false;   // NOT IN, NOT BETWEEN, IS NOT NULL, NOT LIKE
  std::vector<Expr> args;
  std::shared_ptr<WindowSpec> over;
  std::shared_ptr<SelectStmt> subquery;

  static Expr column(std::string qualifier, std::string name);
  static Expr number(std::string text);
  static Expr string(std::string text);
  static Expr binary(std::string op, Expr lhs, Expr rhs);
  static Expr func(std::string name, std::vector<Expr> args);
};

struct WindowSpec {
  std::vector<Expr> partition_by;
  std::vector<std::pair<Expr, bool>> order_by;  // (expr, descending)
  std::string frame;                            // raw frame clause, if any
};

enum class JoinType { None, Inner, Left, Right, Full, Cross };

struct FromItem {
  JoinType join = JoinType::None;
  std::string table;  // base table or CTE name, as written
  std::string alias;  // empty when absent
  std::shared_ptr<SelectStmt> subquery;
  std::optional<Expr> on;
};

struct SelectItem {
  Expr expr;
  std::string alias;
};

struct Cte {
  std::string name;
  std::shared_ptr<SelectStmt> query;
};

struct SelectStmt {
  std::vector<Cte> ctes;
  bool distinct = false;
  std::vector<SelectItem> items;
  std::vector<FromItem> from;
  std::optional<Expr> where;
  std::vector<Expr> group_by;
  std::optional<Expr> having;
  std::vector<std::pair<Expr, bool>> order_by;
  std::optional<int64_t> limit;
  std::optional<int64_t> offset;
  std::shared_ptr<SelectStmt> union_next;
  bool union_all = false;
};

/// Parses a single read-only statement. Throws Error("ParseFailure") on malformed
/// input and Error("NotReadOnly") for anything other than SELECT / WITH ... SELECT.
SelectStmt parse_select(std::string_view sql);

/// Parses a standalone scalar or boolean expression (custom measures, enforcer rules).
Expr parse_expression(std::string_view text);

bool is_aggregate_function(std::string_view upper_name);

/// Calls `fn` for every column reference, descending into subqueries and windows.
void visit_columns(const Expr& e, const std::function<void(const Expr&)>& fn);
void visit_columns(const SelectStmt& s, const std::function<void(const Expr&)>& fn);

/// True when any aggregate function call appears outside a window.
bool contains_aggregate(const Expr& e);

struct RenderOptions {
  /// Qualifier applied to unqualified column references.
  std::string default_qualifier;
  /// Identifier quoting hook; identity when empty.
  std::function<std::string(const std::string&)> quote;
};

std::string render(const Expr& e, const RenderOptions& opts = {});

}  // namespace tursio::sql
