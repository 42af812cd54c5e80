#include "tursio/sql_ast.hpp"

#include <array>
#include <cctype>
#include <fmt/format.h>

#include "tursio/text.hpp"

namespace tursio::sql {

Expr Expr::column(std::string qualifier, std::string name) {
  Expr e;
  e.kind = ExprKind::Column;
  e.qualifier = std::move(qualifier);
  e.name = std::move(name);
  return e;
}

Expr Expr::number(std::string text) {
  Expr e;
  e.kind = ExprKind::Literal;
  e.literal = LiteralKind::Number;
  e.name = std::move(text);
  return e;
}

Expr Expr::string(std::string text) {
  Expr e;
  e.kind = ExprKind::Literal;
  e.literal = LiteralKind::String;
  e.name = std::move(text);
  return e;
}

Expr Expr::binary(std::string op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = ExprKind::Binary;
  e.name = std::move(op);
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  return e;
}

Expr Expr::func(std::string name, std::vector<Expr> args) {
  Expr e;
  e.kind = ExprKind::Func;
  e.name = std::move(name);
  e.args = std::move(args);
  return e;
}

namespace {

enum class Tok { Ident, QuotedIdent, Number, String, Symbol, End };

struct Token {
  Tok kind;
  std::string text;   // identifiers keep original case; symbols verbatim
  std::string upper;  // uppercased identifier text for keyword checks
  size_t pos;
};

[[noreturn]] void fail(const std::string& msg, size_t pos) {
  throw Error("ParseFailure", fmt::format("SQL parse error at offset {}: {}", pos, msg));
}

std::vector<Token> tokenize(std::string_view in) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < in.size()) {
    unsigned char c = static_cast<unsigned char>(in[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < in.size() && in[i + 1] == '-') {
      while (i < in.size() && in[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < in.size() && in[i + 1] == '*') {
      auto end = in.find("*/", i + 2);
      if (end == std::string_view::npos) fail("unterminated comment", i);
      i = end + 2;
      continue;
    }
    size_t start = i;
    if (std::isalpha(c) || c == '_') {
      while (i < in.size() &&
             (std::isalnum(static_cast<unsigned char>(in[i])) || in[i] == '_' || in[i] == '$'))
        ++i;
      std::string t(in.substr(start, i - start));
      out.push_back({Tok::Ident, t, text::upper(t), start});
      continue;
    }
    if (std::isdigit(c) || (c == '.' && i + 1 < in.size() &&
                            std::isdigit(static_cast<unsigned char>(in[i + 1])))) {
      while (i < in.size() && (std::isdigit(static_cast<unsigned char>(in[i])) || in[i] == '.'))
        ++i;
      if (i < in.size() && (in[i] == 'e' || in[i] == 'E')) {
        size_t j = i + 1;
        if (j < in.size() && (in[j] == '+' || in[j] == '-')) ++j;
        if (j < in.size() && std::isdigit(static_cast<unsigned char>(in[j]))) {
          i = j;
          while (i < in.size() && std::isdigit(static_cast<unsigned char>(in[i]))) ++i;
        }
      }
      out.push_back({Tok::Number, std::string(in.substr(start, i - start)), "", start});
      continue;
    }
    if (c == '\'') {
      std::string s;
      ++i;
      bool closed = false;
      while (i < in.size()) {
        if (in[i] == '\'') {
          if (i + 1 < in.size() && in[i + 1] == '\'') {
            s.push_back('\'');
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        s.push_back(in[i++]);
      }
      if (!closed) fail("unterminated string literal", start);
      out.push_back({Tok::String, s, "", start});
      continue;
    }
    if (c == '"' || c == '`' || c == '[') {
      char close = c == '[' ? ']' : static_cast<char>(c);
      auto end = in.find(close, i + 1);
      if (end == std::string_view::npos) fail("unterminated quoted identifier", start);
      std::string t(in.substr(i + 1, end - i - 1));
      out.push_back({Tok::QuotedIdent, t, text::upper(t), start});
      i = end + 1;
      continue;
    }
    static const std::array<std::string_view, 6> kTwo = {"<=", ">=", "<>", "!=", "||", "::"};
    bool matched = false;
    for (auto two : kTwo) {
      if (in.substr(i, 2) == two) {
        out.push_back({Tok::Symbol, std::string(two), "", start});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("(),.*=<>+-/%;").find(static_cast<char>(c)) != std::string_view::npos) {
      out.push_back({Tok::Symbol, std::string(1, static_cast<char>(c)), "", start});
      ++i;
      continue;
    }
    fail(fmt::format("unexpected character '{}'", static_cast<char>(c)), i);
  }
  out.push_back({Tok::End, "", "", in.size()});
  return out;
}

bool is_reserved(std::string_view up) {
  static const std::array<std::string_view, 44> kReserved = {
      "SELECT", "FROM",   "WHERE", "GROUP",  "BY",      "HAVING",    "ORDER", "LIMIT",  "OFFSET",
      "JOIN",   "INNER",  "LEFT",  "RIGHT",  "FULL",    "OUTER",     "CROSS", "ON",     "AS",
      "AND",    "OR",     "NOT",   "IN",     "BETWEEN", "LIKE",      "IS",    "NULL",   "UNION",
      "CASE",   "WHEN",   "THEN",  "ELSE",   "END",     "DISTINCT",  "ASC",   "DESC",   "WITH",
      "EXISTS", "OVER",   "ALL",   "USING",  "NATURAL", "INTERSECT", "EXCEPT", "WINDOW"};
  for (auto r : kReserved)
    if (r == up) return true;
  return false;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  SelectStmt statement() {
    static const std::array<std::string_view, 14> kWrite = {
        "INSERT", "UPDATE", "DELETE", "DROP",  "CREATE", "ALTER",   "TRUNCATE",
        "MERGE",  "GRANT",  "REVOKE", "ATTACH", "DETACH", "REPLACE", "PRAGMA"};
    for (auto w : kWrite)
      if (peek().kind == Tok::Ident && peek().upper == w)
        throw Error("NotReadOnly", fmt::format("statement '{}' is not read-only", w));
    if (!(is_kw("SELECT") || is_kw("WITH") || is_sym("(")))
      fail("expected SELECT", peek().pos);
    SelectStmt s = select_with_ctes();
    accept_sym(";");
    if (peek().kind != Tok::End) {
      if (peek().kind == Tok::Ident) {
        for (auto w : kWrite)
          if (peek().upper == w) throw Error("NotReadOnly", "multiple statements are not allowed");
      }
      fail("trailing input '" + peek().text + "'", peek().pos);
    }
    return s;
  }

  Expr standalone_expr() {
    Expr e = expr();
    if (peek().kind != Tok::End) fail("trailing input '" + peek().text + "'", peek().pos);
    return e;
  }

 private:
  const Token& peek(size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  bool is_kw(std::string_view kw, size_t k = 0) const {
    return peek(k).kind == Tok::Ident && peek(k).upper == kw;
  }
  bool is_sym(std::string_view sym, size_t k = 0) const {
    return peek(k).kind == Tok::Symbol && peek(k).text == sym;
  }
  bool accept_kw(std::string_view kw) {
    if (!is_kw(kw)) return false;
    ++pos_;
    return true;
  }
  bool accept_sym(std::string_view sym) {
    if (!is_sym(sym)) return false;
    ++pos_;
    return true;
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail(fmt::format("expected {}", kw), peek().pos);
  }
  void expect_sym(std::string_view sym) {
    if (!accept_sym(sym)) fail(fmt::format("expected '{}'", sym), peek().pos);
  }

  std::string identifier() {
    const Token& t = peek();
    if (t.kind == Tok::QuotedIdent || (t.kind == Tok::Ident && !is_reserved(t.upper))) {
      ++pos_;
      return t.text;
    }
    fail("expected identifier", t.pos);
  }

  SelectStmt select_with_ctes() {
    std::vector<Cte> ctes;
    if (accept_kw("WITH")) {
      accept_kw("RECURSIVE");
      do {
        Cte cte;
        cte.name = identifier();
        if (accept_sym("(")) {  // column list
          do identifier();
          while (accept_sym(","));
          expect_sym(")");
        }
        expect_kw("AS");
        expect_sym("(");
        cte.query = std::make_shared<SelectStmt>(select_with_ctes());
        expect_sym(")");
        ctes.push_back(std::move(cte));
      } while (accept_sym(","));
    }
    SelectStmt s = select_core();
    s.ctes = std::move(ctes);
    return s;
  }

  SelectStmt select_core() {
    if (accept_sym("(")) {
      SelectStmt inner = select_with_ctes();
      expect_sym(")");
      return inner;
    }
    expect_kw("SELECT");
    SelectStmt s;
    if (accept_kw("DISTINCT")) s.distinct = true;
    else accept_kw("ALL");
    do {
      SelectItem item;
      item.expr = expr();
      if (accept_kw("AS")) item.alias = identifier();
      else if (peek().kind == Tok::QuotedIdent ||
               (peek().kind == Tok::Ident && !is_reserved(peek().upper)))
        item.alias = identifier();
      s.items.push_back(std::move(item));
    } while (accept_sym(","));

    if (accept_kw("FROM")) from_clause(s);
    if (accept_kw("WHERE")) s.where = expr();
    if (accept_kw("GROUP")) {
      expect_kw("BY");
      do s.group_by.push_back(expr());
      while (accept_sym(","));
    }
    if (accept_kw("HAVING")) s.having = expr();
    if (is_kw("UNION") || is_kw("INTERSECT") || is_kw("EXCEPT")) {
      next();
      s.union_all = accept_kw("ALL");
      s.union_next = std::make_shared<SelectStmt>(select_core());
      return s;
    }
    if (accept_kw("ORDER")) {
      expect_kw("BY");
      do {
        Expr e = expr();
        bool desc = false;
        if (accept_kw("DESC")) desc = true;
        else accept_kw("ASC");
        if (accept_kw("NULLS")) {
          if (!accept_kw("FIRST")) expect_kw("LAST");
        }
        s.order_by.emplace_back(std::move(e), desc);
      } while (accept_sym(","));
    }
    if (accept_kw("LIMIT")) {
      s.limit = integer();
      if (accept_kw("OFFSET")) s.offset = integer();
      else if (accept_sym(",")) {  // LIMIT offset, count
        s.offset = s.limit;
        s.limit = integer();
      }
    }
    if (accept_kw("OFFSET")) s.offset = integer();
    if (accept_kw("FETCH")) {
      if (!accept_kw("FIRST")) expect_kw("NEXT");
      s.limit = integer();
      if (!accept_kw("ROWS")) expect_kw("ROW");
      expect_kw("ONLY");
    }
    return s;
  }

  int64_t integer() {
    const Token& t = next();
    if (t.kind != Tok::Number || !looks_integer(t.text)) fail("expected integer", t.pos);
    return std::stoll(t.text);
  }

  void from_clause(SelectStmt& s) {
    s.from.push_back(from_item(JoinType::None));
    while (true) {
      if (accept_sym(",")) {
        s.from.push_back(from_item(JoinType::Cross));
        continue;
      }
      JoinType jt;
      if (accept_kw("JOIN")) jt = JoinType::Inner;
      else if (accept_kw("INNER")) {
        expect_kw("JOIN");
        jt = JoinType::Inner;
      } else if (is_kw("LEFT") || is_kw("RIGHT") || is_kw("FULL")) {
        std::string k = next().upper;
        accept_kw("OUTER");
        expect_kw("JOIN");
        jt = k == "LEFT" ? JoinType::Left : (k == "RIGHT" ? JoinType::Right : JoinType::Full);
      } else if (accept_kw("CROSS")) {
        expect_kw("JOIN");
        jt = JoinType::Cross;
      } else {
        break;
      }
      FromItem item = from_item(jt);
      if (jt != JoinType::Cross) {
        if (accept_kw("ON")) {
          item.on = expr();
        } else if (accept_kw("USING")) {
          expect_sym("(");
          std::vector<std::string> cols;
          do cols.push_back(identifier());
          while (accept_sym(","));
          expect_sym(")");
          const FromItem& prev = s.from.back();
          std::string lq = prev.alias.empty() ? prev.table : prev.alias;
          std::string rq = item.alias.empty() ? item.table : item.alias;
          std::optional<Expr> cond;
          for (auto& c : cols) {
            Expr eq = Expr::binary("=", Expr::column(lq, c), Expr::column(rq, c));
            cond = cond ? Expr::binary("AND", std::move(*cond), std::move(eq)) : std::move(eq);
          }
          item.on = std::move(cond);
        } else {
          fail("expected ON", peek().pos);
        }
      }
      s.from.push_back(std::move(item));
    }
  }

  FromItem from_item(JoinType jt) {
    FromItem item;
    item.join = jt;
    if (accept_sym("(")) {
      item.subquery = std::make_shared<SelectStmt>(select_with_ctes());
      expect_sym(")");
    } else {
      item.table = identifier();
      if (accept_sym(".")) item.table = identifier();  // schema-qualified: keep table part
    }
    if (accept_kw("AS")) item.alias = identifier();
    else if (peek().kind == Tok::QuotedIdent ||
             (peek().kind == Tok::Ident && !is_reserved(peek().upper)))
      item.alias = identifier();
    if (item.subquery && item.alias.empty()) fail("subquery in FROM needs an alias", peek().pos);
    return item;
  }

  Expr expr() { return or_expr(); }

  Expr or_expr() {
    Expr lhs = and_expr();
    while (accept_kw("OR")) lhs = Expr::binary("OR", std::move(lhs), and_expr());
    return lhs;
  }

  Expr and_expr() {
    Expr lhs = not_expr();
    while (accept_kw("AND")) lhs = Expr::binary("AND", std::move(lhs), not_expr());
    return lhs;
  }

  Expr not_expr() {
    if (is_kw("NOT") && !is_kw("EXISTS", 1)) {
      next();
      Expr e;
      e.kind = ExprKind::Unary;
      e.name = "NOT";
      e.args.push_back(not_expr());
      return e;
    }
    return comparison();
  }

  Expr comparison() {
    Expr lhs = additive();
    while (true) {
      if (peek().kind == Tok::Symbol &&
          (peek().text == "=" || peek().text == "<>" || peek().text == "!=" ||
           peek().text == "<" || peek().text == ">" || peek().text == "<=" ||
           peek().text == ">=")) {
        std::string op = next().text;
        if (op == "!=") op = "<>";
        lhs = Expr::binary(op, std::move(lhs), additive());
        continue;
      }
      bool negated = false;
      size_t save = pos_;
      if (accept_kw("NOT")) negated = true;
      if (accept_kw("LIKE") || accept_kw("ILIKE")) {
        Expr e = Expr::binary("LIKE", std::move(lhs), additive());
        e.negated = negated;
        lhs = std::move(e);
        continue;
      }
      if (accept_kw("IN")) {
        expect_sym("(");
        Expr e;
        e.negated = negated;
        if (is_kw("SELECT") || is_kw("WITH")) {
          e.kind = ExprKind::InSubquery;
          e.args.push_back(std::move(lhs));
          e.subquery = std::make_shared<SelectStmt>(select_with_ctes());
        } else {
          e.kind = ExprKind::InList;
          e.args.push_back(std::move(lhs));
          do e.args.push_back(expr());
          while (accept_sym(","));
        }
        expect_sym(")");
        lhs = std::move(e);
        continue;
      }
      if (accept_kw("BETWEEN")) {
        Expr e;
        e.kind = ExprKind::Between;
        e.negated = negated;
        e.args.push_back(std::move(lhs));
        e.args.push_back(additive());
        expect_kw("AND");
        e.args.push_back(additive());
        lhs = std::move(e);
        continue;
      }
      pos_ = save;
      if (accept_kw("IS")) {
        Expr e;
        e.kind = ExprKind::IsNull;
        e.negated = accept_kw("NOT");
        expect_kw("NULL");
        e.args.push_back(std::move(lhs));
        lhs = std::move(e);
        continue;
      }
      return lhs;
    }
  }

  Expr additive() {
    Expr lhs = multiplicative();
    while (is_sym("+") || is_sym("-") || is_sym("||")) {
      std::string op = next().text;
      lhs = Expr::binary(op, std::move(lhs), multiplicative());
    }
    return lhs;
  }

  Expr multiplicative() {
    Expr lhs = unary();
    while (is_sym("*") || is_sym("/") || is_sym("%")) {
      std::string op = next().text;
      lhs = Expr::binary(op, std::move(lhs), unary());
    }
    return lhs;
  }

  Expr unary() {
    if (is_sym("-") || is_sym("+")) {
      std::string op = next().text;
      Expr inner = unary();
      if (op == "+") return inner;
      if (inner.kind == ExprKind::Literal && inner.literal == LiteralKind::Number) {
        inner.name = "-" + inner.name;
        return inner;
      }
      Expr e;
      e.kind = ExprKind::Unary;
      e.name = "-";
      e.args.push_back(std::move(inner));
      return e;
    }
    Expr e = primary();
    while (accept_sym("::")) {  // postgres cast: keep the value, drop the type
      identifier();
    }
    return e;
  }

  Expr primary() {
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      next();
      return Expr::number(t.text);
    }
    if (t.kind == Tok::String) {
      next();
      return Expr::string(t.text);
    }
    if (accept_sym("*")) {
      Expr e;
      e.kind = ExprKind::Star;
      return e;
    }
    if (accept_sym("(")) {
      if (is_kw("SELECT") || is_kw("WITH")) {
        Expr e;
        e.kind = ExprKind::Subquery;
        e.subquery = std::make_shared<SelectStmt>(select_with_ctes());
        expect_sym(")");
        return e;
      }
      Expr inner = expr();
      expect_sym(")");
      return inner;
    }
    if (t.kind == Tok::Ident) {
      if (t.upper == "NULL") {
        next();
        Expr e;
        e.kind = ExprKind::Literal;
        e.literal = LiteralKind::Null;
        e.name = "NULL";
        return e;
      }
      if (t.upper == "TRUE" || t.upper == "FALSE") {
        next();
        Expr e;
        e.kind = ExprKind::Literal;
        e.literal = LiteralKind::Boolean;
        e.name = t.upper;
        return e;
      }
      if ((t.upper == "DATE" || t.upper == "TIMESTAMP") && peek(1).kind == Tok::String) {
        next();
        return Expr::string(next().text);
      }
      if (t.upper == "EXISTS" || (t.upper == "NOT" && is_kw("EXISTS", 1))) {
        bool negated = t.upper == "NOT";
        if (negated) next();
        next();
        expect_sym("(");
        Expr e;
        e.kind = ExprKind::Exists;
        e.negated = negated;
        e.subquery = std::make_shared<SelectStmt>(select_with_ctes());
        expect_sym(")");
        return e;
      }
      if (t.upper == "CASE") return case_expr();
      if (t.upper == "CAST" && is_sym("(", 1)) {
        next();
        next();
        Expr inner = expr();
        expect_kw("AS");
        std::string type = identifier();
        if (accept_sym("(")) {
          do integer();
          while (accept_sym(","));
          expect_sym(")");
        }
        Expr e = Expr::func("CAST", {std::move(inner)});
        e.qualifier = text::upper(type);
        return e;
      }
    }
    if (t.kind == Tok::Ident || t.kind == Tok::QuotedIdent) {
      if (t.kind == Tok::Ident && is_reserved(t.upper)) fail("unexpected keyword " + t.text, t.pos);
      next();
      std::string first = t.text;
      if (t.kind == Tok::Ident && is_sym("(")) return call(text::upper(first));
      if (accept_sym(".")) {
        if (accept_sym("*")) {
          Expr e;
          e.kind = ExprKind::Star;
          e.qualifier = first;
          return e;
        }
        return Expr::column(first, identifier());
      }
      return Expr::column("", first);
    }
    fail("unexpected token '" + t.text + "'", t.pos);
  }

  Expr call(std::string name) {
    expect_sym("(");
    Expr e = Expr::func(std::move(name), {});
    if (!accept_sym(")")) {
      if (accept_kw("DISTINCT")) e.distinct = true;
      else accept_kw("ALL");
      do e.args.push_back(expr());
      while (accept_sym(","));
      expect_sym(")");
    }
    if (accept_kw("FILTER")) {
      expect_sym("(");
      expect_kw("WHERE");
      expr();
      expect_sym(")");
    }
    if (accept_kw("OVER")) {
      e.over = std::make_shared<WindowSpec>();
      expect_sym("(");
      if (accept_kw("PARTITION")) {
        expect_kw("BY");
        do e.over->partition_by.push_back(expr());
        while (accept_sym(","));
      }
      if (accept_kw("ORDER")) {
        expect_kw("BY");
        do {
          Expr k = expr();
          bool desc = accept_kw("DESC");
          if (!desc) accept_kw("ASC");
          e.over->order_by.emplace_back(std::move(k), desc);
        } while (accept_sym(","));
      }
      if (is_kw("ROWS") || is_kw("RANGE") || is_kw("GROUPS")) {
        int depth = 0;
        while (!(depth == 0 && is_sym(")")) && peek().kind != Tok::End) {
          if (is_sym("(")) ++depth;
          if (is_sym(")")) --depth;
          if (!e.over->frame.empty()) e.over->frame += ' ';
          e.over->frame += next().text;
        }
      }
      expect_sym(")");
    }
    return e;
  }

  Expr case_expr() {
    expect_kw("CASE");
    Expr e;
    e.kind = ExprKind::Case;
    // args: [operand-or-null-literal, when1, then1, ..., else?]; name = "ELSE" when present
    if (!is_kw("WHEN")) e.args.push_back(expr());
    else e.args.push_back(Expr{});
    while (accept_kw("WHEN")) {
      e.args.push_back(expr());
      expect_kw("THEN");
      e.args.push_back(expr());
    }
    if (e.args.size() < 3) fail("CASE without WHEN", peek().pos);
    if (accept_kw("ELSE")) {
      e.args.push_back(expr());
      e.name = "ELSE";
    }
    expect_kw("END");
    return e;
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
};

void visit_select(const SelectStmt& s, const std::function<void(const Expr&)>& fn);

}  // namespace

SelectStmt parse_select(std::string_view sql) {
  if (text::trim(sql).empty()) throw Error("ParseFailure", "empty SQL");
  Parser p(tokenize(sql));
  return p.statement();
}

Expr parse_expression(std::string_view text) {
  if (text::trim(text).empty()) throw Error("ParseFailure", "empty expression");
  Parser p(tokenize(text));
  return p.standalone_expr();
}

bool is_aggregate_function(std::string_view n) {
  return n == "SUM" || n == "AVG" || n == "COUNT" || n == "MIN" || n == "MAX";
}

void visit_columns(const Expr& e, const std::function<void(const Expr&)>& fn) {
  if (e.kind == ExprKind::Column) fn(e);
  for (auto& a : e.args) visit_columns(a, fn);
  if (e.over) {
    for (auto& p : e.over->partition_by) visit_columns(p, fn);
    for (auto& o : e.over->order_by) visit_columns(o.first, fn);
  }
  if (e.subquery) visit_select(*e.subquery, fn);
}

void visit_columns(const SelectStmt& s, const std::function<void(const Expr&)>& fn) {
  visit_select(s, fn);
}

namespace {

void visit_select(const SelectStmt& s, const std::function<void(const Expr&)>& fn) {
  for (auto& c : s.ctes) visit_select(*c.query, fn);
  for (auto& i : s.items) visit_columns(i.expr, fn);
  for (auto& f : s.from) {
    if (f.subquery) visit_select(*f.subquery, fn);
    if (f.on) visit_columns(*f.on, fn);
  }
  if (s.where) visit_columns(*s.where, fn);
  for (auto& g : s.group_by) visit_columns(g, fn);
  if (s.having) visit_columns(*s.having, fn);
  for (auto& o : s.order_by) visit_columns(o.first, fn);
  if (s.union_next) visit_select(*s.union_next, fn);
}

}  // namespace

bool contains_aggregate(const Expr& e) {
  if (e.kind == ExprKind::Func && is_aggregate_function(e.name) && !e.over) return true;
  if (e.kind == ExprKind::Subquery || e.kind == ExprKind::Exists) return false;
  for (auto& a : e.args)
    if (contains_aggregate(a)) return true;
  return false;
}

namespace {

std::string quote_or_plain(const RenderOptions& o, const std::string& id) {
  return o.quote ? o.quote(id) : id;
}

std::string render_string_literal(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "''";
    else out += c;
  }
  return out + "'";
}

int precedence(const Expr& e) {
  if (e.kind != ExprKind::Binary) return 10;
  const auto& op = e.name;
  if (op == "OR") return 1;
  if (op == "AND") return 2;
  if (op == "=" || op == "<>" || op == "<" || op == ">" || op == "<=" || op == ">=" ||
      op == "LIKE")
    return 4;
  if (op == "+" || op == "-" || op == "||") return 5;
  return 6;
}

}  // namespace

std::string render(const Expr& e, const RenderOptions& o) {
  switch (e.kind) {
    case ExprKind::Column: {
      std::string q = e.qualifier.empty() ? o.default_qualifier : e.qualifier;
      std::string col = quote_or_plain(o, e.name);
      return q.empty() ? col : q + "." + col;
    }
    case ExprKind::Literal:
      if (e.literal == LiteralKind::String) return render_string_literal(e.name);
      return e.name;
    case ExprKind::Star:
      return e.qualifier.empty() ? "*" : e.qualifier + ".*";
    case ExprKind::Func: {
      std::string out = e.name + "(";
      if (e.name == "CAST" && e.args.size() == 1)
        return "CAST(" + render(e.args[0], o) + " AS " + e.qualifier + ")";
      if (e.distinct) out += "DISTINCT ";
      for (size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += ", ";
        out += render(e.args[i], o);
      }
      out += ")";
      if (e.over) {
        out += " OVER (";
        std::vector<std::string> parts;
        if (!e.over->partition_by.empty()) {
          std::vector<std::string> ps;
          for (auto& p : e.over->partition_by) ps.push_back(render(p, o));
          parts.push_back("PARTITION BY " + text::join(ps, ", "));
        }
        if (!e.over->order_by.empty()) {
          std::vector<std::string> os;
          for (auto& [k, desc] : e.over->order_by) os.push_back(render(k, o) + (desc ? " DESC" : ""));
          parts.push_back("ORDER BY " + text::join(os, ", "));
        }
        if (!e.over->frame.empty()) parts.push_back(e.over->frame);
        out += text::join(parts, " ") + ")";
      }
      return out;
    }
    case ExprKind::Binary: {
      auto side = [&](const Expr& child) {
        std::string s = render(child, o);
        return precedence(child) < precedence(e) ? "(" + s + ")" : s;
      };
      std::string op = e.name;
      if (op == "LIKE" && e.negated) op = "NOT LIKE";
      return side(e.args[0]) + " " + op + " " + side(e.args[1]);
    }
    case ExprKind::Unary:
      if (e.name == "NOT") return "NOT (" + render(e.args[0], o) + ")";
      return "-" + render(e.args[0], o);
    case ExprKind::Case: {
      std::string out = "CASE";
      if (e.args[0].kind != ExprKind::Literal || e.args[0].literal != LiteralKind::Null ||
          !e.args[0].name.empty())
        out += " " + render(e.args[0], o);
      size_t end = e.name == "ELSE" ? e.args.size() - 1 : e.args.size();
      for (size_t i = 1; i + 1 < end; i += 2)
        out += " WHEN " + render(e.args[i], o) + " THEN " + render(e.args[i + 1], o);
      if (e.name == "ELSE") out += " ELSE " + render(e.args.back(), o);
      return out + " END";
    }
    case ExprKind::InList: {
      std::vector<std::string> items;
      for (size_t i = 1; i < e.args.size(); ++i) items.push_back(render(e.args[i], o));
      return render(e.args[0], o) + (e.negated ? " NOT IN (" : " IN (") + text::join(items, ", ") +
             ")";
    }
    case ExprKind::Between:
      return render(e.args[0], o) + (e.negated ? " NOT BETWEEN " : " BETWEEN ") +
             render(e.args[1], o) + " AND " + render(e.args[2], o);
    case ExprKind::IsNull:
      return render(e.args[0], o) + (e.negated ? " IS NOT NULL" : " IS NULL");
    case ExprKind::InSubquery:
    case ExprKind::Subquery:
    case ExprKind::Exists:
      throw Error("UnsupportedConstruct", "rendering nested subqueries is not supported");
  }
  return {};
}

}  // namespace tursio::sql
