#pragma once

// Serializes a rule-processed plan tree to single-line SQL.

#include <string>

#include "tursio/plan_tree.hpp"

namespace tursio {

struct Dialect {
  std::string name = "ansi";
  char quote = '"';
  bool fetch_first = false;       // FETCH FIRST n ROWS ONLY instead of LIMIT n
  bool derived_tables = true;     // subqueries in FROM
};

bool is_reserved_word(std::string_view word);

/// Quotes identifiers that are reserved or not plain lowercase names.
std::string quote_identifier(const std::string& id, const Dialect& dialect = {});

/// Byte-stable for a given tree. Throws Error("UnsupportedConstruct").
std::string emit_sql(const PlanNode& tree, const ContextGraph& graph, const Dialect& dialect = {});

}  // namespace tursio
