#pragma once

// Test-side oracles that do not go through the library under test: a plain
// comma splitter for the fixture CSVs, brute-force aggregation and an
// exhaustive connecting-tree search.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tursio/context_model.hpp"

namespace oracle {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  size_t col(const std::string& name) const;
  const std::string& at(size_t row, const std::string& name) const { return rows[row][col(name)]; }
};

/// Splits on commas and newlines only; the fixture never quotes.
Table read_table(const std::filesystem::path& path);

/// "12.34" -> 1234. Exact for the fixture's two-decimal amounts.
int64_t cents(const std::string& decimal);
/// Nearest cent of a computed double.
int64_t round_cents(double v);

/// Seed-42 fixture generated once per process under the temp directory.
const std::filesystem::path& fixture_dir();

/// Graph built from fixture_dir() with the deterministic adjudicator.
const tursio::ContextGraph& fixture_graph();

/// Minimum number of graph edges in a tree that connects every terminal, by
/// trying edge subsets in increasing size. nullopt when none connects.
std::optional<size_t> min_connecting_edges(const tursio::ContextGraph& graph,
                                           const std::vector<std::string>& terminals);

/// True when `edges` form one connected tree spanning every terminal.
bool connects(const std::vector<tursio::JoinEdge>& edges, const std::vector<std::string>& terminals);

/// Fresh empty directory under the temp directory.
std::filesystem::path temp_dir(const std::string& name);

struct CommandResult {
  int exit_code = -1;
  std::string out;  // stdout only
};

/// Runs `command` through the shell, stderr discarded.
CommandResult run_command(const std::string& command);

std::string read_file(const std::filesystem::path& path);

/// Same file names and byte-identical contents, non-recursive.
bool same_files(const std::filesystem::path& a, const std::filesystem::path& b, std::string* diff = nullptr);

/// Single-quoted for /bin/sh.
std::string shell_quote(const std::string& s);

}  // namespace oracle
