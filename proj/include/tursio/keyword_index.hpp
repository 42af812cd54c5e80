#pragma once

// Token -> table predictor and join-path search used for table identification.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tursio/context_model.hpp"

namespace tursio {

struct IndexEntry {
  double table_weight = 0.0;   // from table name, alias, display name, table synonyms
  double column_weight = 0.0;  // from columns: names/aliases 1.0, descriptions 0.5, samples 0.7
  bool operator==(const IndexEntry&) const = default;
};

class KeywordIndex {
 public:
  void add(const std::string& token, const std::string& table_id, double weight, bool table_level);
  /// Per-table entries for a stemmed token; empty when absent.
  const std::map<std::string, IndexEntry>& lookup(const std::string& token) const;
  /// max(table_weight, column_weight) per table.
  std::map<std::string, double> weights(const std::string& token) const;
  const std::map<std::string, std::map<std::string, IndexEntry>>& entries() const { return map_; }

 private:
  std::map<std::string, std::map<std::string, IndexEntry>> map_;
};

/// PII columns and foreign-key-side join columns are not indexed.
KeywordIndex build_keyword_index(const ContextGraph& graph);

/// Join columns that are not their table's primary key.
std::set<ColumnRef> foreign_key_columns(const ContextGraph& graph);

struct JoinPath {
  std::vector<std::string> tables;  // terminals first (given order), then intermediates sorted
  std::vector<JoinEdge> edges;      // spanning tree, sorted canonically
};

/// Fewest-edge tree connecting `terminals`; ties go to the larger minimum edge
/// confidence, then to the lexicographically smaller set of added tables.
/// Throws Error("DisconnectedModels").
JoinPath connect_tables(const ContextGraph& graph, const std::vector<std::string>& terminals);

struct TableSelection {
  std::vector<std::string> tables;          // selected, by weight desc then id
  std::map<std::string, double> weights;    // every table hit
  JoinPath path;
};

/// Stemmed content tokens of `phrases`: stopwords, grammar words and tokens
/// with digits removed.
std::vector<std::string> content_tokens(const std::vector<std::string>& phrases);

/// Selects tables whose summed hit weight reaches 1.0 and connects them.
/// A column-level hit shared by k tables counts 1/k toward each.
/// Throws Error("NoTableMatch") or Error("DisconnectedModels").
TableSelection identify_tables(const std::vector<std::string>& phrases, const ContextGraph& graph,
                               const KeywordIndex& index);

}  // namespace tursio
