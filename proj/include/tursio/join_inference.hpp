#pragma once

// Primary-key detection and inclusion-dependency join inference.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tursio/context_model.hpp"
#include "tursio/json_io.hpp"
#include "tursio/profiler.hpp"

namespace tursio {

class Adjudicator;
class Transcript;

struct JoinConfig {
  double w_inc = 0.7;
  double w_name = 0.3;
  double min_score = 0.7;
  double min_inclusion = 0.9;
};

struct JoinCandidate {
  ColumnRef fk_side;
  ColumnRef pk_side;
  double inclusion_coeff = 0.0;
  double name_similarity = 0.0;
  bool type_compatible = false;
  double score = 0.0;
  std::optional<std::string> pruned_reason;
  /// Adjudicator outcome once infer_joins has run: "Accept" or "Reject(<reason>)".
  std::optional<std::string> verdict;
  bool operator==(const JoinCandidate&) const = default;
};

json candidate_to_json(const JoinCandidate& c);

/// What inference needs to know about one table.
struct TableProfile {
  std::string table_id;
  std::string physical_name;
  std::vector<ColumnStats> stats;
  std::set<std::string> pii;               // excluded from both sides of every candidate
  std::vector<std::string> primary_keys;   // detect_primary_keys output, ranked
};

/// Unique, non-null integer or text columns, ranked by name bonus then position.
/// Columns in `excluded` are skipped.
std::vector<std::string> detect_primary_keys(const std::vector<ColumnStats>& stats,
                                             std::string_view table_name,
                                             const std::set<std::string>& excluded = {});

/// Fraction of distinct non-null fk values found in pk. Throws EmptyDomain.
double inclusion_coefficient(const std::vector<Value>& fk_values,
                             const std::vector<Value>& pk_values);

double name_similarity(std::string_view fk_table, std::string_view fk_column,
                       std::string_view pk_table, std::string_view pk_column);

/// Referenced-side columns: each table's top primary key, plus small code
/// domains (text, no nulls, 2..20 distinct values).
bool is_code_domain(const ColumnStats& s);

std::vector<JoinCandidate> generate_candidates(const std::vector<TableProfile>& tables,
                                               const JoinConfig& config = {});

/// Tags every candidate that fails a heuristic; returns all candidates with
/// survivors first, both halves in canonical order.
std::vector<JoinCandidate> prune_candidates(std::vector<JoinCandidate> cands,
                                            const std::vector<TableProfile>& tables,
                                            const JoinConfig& config = {});

struct InferenceResult {
  std::vector<JoinEdge> edges;
  std::vector<JoinCandidate> candidates;  // every candidate with tags and verdicts
};

/// Re-checks survivors by full containment query when `adapter` is given,
/// adjudicates them, and keeps the best accepted candidate per fk column.
InferenceResult infer_joins(const std::vector<TableProfile>& tables,
                            std::vector<JoinCandidate> pruned, Adjudicator& adjudicator,
                            Transcript& transcript, DataSourceAdapter* adapter,
                            const JoinConfig& config = {});

}  // namespace tursio
