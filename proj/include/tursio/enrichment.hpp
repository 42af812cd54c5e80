#pragma once

// Column roles, display names, descriptions, aliases, PII flags and derived
// custom measures.

#include <set>
#include <string>
#include <vector>

#include "tursio/context_model.hpp"
#include "tursio/lexicon.hpp"
#include "tursio/profiler.hpp"

namespace tursio {

/// Measure iff numeric, not a key, not named like an id/code/date, and either
/// high-cardinality (distinct/sampled > 0.5) or named like a measure.
ColumnRole classify_column(const ColumnMeta& meta, const ColumnStats& stats, bool is_key);

std::string expand_name(std::string_view physical_name, const Lexicon& lexicon = Lexicon::bundled());

bool looks_ssn(std::string_view s);
bool looks_email(std::string_view s);
bool looks_e164_phone(std::string_view s);

/// Name in the PII lexicon, or at least 80% of sampled values PII-shaped.
bool detect_pii(const ColumnMeta& meta, const ColumnStats& stats,
                const Lexicon& lexicon = Lexicon::bundled());

/// Initials for multi-token names, else the first four characters; lowercase,
/// at most 24 characters, numeric suffix on collision.
std::string generate_alias(std::string_view physical_name, const std::set<std::string>& existing);

std::string describe_column(const ColumnMeta& column, const TableNode& table);
std::string describe_table(const TableNode& table);

/// sum_/avg_ per Measure column and row_count per table, as CustomMeasure
/// annotations authored by "system".
std::vector<Annotation> derive_custom_measures(const ContextGraph& graph,
                                               const std::string& created_at = "");

}  // namespace tursio
