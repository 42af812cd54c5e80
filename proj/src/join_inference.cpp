#include "tursio/join_inference.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <unordered_set>

#include "tursio/adjudicator.hpp"
#include "tursio/text.hpp"

namespace tursio {

json candidate_to_json(const JoinCandidate& c) {
  json j = {{"fk_side", c.fk_side.to_string()},
            {"pk_side", c.pk_side.to_string()},
            {"inclusion_coeff", c.inclusion_coeff},
            {"name_similarity", c.name_similarity},
            {"type_compatible", c.type_compatible},
            {"score", c.score}};
  j["pruned_reason"] = c.pruned_reason ? json(*c.pruned_reason) : json(nullptr);
  j["verdict"] = c.verdict ? json(*c.verdict) : json(nullptr);
  return j;
}

namespace {

bool unique_non_null(const ColumnStats& s) {
  return s.sampled_rows > 0 && s.null_count == 0 && s.distinct_count == s.sampled_rows;
}

const ColumnStats* find_stats(const TableProfile& t, std::string_view column) {
  for (auto& s : t.stats)
    if (s.column == column) return &s;
  return nullptr;
}

const TableProfile* find_table(const std::vector<TableProfile>& tables, std::string_view id) {
  for (auto& t : tables)
    if (t.table_id == id) return &t;
  return nullptr;
}

auto canonical_key(const JoinCandidate& c) {
  return std::tie(c.fk_side.table_id, c.fk_side.column, c.pk_side.table_id, c.pk_side.column);
}

std::string quote(const std::string& ident) { return "\"" + ident + "\""; }

/// Inclusion over the fk sample, restricted to the hash range the pk sample
/// fully covers when the pk sample is truncated.
double sampled_inclusion(const ColumnStats& fk, const ColumnStats& pk) {
  std::vector<Value> fk_values = fk.value_sample;
  if (!pk.complete_sample() && !pk.value_sample.empty()) {
    auto bound = std::make_pair(value_hash(pk.value_sample.back()), value_to_string(pk.value_sample.back()));
    std::vector<Value> kept;
    for (auto& v : fk_values)
      if (std::make_pair(value_hash(v), value_to_string(v)) <= bound) kept.push_back(v);
    if (!kept.empty()) fk_values = std::move(kept);
  }
  return inclusion_coefficient(fk_values, pk.value_sample);
}

}  // namespace

std::vector<std::string> detect_primary_keys(const std::vector<ColumnStats>& stats,
                                             std::string_view table_name,
                                             const std::set<std::string>& excluded) {
  std::string table = text::lower(table_name);
  std::vector<std::pair<int, size_t>> ranked;  // (-bonus, position)
  for (size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    if (excluded.count(s.column)) continue;
    if (s.inferred_type != DataType::Integer && s.inferred_type != DataType::Text) continue;
    if (!unique_non_null(s)) continue;
    std::string name = text::lower(s.column);
    bool bonus = name == "id" || name == table + "_id" || text::ends_with(name, "_key");
    ranked.emplace_back(bonus ? 0 : 1, i);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::string> out;
  for (auto& [_, i] : ranked) out.push_back(stats[i].column);
  return out;
}

double inclusion_coefficient(const std::vector<Value>& fk_values,
                             const std::vector<Value>& pk_values) {
  std::unordered_set<std::string> fk, pk;
  for (auto& v : fk_values)
    if (!is_null(v)) fk.insert(value_to_string(v));
  if (fk.empty()) throw Error("EmptyDomain", "fk side has no non-null values");
  for (auto& v : pk_values)
    if (!is_null(v)) pk.insert(value_to_string(v));
  size_t hit = 0;
  for (auto& v : fk) hit += pk.count(v);
  return static_cast<double>(hit) / static_cast<double>(fk.size());
}

double name_similarity(std::string_view fk_table, std::string_view fk_column,
                       std::string_view pk_table, std::string_view pk_column) {
  (void)fk_table;
  std::string fc = text::lower(fk_column), pc = text::lower(pk_column), pt = text::lower(pk_table);
  double best = 0.0;
  if (fc == pc) best = 1.0;
  if (fc == pt + "_" + pc || fc == pt + "_id") best = std::max(best, 0.9);
  auto a = text::split_identifier(fc), b = text::split_identifier(pc);
  best = std::max(best, text::jaccard({a.begin(), a.end()}, {b.begin(), b.end()}));
  return best;
}

bool is_code_domain(const ColumnStats& s) {
  return s.inferred_type == DataType::Text && s.sampled_rows > 0 && s.null_count == 0 &&
         s.distinct_count >= 2 && s.distinct_count <= 20 &&
         static_cast<double>(s.distinct_count) <= 0.05 * static_cast<double>(s.sampled_rows);
}

std::vector<JoinCandidate> generate_candidates(const std::vector<TableProfile>& tables,
                                               const JoinConfig& config) {
  std::vector<JoinCandidate> out;
  for (auto& fk_table : tables) {
    std::string fk_pk = fk_table.primary_keys.empty() ? "" : fk_table.primary_keys.front();
    for (auto& fk : fk_table.stats) {
      if (fk.column == fk_pk || fk_table.pii.count(fk.column) || fk.value_sample.empty()) continue;
      for (auto& pk_table : tables) {
        if (pk_table.table_id == fk_table.table_id) continue;
        for (auto& pk : pk_table.stats) {
          if (pk_table.pii.count(pk.column)) continue;
          bool referenced = (!pk_table.primary_keys.empty() && pk.column == pk_table.primary_keys.front()) ||
                            is_code_domain(pk);
          if (!referenced || pk.inferred_type != fk.inferred_type) continue;
          JoinCandidate c;
          c.fk_side = {fk_table.table_id, fk.column};
          c.pk_side = {pk_table.table_id, pk.column};
          c.type_compatible = true;
          c.inclusion_coeff = sampled_inclusion(fk, pk);
          c.name_similarity =
              name_similarity(fk_table.physical_name, fk.column, pk_table.physical_name, pk.column);
          c.score = config.w_inc * c.inclusion_coeff + config.w_name * c.name_similarity;
          out.push_back(std::move(c));
        }
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](auto& a, auto& b) { return canonical_key(a) < canonical_key(b); });
  return out;
}

std::vector<JoinCandidate> prune_candidates(std::vector<JoinCandidate> cands,
                                            const std::vector<TableProfile>& tables,
                                            const JoinConfig& config) {
  for (auto& c : cands) {
    if (c.pruned_reason) continue;
    const TableProfile* pt = find_table(tables, c.pk_side.table_id);
    const ColumnStats* ps = pt ? find_stats(*pt, c.pk_side.column) : nullptr;
    if (c.inclusion_coeff < config.min_inclusion) c.pruned_reason = "LowInclusion";
    else if (c.score < config.min_score) c.pruned_reason = "LowScore";
    else if (!ps || ps->distinct_count < 2 || !unique_non_null(*ps)) c.pruned_reason = "LowCardinalityPk";
  }
  // A detected key of a table that is already the referenced side of a better
  // candidate is that table's identity, not a reference elsewhere.
  std::vector<const JoinCandidate*> alive;
  for (auto& c : cands)
    if (!c.pruned_reason) alive.push_back(&c);
  for (auto& c : cands) {
    if (c.pruned_reason) continue;
    const TableProfile* ft = find_table(tables, c.fk_side.table_id);
    if (!ft) continue;
    bool is_key = std::find(ft->primary_keys.begin(), ft->primary_keys.end(), c.fk_side.column) !=
                  ft->primary_keys.end();
    if (!is_key) continue;
    for (auto* other : alive)
      if (other != &c && other->pk_side.table_id == c.fk_side.table_id && other->score > c.score) {
        c.pruned_reason = "FkIsPrimaryKey";
        break;
      }
  }
  std::stable_sort(cands.begin(), cands.end(), [](auto& a, auto& b) {
    if (a.pruned_reason.has_value() != b.pruned_reason.has_value()) return !a.pruned_reason.has_value();
    return canonical_key(a) < canonical_key(b);
  });
  return cands;
}

InferenceResult infer_joins(const std::vector<TableProfile>& tables,
                            std::vector<JoinCandidate> pruned, Adjudicator& adjudicator,
                            Transcript& transcript, DataSourceAdapter* adapter,
                            const JoinConfig& config) {
  InferenceResult result;
  std::sort(pruned.begin(), pruned.end(), [](auto& a, auto& b) {
    if (a.pruned_reason.has_value() != b.pruned_reason.has_value()) return !a.pruned_reason.has_value();
    return canonical_key(a) < canonical_key(b);
  });
  std::map<ColumnRef, JoinCandidate> best;  // fk column -> accepted candidate
  for (auto& c : pruned) {
    if (c.pruned_reason) continue;
    const TableProfile* ft = find_table(tables, c.fk_side.table_id);
    const TableProfile* pt = find_table(tables, c.pk_side.table_id);
    if (!ft || !pt) continue;
    if (adapter) {
      std::string fk = quote(c.fk_side.column), pk = quote(c.pk_side.column);
      std::string fkt = quote(ft->physical_name), pkt = quote(pt->physical_name);
      try {
        auto total = adapter->execute(
            fmt::format("SELECT COUNT(DISTINCT {0}) FROM {1} WHERE {0} IS NOT NULL", fk, fkt));
        auto hit = adapter->execute(fmt::format(
            "SELECT COUNT(DISTINCT {0}) FROM {1} WHERE {0} IN (SELECT {2} FROM {3})", fk, fkt, pk, pkt));
        double n = std::get<int64_t>(total.rows.at(0).at(0));
        double h = std::get<int64_t>(hit.rows.at(0).at(0));
        if (n > 0) {
          c.inclusion_coeff = h / n;
          c.score = config.w_inc * c.inclusion_coeff + config.w_name * c.name_similarity;
        }
      } catch (const std::exception& e) {
        throw Error("AdapterFailure", fmt::format("containment check for {} -> {}: {}",
                                                  c.fk_side.to_string(), c.pk_side.to_string(), e.what()));
      }
      if (c.inclusion_coeff < config.min_inclusion || c.score < config.min_score) {
        c.pruned_reason = "FullScanInclusion";
        continue;
      }
    }
    json context = {{"fk_table", ft->physical_name}, {"pk_table", pt->physical_name}};
    JoinVerdict verdict;
    try {
      verdict = adjudicator.adjudicate_join(c, context, transcript);
    } catch (const std::exception& e) {
      throw Error("AdjudicatorFailure", fmt::format("adjudicating {} -> {}: {}", c.fk_side.to_string(),
                                                    c.pk_side.to_string(), e.what()));
    }
    c.verdict = verdict.to_string();
    if (!verdict.accept) continue;
    auto it = best.find(c.fk_side);
    if (it == best.end() || c.score > it->second.score) best[c.fk_side] = c;
  }

  for (auto& [fk_ref, c] : best) {
    const TableProfile* ft = find_table(tables, c.fk_side.table_id);
    const ColumnStats* fs = find_stats(*ft, c.fk_side.column);
    JoinEdge e;
    e.left = {c.fk_side.table_id, {c.fk_side.column}};
    e.right = {c.pk_side.table_id, {c.pk_side.column}};
    e.confidence = std::clamp(c.score, 0.0, 1.0);
    e.origin = EdgeOrigin::Inferred;
    e.cardinality = fs && fs->distinct_count < fs->sampled_rows - fs->null_count
                        ? Cardinality::ManyToOne
                        : Cardinality::OneToOne;
    result.edges.push_back(canonical(std::move(e)));
  }
  std::sort(result.edges.begin(), result.edges.end(), [](auto& a, auto& b) {
    return std::tie(a.left.table_id, a.left.columns, a.right.table_id, a.right.columns) <
           std::tie(b.left.table_id, b.left.columns, b.right.table_id, b.right.columns);
  });
  result.candidates = std::move(pruned);
  return result;
}

}  // namespace tursio
