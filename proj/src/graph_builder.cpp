#include "tursio/graph_builder.hpp"

#include <algorithm>
#include <fmt/format.h>

#include "tursio/enrichment.hpp"
#include "tursio/text.hpp"

namespace tursio {

BuildResult build_graph(DataSourceAdapter& adapter, Adjudicator& adjudicator,
                        const BuildOptions& options) {
  const Lexicon& lexicon = options.lexicon ? *options.lexicon : Lexicon::bundled();
  BuildResult result;
  Transcript transcript;

  std::vector<std::string> names = options.tables.empty() ? adapter.list_tables() : options.tables;
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());

  std::map<std::string, std::vector<ColumnMeta>> columns;
  for (auto& name : names) {
    TableProfile p;
    p.table_id = text::upper(name);
    p.physical_name = name;
    p.stats = profile_table(adapter, name, options.sample_size, options.graph_id);
    auto& metas = columns[p.table_id];
    for (auto& s : p.stats) {
      ColumnMeta m;
      m.name = s.column;
      m.data_type = s.inferred_type;
      m.pii = detect_pii(m, s, lexicon);
      if (m.pii) p.pii.insert(m.name);
      metas.push_back(std::move(m));
    }
    p.primary_keys = detect_primary_keys(p.stats, name, p.pii);
    result.profiles.push_back(std::move(p));
  }

  auto candidates = generate_candidates(result.profiles, options.join);
  candidates = prune_candidates(std::move(candidates), result.profiles, options.join);
  auto inferred = infer_joins(result.profiles, std::move(candidates), adjudicator, transcript,
                              &adapter, options.join);
  result.candidates = std::move(inferred.candidates);

  std::set<ColumnRef> endpoints;
  for (auto& e : inferred.edges) {
    for (auto& c : e.left.columns) endpoints.insert({e.left.table_id, c});
    for (auto& c : e.right.columns) endpoints.insert({e.right.table_id, c});
  }

  ContextGraph& g = result.graph;
  g.graph_id = options.graph_id;
  g.built_at = options.built_at;
  g.version = 1;
  std::set<std::string> aliases;
  for (auto& p : result.profiles) {
    TableNode t;
    t.table_id = p.table_id;
    t.physical_name = p.physical_name;
    t.display_name = adjudicator.refine_text("display_name", expand_name(p.physical_name, lexicon),
                                             {{"table", p.physical_name}}, transcript);
    t.alias = generate_alias(p.physical_name, aliases);
    aliases.insert(t.alias);
    if (!p.primary_keys.empty()) t.primary_key = {p.primary_keys.front()};
    t.row_count_estimate = p.stats.empty() ? 0 : p.stats.front().sampled_rows;
    auto& metas = columns[p.table_id];
    for (size_t i = 0; i < metas.size(); ++i) {
      ColumnMeta m = metas[i];
      const ColumnStats& s = p.stats[i];
      bool is_key = (!t.primary_key.empty() && t.primary_key.front() == m.name) ||
                    endpoints.count({t.table_id, m.name});
      m.role = classify_column(m, s, is_key);
      m.display_name = adjudicator.refine_text("display_name", expand_name(m.name, lexicon),
                                               {{"table", p.physical_name}, {"column", m.name}},
                                               transcript);
      if (text::split_identifier(m.name).size() >= 3) m.aliases.push_back(generate_alias(m.name, {}));
      if (!m.pii) {
        std::vector<Value> sample = s.value_sample;
        std::sort(sample.begin(), sample.end(), ValueLess{});
        if (sample.size() > 20) sample.resize(20);
        m.sample_values = std::move(sample);
      }
      m.stats_ref = fmt::format("{}.{}", p.physical_name, m.name);
      t.columns.push_back(std::move(m));
    }
    for (auto& m : t.columns)
      m.description = adjudicator.refine_text("description", describe_column(m, t),
                                              {{"table", p.physical_name}, {"column", m.name}},
                                              transcript);
    t.description = adjudicator.refine_text("description", describe_table(t),
                                            {{"table", p.physical_name}}, transcript);
    g.tables.push_back(std::move(t));
  }
  g.joins = std::move(inferred.edges);
  normalize(g);
  g.annotations = derive_custom_measures(g, options.built_at);
  result.transcript = transcript.to_json();
  return result;
}

}  // namespace tursio
