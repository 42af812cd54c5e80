#pragma once

// End-to-end context-graph build: profile, infer joins, enrich.

#include <string>
#include <vector>

#include "tursio/adapter.hpp"
#include "tursio/adjudicator.hpp"
#include "tursio/context_model.hpp"
#include "tursio/join_inference.hpp"
#include "tursio/lexicon.hpp"

namespace tursio {

struct BuildOptions {
  std::string graph_id = "default";
  std::vector<std::string> tables;  // physical names; empty means every table
  size_t sample_size = kDefaultSampleSize;
  std::string built_at;             // ISO instant recorded on the graph
  JoinConfig join;
  const Lexicon* lexicon = nullptr;  // bundled when null
};

struct BuildResult {
  ContextGraph graph;
  std::vector<TableProfile> profiles;
  std::vector<JoinCandidate> candidates;
  json transcript;
};

/// Table ids are the upper-cased physical names.
BuildResult build_graph(DataSourceAdapter& adapter, Adjudicator& adjudicator,
                        const BuildOptions& options);

}  // namespace tursio
