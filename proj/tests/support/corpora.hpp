#pragma once

// Generated question sets over the fixture graph.

#include <string>
#include <vector>

#include "tursio/context_model.hpp"

namespace oracle {

struct PiiQuestion {
  std::string question;
  bool pii_only = false;  // every requested output is PII
};

/// Template questions over every non-PII column plus adversarial PII asks.
std::vector<PiiQuestion> pii_corpus(const tursio::ContextGraph& graph);

/// Lowercased identifier-like words of an SQL string, string literals skipped.
std::vector<std::string> sql_words(const std::string& sql);

}  // namespace oracle
