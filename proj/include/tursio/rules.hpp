#pragma once

// Rewrite rules applied to a composed tree, in fixed order:
// pii_scrub, enforcer_rules, symmetric_aggregate, default_limit.

#include <string>
#include <vector>

#include "tursio/plan_tree.hpp"

namespace tursio {

struct RuleConfig {
  int64_t default_limit = 1000;
};

struct RuleOutcome {
  PlanNode tree;
  std::vector<std::string> fired;
};

/// Throws Error("PiiOnlyQuery") or Error("UnsupportedConstruct").
RuleOutcome apply_rules(PlanNode tree, const ContextGraph& graph, const RuleConfig& config = {});

// Individual rules; each returns whether it changed the tree.

/// Drops PII outputs, groups, sort keys and predicates. Throws Error("PiiOnlyQuery")
/// when every select output was PII.
bool scrub_pii(PlanNode& tree, const ContextGraph& graph);
bool append_enforcer_rules(PlanNode& tree, const ContextGraph& graph);
/// Moves the part of the join beyond each fan-out edge (seen from a measure's
/// table) into a PreAggregate keyed by that edge's join columns.
bool rewrite_symmetric_aggregates(PlanNode& tree, const ContextGraph& graph);
bool add_default_limit(PlanNode& tree, int64_t limit);

}  // namespace tursio
