#include <gtest/gtest.h>

#include "oracle.hpp"
#include "tursio/context_model.hpp"
#include "tursio/json_io.hpp"

using namespace tursio;

namespace {

Annotation prioritization(std::vector<ColumnRef> cands) {
  Annotation a;
  a.kind = AnnotationKind::Prioritization;
  a.payload = PrioritizationPayload{"close date", std::move(cands)};
  a.author = "owner";
  a.created_at = "2025-04-01T00:00:00Z";
  return a;
}

}  // namespace

TEST(ContextModel, FixtureGraphIsValid) {
  const auto& g = oracle::fixture_graph();
  EXPECT_TRUE(validate_graph(g).empty());
  EXPECT_EQ(g.tables.size(), 5u);
  EXPECT_EQ(g.joins.size(), 4u);
  EXPECT_TRUE(std::is_sorted(g.tables.begin(), g.tables.end(),
                             [](auto& a, auto& b) { return a.table_id < b.table_id; }));
}

TEST(ContextModel, SerializeRoundTrip) {
  const auto& g = oracle::fixture_graph();
  std::string doc = serialize_graph(g);
  EXPECT_EQ(deserialize_graph(doc), g);
  EXPECT_EQ(serialize_graph(deserialize_graph(doc)), doc);
}

TEST(ContextModel, MalformedDocuments) {
  for (std::string doc : {"{", "[]", R"({"schema_version": 99})"}) {
    try {
      deserialize_graph(doc);
      ADD_FAILURE() << doc;
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == "MalformedDocument" || e.code() == "UnsupportedSchemaVersion") << e.code();
    }
  }
}

TEST(ContextModel, AnnotationBumpsVersionAndLeavesInputAlone) {
  const auto& g = oracle::fixture_graph();
  auto before = serialize_graph(g);
  auto next = apply_annotation(g, prioritization({{"LOAN", "close_date"}, {"MEMBER_ACCOUNT", "close_date"}}));
  EXPECT_EQ(next.version, g.version + 1);
  EXPECT_EQ(next.annotations.size(), g.annotations.size() + 1);
  EXPECT_EQ(serialize_graph(g), before);
  auto prios = active_prioritizations(next);
  ASSERT_FALSE(prios.empty());
  EXPECT_EQ(prios.back().candidates.front(), (ColumnRef{"LOAN", "close_date"}));
}

TEST(ContextModel, LaterPrioritizationReplacesEarlier) {
  auto g = apply_annotation(oracle::fixture_graph(), prioritization({{"LOAN", "close_date"}, {"CARD", "close_date"}}));
  g = apply_annotation(g, prioritization({{"CARD", "close_date"}, {"LOAN", "close_date"}}));
  size_t n = 0;
  for (auto& p : active_prioritizations(g))
    if (p.term == "close date") {
      ++n;
      EXPECT_EQ(p.candidates.front(), (ColumnRef{"CARD", "close_date"}));
    }
  EXPECT_EQ(n, 1u);
}

TEST(ContextModel, UnresolvedTargetsRejected) {
  try {
    apply_annotation(oracle::fixture_graph(), prioritization({{"LOAN", "no_such_column"}, {"CARD", "close_date"}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "UnresolvedTarget");
  }
  Annotation syn;
  syn.kind = AnnotationKind::Synonym;
  syn.target = {AnnotationTarget::Kind::Table, "NOPE", ""};
  syn.payload = SynonymPayload{"x"};
  EXPECT_THROW(apply_annotation(oracle::fixture_graph(), syn), Error);
}

TEST(ContextModel, SingleCandidatePrioritizationRejected) {
  try {
    apply_annotation(oracle::fixture_graph(), prioritization({{"LOAN", "close_date"}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "InvalidPayload");
  }
}

TEST(ContextModel, AnnotationJsonRoundTrip) {
  Annotation a = prioritization({{"LOAN", "close_date"}});
  json j = a;
  EXPECT_EQ(j.get<Annotation>(), a);
  EXPECT_EQ(j["payload"]["candidates"][0], "LOAN.close_date");
}

TEST(ContextModel, DanglingJoinIsAViolation) {
  ContextGraph g = oracle::fixture_graph();
  g.joins.front().left.table_id = "GHOST";
  auto v = validate_graph(g);
  ASSERT_FALSE(v.empty());
}

TEST(ContextModel, CanonicalEdgeOrientation) {
  JoinEdge e;
  e.left = {"Z", {"a"}};
  e.right = {"A", {"b"}};
  e.cardinality = Cardinality::ManyToOne;
  auto c = canonical(e);
  EXPECT_EQ(c.left.table_id, "A");
  EXPECT_EQ(c.cardinality, Cardinality::OneToMany);
  EXPECT_EQ(canonical(c), c);
}
