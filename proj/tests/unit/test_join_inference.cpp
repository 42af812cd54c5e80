#include <gtest/gtest.h>

#include <fstream>

#include "oracle.hpp"
#include "tursio/adjudicator.hpp"
#include "tursio/graph_builder.hpp"
#include "tursio/join_inference.hpp"

using namespace tursio;

namespace {

json manifest() {
  std::ifstream in(oracle::fixture_dir() / "manifest.json");
  return json::parse(in);
}

std::set<std::string> edge_keys(const std::vector<JoinEdge>& edges) {
  std::set<std::string> out;
  for (auto& e : edges) {
    // many side first
    const JoinSide& many = e.cardinality == Cardinality::OneToMany ? e.right : e.left;
    const JoinSide& one = e.cardinality == Cardinality::OneToMany ? e.left : e.right;
    out.insert(many.table_id + "." + many.columns.at(0) + "->" + one.table_id + "." + one.columns.at(0));
  }
  return out;
}

BuildResult build_fixture() {
  CsvDirectoryAdapter adapter(oracle::fixture_dir().string());
  DeterministicAdjudicator adj;
  BuildOptions options;
  options.built_at = "2025-04-01T00:00:00Z";
  return build_graph(adapter, adj, options);
}

}  // namespace

TEST(JoinInference, RecoversManifestForeignKeysExactly) {
  std::set<std::string> truth;
  json m = manifest();
  for (auto& fk : m["foreign_keys"]) truth.insert(fk["from"].get<std::string>() + "->" + fk["to"].get<std::string>());
  EXPECT_EQ(edge_keys(oracle::fixture_graph().joins), truth);
}

TEST(JoinInference, DecoyInclusionIsRejected) {
  auto built = build_fixture();
  auto decoy = manifest()["decoys"][0];
  auto from = ColumnRef::parse(decoy["from"].get<std::string>());
  auto to = ColumnRef::parse(decoy["to"].get<std::string>());
  bool seen = false;
  for (auto& c : built.candidates) {
    if (c.fk_side == from && c.pk_side == to) {
      seen = true;
      EXPECT_DOUBLE_EQ(c.inclusion_coeff, 1.0);
      EXPECT_TRUE(c.pruned_reason || (c.verdict && *c.verdict != "Accept")) << candidate_to_json(c).dump();
    }
  }
  EXPECT_TRUE(seen) << "decoy pair never considered";
  for (auto& e : built.graph.joins) EXPECT_FALSE(e.touches("CARD") && e.left.columns[0] == "card_type");
}

TEST(JoinInference, EdgesCarryCardinality) {
  for (auto& e : oracle::fixture_graph().joins) {
    EXPECT_TRUE(e.cardinality == Cardinality::ManyToOne || e.cardinality == Cardinality::OneToMany);
    EXPECT_EQ(e.origin, EdgeOrigin::Inferred);
    EXPECT_GE(e.confidence, 0.7);
  }
}

TEST(JoinInference, InclusionCoefficient) {
  std::vector<Value> fk = {int64_t{1}, int64_t{2}, int64_t{2}, int64_t{3}, Value{}};
  std::vector<Value> pk = {int64_t{1}, int64_t{2}, int64_t{4}};
  EXPECT_DOUBLE_EQ(inclusion_coefficient(fk, pk), 2.0 / 3.0);
  try {
    inclusion_coefficient({Value{}}, pk);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "EmptyDomain");
  }
}

TEST(JoinInference, NameSimilarity) {
  EXPECT_DOUBLE_EQ(name_similarity("loan", "account_id", "member_account", "account_id"), 1.0);
  EXPECT_DOUBLE_EQ(name_similarity("x", "member_id", "member", "id"), 0.9);
  EXPECT_DOUBLE_EQ(name_similarity("member_account", "status", "card", "card_type"), 0.0);
}

TEST(JoinInference, DeterministicRule) {
  JoinCandidate c;
  c.fk_side = {"A", "status"};
  c.pk_side = {"B", "code"};
  c.inclusion_coeff = 1.0;
  c.name_similarity = 0.0;
  EXPECT_EQ(DeterministicAdjudicator::join_rule(c).reason, "NameEvidenceMissing");
  c.fk_side.column = "b_id";
  EXPECT_TRUE(DeterministicAdjudicator::join_rule(c).accept);
  c.inclusion_coeff = 0.5;
  EXPECT_EQ(DeterministicAdjudicator::join_rule(c).reason, "InclusionBelowBar");
}

TEST(JoinInference, PrimaryKeysAreUniqueNonNull) {
  std::vector<ColumnStats> stats(3);
  stats[0] = {"t", "code", 10, 10, 0, 0.0, {}, {}, {}, {}, DataType::Text};
  stats[1] = {"t", "t_id", 10, 10, 0, 0.0, {}, {}, {}, {}, DataType::Integer};
  stats[2] = {"t", "amount", 10, 9, 0, 0.0, {}, {}, {}, {}, DataType::Integer};
  auto pks = detect_primary_keys(stats, "t");
  ASSERT_EQ(pks.size(), 2u);
  EXPECT_EQ(pks[0], "t_id");
  EXPECT_EQ(detect_primary_keys(stats, "t", {"t_id"}), std::vector<std::string>{"code"});
}

TEST(JoinInference, BuildIsDeterministic) {
  EXPECT_EQ(serialize_graph(build_fixture().graph), serialize_graph(build_fixture().graph));
}
