#include <gtest/gtest.h>

#include "oracle.hpp"
#include "tursio/access.hpp"
#include "tursio/adapter.hpp"
#include "tursio/adjudicator.hpp"
#include "tursio/planner.hpp"

using namespace tursio;

namespace {

// Capability table written out by hand: A = allow, S = SummaryOnly, - = RoleForbidden.
// Columns: Administrator, Owner, User, Viewer.
const std::map<Action, std::string> kMatrix = {
    {Action::Plan, "AAAA"},
    {Action::Execute, "AAAA"},
    {Action::ViewFullResults, "AAAS"},
    {Action::Bookmark, "AAA-"},
    {Action::Feedback, "AAA-"},
    {Action::ViewHistory, "AAAA"},
    {Action::ViewGraph, "AAAA"},
    {Action::ApplyAnnotation, "AA--"},
    {Action::RebuildGraph, "AA--"},
    {Action::RegisterDatasource, "AA--"},
    {Action::ResolveFeedback, "AA--"},
    {Action::ViewInsights, "AA--"},
    {Action::ManagePrincipals, "AA--"},
};

}  // namespace

TEST(Access, FullRoleMatrix) {
  ASSERT_EQ(kMatrix.size(), std::size(kAllActions));
  for (auto action : kAllActions) {
    const std::string& row = kMatrix.at(action);
    for (size_t r = 0; r < std::size(kAllRoles); ++r) {
      Decision d = authorize(kAllRoles[r], action);
      switch (row[r]) {
        case 'A': EXPECT_EQ(d, (Decision{true, ""})) << to_string(kAllRoles[r]) << " " << to_string(action); break;
        case 'S': EXPECT_EQ(d, (Decision{false, "SummaryOnly"})) << to_string(action); break;
        default: EXPECT_EQ(d, (Decision{false, "RoleForbidden"})) << to_string(kAllRoles[r]) << " " << to_string(action);
      }
    }
  }
}

TEST(Access, AuthorizeIsPure) {
  for (int i = 0; i < 3; ++i)
    for (auto r : kAllRoles)
      for (auto a : kAllActions) EXPECT_EQ(authorize(r, a), authorize(r, a));
}

TEST(Access, RoleNames) {
  for (auto r : kAllRoles) EXPECT_EQ(role_from_string(to_string(r)), r);
  EXPECT_THROW(role_from_string("Root"), Error);
}

TEST(Access, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Access, PrincipalLookupAndGrants) {
  PrincipalTable t(PrincipalTable::parse(json::array({
      {{"id", "alice"}, {"role", "Owner"}, {"token_sha256", sha256_hex("tok-a")}, {"grants", {"cu"}}},
      {{"id", "root"}, {"role", "Administrator"}, {"token_sha256", sha256_hex("tok-r")}, {"grants", json::array()}},
  })));
  auto a = t.find_by_token("tok-a");
  ASSERT_TRUE(a);
  EXPECT_EQ(a->id, "alice");
  EXPECT_TRUE(a->can_access("cu"));
  EXPECT_FALSE(a->can_access("other"));
  EXPECT_TRUE(t.find_by_token("tok-r")->can_access("anything"));
  EXPECT_FALSE(t.find_by_token("wrong"));
  EXPECT_THROW(PrincipalTable::parse(json::object()), Error);
  t.replace({});
  EXPECT_FALSE(t.find_by_token("tok-a"));
}

TEST(Access, ViewerShapingHidesRawRows) {
  CsvDirectoryAdapter adapter(oracle::fixture_dir().string());
  PreparedGraph g(oracle::fixture_graph());
  DeterministicAdjudicator adj;
  auto listing = plan_query("loans with amount over 30000", g, adj);
  ASSERT_TRUE(listing.ok());
  auto rows = adapter.execute(listing.sql);
  ASSERT_FALSE(rows.rows.empty());
  json shaped = shape_for_viewer(rows, *listing.tree);
  EXPECT_EQ(shaped["shaped"], true);
  EXPECT_EQ(shaped["row_count"], rows.rows.size());
  EXPECT_FALSE(shaped.contains("rows"));
  // no raw value from any row shows up
  std::string dump = shaped.dump();
  for (auto& r : rows.rows) EXPECT_EQ(dump.find("\"" + value_to_string(r[0]) + "\""), std::string::npos);

  auto agg = plan_query("number of loans by status", g, adj);
  ASSERT_TRUE(agg.ok());
  EXPECT_TRUE(is_aggregated(*agg.tree));
  json pass = shape_for_viewer(adapter.execute(agg.sql), *agg.tree);
  EXPECT_EQ(pass["shaped"], false);
  EXPECT_EQ(pass["rows"].size(), 4u);

  ResultSet empty;
  empty.columns = {"loan_id"};
  json e = shape_for_viewer(empty, *listing.tree);
  EXPECT_EQ(e["row_count"], 0);
}
