#include <gtest/gtest.h>

#include "oracle.hpp"
#include "tursio/fixtures.hpp"
#include "tursio/text.hpp"

using namespace tursio;
namespace fs = std::filesystem;

namespace {

std::pair<std::string, std::string> split_ref(const std::string& ref) {
  auto dot = ref.find('.');
  return {ref.substr(0, dot), ref.substr(dot + 1)};
}

std::string file_for(const json& manifest, const std::string& table) {
  for (auto& t : manifest["tables"])
    if (t["table"] == table) return t["file"];
  ADD_FAILURE() << "no table " << table;
  return {};
}

std::set<std::string> column_values(const fs::path& dir, const json& manifest, const std::string& ref) {
  auto [table, column] = split_ref(ref);
  auto t = oracle::read_table(dir / file_for(manifest, table));
  std::set<std::string> out;
  size_t c = t.col(column);
  for (auto& r : t.rows)
    if (!r[c].empty()) out.insert(r[c]);
  return out;
}

}  // namespace

TEST(Fixtures, RegenerationIsByteIdentical) {
  auto a = oracle::temp_dir("fixture_a");
  auto b = oracle::temp_dir("fixture_b");
  generate_fixture(kDefaultFixtureSeed, a);
  generate_fixture(kDefaultFixtureSeed, b);
  std::string diff;
  EXPECT_TRUE(oracle::same_files(a, b, &diff)) << diff;
  EXPECT_TRUE(oracle::same_files(a, fs::path(TURSIO_SOURCE_DIR) / "fixtures/cu_csv", &diff)) << diff;
}

TEST(Fixtures, SeedChangesData) {
  auto a = oracle::temp_dir("fixture_seed7");
  generate_fixture(7, a);
  EXPECT_NE(oracle::read_file(a / "member.csv"), oracle::read_file(oracle::fixture_dir() / "member.csv"));
}

TEST(Fixtures, ManifestMatchesFiles) {
  const fs::path dir = oracle::fixture_dir();
  json m = json::parse(oracle::read_file(dir / "manifest.json"));
  ASSERT_EQ(m["tables"].size(), 5u);
  for (auto& t : m["tables"]) {
    auto table = oracle::read_table(dir / t["file"].get<std::string>());
    EXPECT_EQ(table.rows.size(), t["rows"].get<size_t>()) << t["table"];
    std::set<std::string> keys;
    size_t pk = table.col(t["primary_key"]);
    for (auto& r : table.rows) EXPECT_TRUE(keys.insert(r[pk]).second) << t["table"] << " duplicate " << r[pk];
  }
  EXPECT_GE(oracle::read_table(dir / "member_account.csv").rows.size(), 1000u);
}

TEST(Fixtures, ForeignKeysHold) {
  const fs::path dir = oracle::fixture_dir();
  json m = json::parse(oracle::read_file(dir / "manifest.json"));
  ASSERT_EQ(m["foreign_keys"].size(), 4u);
  for (auto& fk : m["foreign_keys"]) {
    auto from = column_values(dir, m, fk["from"]);
    auto to = column_values(dir, m, fk["to"]);
    ASSERT_FALSE(from.empty());
    for (auto& v : from) ASSERT_TRUE(to.count(v)) << fk["from"] << " value " << v;
  }
}

TEST(Fixtures, DecoyIsFullyIncluded) {
  const fs::path dir = oracle::fixture_dir();
  json m = json::parse(oracle::read_file(dir / "manifest.json"));
  ASSERT_EQ(m["decoys"].size(), 1u);
  auto from = column_values(dir, m, m["decoys"][0]["from"]);
  auto to = column_values(dir, m, m["decoys"][0]["to"]);
  for (auto& v : from) EXPECT_TRUE(to.count(v)) << v;
}

TEST(Fixtures, PiiColumnsExistAndLookPersonal) {
  const fs::path dir = oracle::fixture_dir();
  json m = json::parse(oracle::read_file(dir / "manifest.json"));
  auto member = oracle::read_table(dir / "member.csv");
  for (auto& ref : m["pii_columns"]) {
    auto [table, column] = split_ref(ref);
    EXPECT_EQ(table, "MEMBER");
    EXPECT_NO_THROW(member.col(column));
  }
  const std::string& ssn = member.at(0, "ssn");
  EXPECT_EQ(ssn.size(), 11u);
  EXPECT_NE(member.at(0, "email").find('@'), std::string::npos);
}

TEST(Fixtures, CloseDatesOnThreeTables) {
  json m = json::parse(oracle::read_file(oracle::fixture_dir() / "manifest.json"));
  for (auto& t : m["close_date_tables"]) {
    auto table = oracle::read_table(oracle::fixture_dir() / file_for(m, t));
    EXPECT_NO_THROW(table.col("close_date")) << t;
  }
}
