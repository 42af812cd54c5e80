#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "oracle.hpp"
#include "tursio/adapter.hpp"
#include "tursio/profiler.hpp"

using namespace tursio;

namespace {

const ColumnStats& find(const std::vector<ColumnStats>& stats, const std::string& col) {
  for (auto& s : stats)
    if (s.column == col) return s;
  throw std::out_of_range(col);
}

}  // namespace

TEST(Profiler, FullScanMatchesCsvOracle) {
  CsvDirectoryAdapter adapter(oracle::fixture_dir().string());
  for (std::string table : {"member", "member_account", "loan", "card", "transaction"}) {
    auto csv = oracle::read_table(oracle::fixture_dir() / (table + ".csv"));
    auto stats = profile_table(adapter, table);
    ASSERT_EQ(stats.size(), csv.header.size()) << table;
    for (size_t c = 0; c < csv.header.size(); ++c) {
      std::set<std::string> distinct;
      int64_t nulls = 0;
      for (auto& r : csv.rows) {
        if (r[c].empty()) ++nulls;
        else distinct.insert(r[c]);
      }
      const ColumnStats& s = find(stats, csv.header[c]);
      EXPECT_EQ(s.sampled_rows, static_cast<int64_t>(csv.rows.size())) << table << "." << s.column;
      EXPECT_EQ(s.null_count, nulls) << table << "." << s.column;
      EXPECT_EQ(s.distinct_count, static_cast<int64_t>(distinct.size())) << table << "." << s.column;
      EXPECT_LE(s.value_sample.size(), kValueSampleSize);
      EXPECT_EQ(s.complete_sample(), distinct.size() <= kValueSampleSize);
    }
  }
}

TEST(Profiler, InferredTypes) {
  CsvDirectoryAdapter adapter(oracle::fixture_dir().string());
  auto stats = profile_table(adapter, "loan");
  EXPECT_EQ(find(stats, "loan_id").inferred_type, DataType::Integer);
  EXPECT_EQ(find(stats, "amount").inferred_type, DataType::Decimal);
  EXPECT_EQ(find(stats, "open_date").inferred_type, DataType::Date);
  EXPECT_EQ(find(stats, "status").inferred_type, DataType::Text);
}

TEST(Profiler, MinMaxMatchOracle) {
  CsvDirectoryAdapter adapter(oracle::fixture_dir().string());
  auto csv = oracle::read_table(oracle::fixture_dir() / "loan.csv");
  int64_t lo = INT64_MAX, hi = INT64_MIN;
  for (size_t i = 0; i < csv.rows.size(); ++i) {
    lo = std::min(lo, oracle::cents(csv.at(i, "amount")));
    hi = std::max(hi, oracle::cents(csv.at(i, "amount")));
  }
  auto stats = profile_table(adapter, "loan");
  auto& s = find(stats, "amount");
  ASSERT_TRUE(s.min && s.max);
  EXPECT_EQ(oracle::round_cents(std::get<double>(*s.min)), lo);
  EXPECT_EQ(oracle::round_cents(std::get<double>(*s.max)), hi);
}

TEST(Profiler, ReservoirIsSeededAndBounded) {
  CsvDirectoryAdapter adapter(oracle::fixture_dir().string());
  auto a = profile_table(adapter, "transaction", 500, "g1");
  auto b = profile_table(adapter, "transaction", 500, "g1");
  EXPECT_EQ(a, b);
  for (auto& s : a) EXPECT_EQ(s.sampled_rows, 500);
}

// Value samples pick by smallest hash, so a subset column's sample agrees with
// its superset's on every value below the superset's largest sampled hash.
TEST(Profiler, ValueSamplesNestForIncludedColumns) {
  CsvDirectoryAdapter adapter(oracle::fixture_dir().string());
  auto pk = find(profile_table(adapter, "member_account"), "account_id").value_sample;
  for (std::string child : {"loan", "card", "transaction"}) {
    auto fk = find(profile_table(adapter, child), "account_id").value_sample;
    uint64_t cutoff = 0;
    for (auto& v : pk) cutoff = std::max(cutoff, value_hash(v));
    std::set<std::string> pk_set;
    for (auto& v : pk) pk_set.insert(value_to_string(v));
    for (auto& v : fk)
      if (value_hash(v) <= cutoff) EXPECT_TRUE(pk_set.count(value_to_string(v))) << child << " " << value_to_string(v);
  }
}

TEST(Profiler, UnknownTableThrows) {
  CsvDirectoryAdapter adapter(oracle::fixture_dir().string());
  try {
    profile_table(adapter, "nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "TableNotFound");
  }
}

TEST(Adapter, RejectsWrites) {
  CsvDirectoryAdapter adapter(oracle::fixture_dir().string());
  for (std::string sql : {"DELETE FROM loan", "UPDATE loan SET amount = 0", "SELECT 1; DROP TABLE loan",
                          "CREATE TABLE x (a int)"}) {
    try {
      adapter.execute(sql);
      ADD_FAILURE() << sql;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), "NotReadOnly") << sql;
    }
  }
}

TEST(Adapter, ExecuteCountsMatchCsv) {
  CsvDirectoryAdapter adapter(oracle::fixture_dir().string());
  auto rs = adapter.execute("SELECT COUNT(*) FROM \"transaction\"");
  auto csv = oracle::read_table(oracle::fixture_dir() / "transaction.csv");
  ASSERT_EQ(rs.rows.size(), 1u);
  EXPECT_EQ(std::get<int64_t>(rs.rows[0][0]), static_cast<int64_t>(csv.rows.size()));
}

TEST(Adapter, OpenAdapterValidatesConfig) {
  EXPECT_THROW(open_adapter({{"kind", "oracle"}, {"path", "/x"}}), Error);
  EXPECT_THROW(open_adapter({{"kind", "csv"}, {"path", "/definitely/missing"}}), Error);
}
