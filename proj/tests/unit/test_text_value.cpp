#include <gtest/gtest.h>

#include "tursio/csv.hpp"
#include "tursio/profiler.hpp"
#include "tursio/text.hpp"
#include "tursio/value.hpp"

using namespace tursio;

TEST(Text, SplitIdentifier) {
  EXPECT_EQ(text::split_identifier("MEMBER_ACCOUNT"), (std::vector<std::string>{"member", "account"}));
  EXPECT_EQ(text::split_identifier("closeDate"), (std::vector<std::string>{"close", "date"}));
}

TEST(Text, StemJoinsInflections) {
  EXPECT_EQ(text::stem("closed"), text::stem("close"));
  EXPECT_EQ(text::stem("accounts"), text::stem("account"));
}

TEST(Text, TokenSetDropsStopwords) {
  EXPECT_EQ(text::token_set("the accounts of members"), text::token_set("member account"));
  EXPECT_EQ(text::token_set("card type").size(), 2u);
}

TEST(Text, JaccardBounds) {
  std::set<std::string> a{"x", "y"}, b{"y", "z"};
  EXPECT_DOUBLE_EQ(text::jaccard(a, b), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(text::jaccard(a, a), 1.0);
  EXPECT_DOUBLE_EQ(text::jaccard(a, {}), 0.0);
}

TEST(Text, Fnv1aKnownVector) {
  // published FNV-1a 64 test vectors
  EXPECT_EQ(text::fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(text::fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Value, TotalOrder) {
  EXPECT_LT(compare_values(Value{}, Value{false}), 0);
  EXPECT_LT(compare_values(Value{int64_t{2}}, Value{2.5}), 0);
  EXPECT_EQ(compare_values(Value{int64_t{2}}, Value{2.0}), 0);
  EXPECT_LT(compare_values(Value{9.0}, Value{std::string("a")}), 0);
}

TEST(Value, ParseAs) {
  EXPECT_EQ(parse_as("42", DataType::Integer), Value{int64_t{42}});
  EXPECT_EQ(parse_as("4.5", DataType::Integer), std::nullopt);
  EXPECT_EQ(parse_as("2024-02-29", DataType::Date), Value{std::string("2024-02-29")});
  EXPECT_FALSE(looks_date("2023-02-29"));
}

TEST(Value, InferTypeNarrowest) {
  EXPECT_EQ(infer_type({"1", "2"}), DataType::Integer);
  EXPECT_EQ(infer_type({"1", "2.5"}), DataType::Decimal);
  EXPECT_EQ(infer_type({"2024-01-01"}), DataType::Date);
  EXPECT_EQ(infer_type({"abc", "1"}), DataType::Text);
  EXPECT_EQ(infer_type({}), DataType::Text);
}

TEST(Csv, QuotedFieldsAndNulls) {
  auto rows = csv::parse("a,b,c\n\"x,y\",,\"\"\n\"he said \"\"hi\"\"\",1,2\n");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0], std::optional<std::string>("x,y"));
  EXPECT_EQ(rows[1][1], std::nullopt);
  EXPECT_EQ(rows[1][2], std::optional<std::string>(""));
  EXPECT_EQ(rows[2][0], std::optional<std::string>("he said \"hi\""));
}

TEST(Csv, RoundTrip) {
  csv::Row row = {std::string("a,b"), std::nullopt, std::string(""), std::string("q\"q")};
  auto parsed = csv::parse(csv::format_row(row) + "\n");
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_EQ(parsed[0], row);
}

TEST(Csv, UnterminatedQuoteThrows) {
  try {
    csv::parse("a\n\"open\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "MalformedDocument");
  }
}
