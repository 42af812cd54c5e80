#include <gtest/gtest.h>

#include <fstream>

#include "corpora.hpp"
#include "oracle.hpp"
#include "tursio/adjudicator.hpp"
#include "tursio/planner.hpp"

using namespace tursio;

namespace {

const PreparedGraph& prepared() {
  static const PreparedGraph p(oracle::fixture_graph());
  return p;
}

PlanOutcome plan(const std::string& q, const PreparedGraph& g = prepared()) {
  DeterministicAdjudicator adj;
  return plan_query(q, g, adj);
}

const json* grounding_for(const json& audit, const std::string& role) {
  for (auto& g : audit["groundings"])
    if (g["role"] == role) return &g;
  return nullptr;
}

class RewritingAdjudicator : public DeterministicAdjudicator {
 public:
  explicit RewritingAdjudicator(std::string sql) : sql_(std::move(sql)) {}
  std::string rewrite_sql(const std::string&, const std::string&, const json&, Transcript&) override { return sql_; }
  bool deterministic() const override { return false; }

 private:
  std::string sql_;
};

const std::set<std::string> kPiiWords = {"ssn", "email", "birth_date"};

}  // namespace

TEST(Planner, GoldenSql) {
  std::ifstream in(std::string(TURSIO_SOURCE_DIR) + "/tests/golden/plans.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json g = json::parse(line);
    auto out = plan(g["question"]);
    if (g.contains("error")) {
      ASSERT_FALSE(out.ok()) << g["question"];
      EXPECT_EQ(out.error->code, g["error"]);
    } else {
      ASSERT_TRUE(out.ok()) << g["question"] << ": " << out.error->message;
      EXPECT_EQ(out.sql, g["sql"].get<std::string>()) << g["question"];
    }
    ++n;
  }
  EXPECT_GE(n, 20);
}

TEST(Planner, PiiSoundnessOverGeneratedCorpus) {
  auto corpus = oracle::pii_corpus(oracle::fixture_graph());
  ASSERT_GE(corpus.size(), 100u);
  for (auto& item : corpus) {
    auto out = plan(item.question);
    if (item.pii_only) {
      ASSERT_FALSE(out.ok()) << item.question << " -> " << out.sql;
      EXPECT_EQ(out.error->code, "PiiOnlyQuery") << item.question;
    }
    if (!out.ok()) continue;
    for (auto& w : oracle::sql_words(out.sql)) EXPECT_FALSE(kPiiWords.count(w)) << item.question << " -> " << out.sql;
    for (auto& ref : referenced_columns(out.sql, oracle::fixture_graph()))
      EXPECT_FALSE(oracle::fixture_graph().column(ref)->pii) << item.question;
    EXPECT_TRUE(check_tree(*out.tree, oracle::fixture_graph()).empty()) << item.question;
  }
}

TEST(Planner, ErrorPayloadsNeverEchoPiiNames) {
  for (auto& item : oracle::pii_corpus(oracle::fixture_graph())) {
    auto out = plan(item.question);
    if (out.ok()) continue;
    for (auto& alt : out.error->details.value("alternatives", json::array()))
      for (auto& w : oracle::sql_words(alt.value("target", ""))) EXPECT_FALSE(kPiiWords.count(w)) << item.question;
  }
}

TEST(Planner, CloseDateAmbiguityAndPrioritization) {
  const std::string q = "List accounts which got closed last year";
  auto before = plan(q);
  ASSERT_TRUE(before.ok());
  EXPECT_EQ((*grounding_for(before.audit, "time"))["target"], "MEMBER_ACCOUNT.close_date");

  Annotation a;
  a.kind = AnnotationKind::Prioritization;
  a.payload = PrioritizationPayload{"close date", {{"LOAN", "close_date"}, {"MEMBER_ACCOUNT", "close_date"}, {"CARD", "close_date"}}};
  PreparedGraph annotated(apply_annotation(oracle::fixture_graph(), a));
  auto after = plan(q, annotated);
  ASSERT_TRUE(after.ok());
  const json* t = grounding_for(after.audit, "time");
  EXPECT_EQ((*t)["target"], "LOAN.close_date");
  EXPECT_EQ((*t)["basis"], "PrioritizationRule");

  // every other grounding is untouched
  auto others = [](const json& audit) {
    json out = json::array();
    for (auto& g : audit["groundings"])
      if (g["role"] != "time") out.push_back(g);
    return out;
  };
  EXPECT_EQ(others(before.audit), others(after.audit));
}

TEST(Planner, PrioritizationLeavesUnrelatedQuestionsAlone) {
  Annotation a;
  a.kind = AnnotationKind::Prioritization;
  a.payload = PrioritizationPayload{"close date", {{"LOAN", "close_date"}, {"MEMBER_ACCOUNT", "close_date"}}};
  PreparedGraph annotated(apply_annotation(oracle::fixture_graph(), a));
  for (std::string q : {"total balance by product category", "number of loans by status", "average credit limit by card type"})
    EXPECT_EQ(plan(q).sql, plan(q, annotated).sql) << q;
}

TEST(Planner, ClosedLastQuarterRange) {
  auto out = plan("Which members have closed accounts in the last quarter?");
  ASSERT_TRUE(out.ok());
  EXPECT_NE(out.sql.find("close_date >= '2025-01-01' AND ma.close_date < '2025-04-01'"), std::string::npos) << out.sql;
}

TEST(Planner, StageTaggedErrors) {
  auto none = plan("xylophone quartet");
  ASSERT_FALSE(none.ok());
  EXPECT_EQ(none.error->stage, "identify_tables");
  EXPECT_EQ(none.error->code, "NoTableMatch");
  EXPECT_EQ(none.audit["error"]["stage"], "identify_tables");

  auto ung = plan("number of loans by zebra");
  ASSERT_FALSE(ung.ok());
  EXPECT_EQ(ung.error->stage, "ground");
  EXPECT_EQ(ung.error->code, "UngroundedPhrase");
  EXPECT_TRUE(ung.error->details["alternatives"].is_array());

  auto pii = plan("list member ssn");
  ASSERT_FALSE(pii.ok());
  EXPECT_EQ(pii.error->stage, "apply_rules");
}

TEST(Planner, AuditRecordsInterpretation) {
  auto out = plan("average loan amount by branch");
  ASSERT_TRUE(out.ok());
  for (auto* k : {"question", "sketch", "groundings", "tables", "join_path", "rules_fired", "tree", "sql", "latency_ms"})
    EXPECT_TRUE(out.audit.contains(k)) << k;
  EXPECT_EQ(out.audit["join_path"].size(), 2u);
  EXPECT_EQ(out.audit["rules_fired"].back(), "default_limit");
}

TEST(Planner, Deterministic) {
  for (std::string q : {"total balance and number of cards per member", "members in the Harbor branch"}) {
    auto a = plan(q), b = plan(q);
    EXPECT_EQ(a.sql, b.sql);
    EXPECT_EQ(a.audit["groundings"], b.audit["groundings"]);
  }
}

TEST(Planner, RewriteAcceptedWhenValid) {
  RewritingAdjudicator adj("SELECT loan.status, COUNT(*) FROM loan GROUP BY loan.status");
  auto out = plan_query("number of loans by status", prepared(), adj);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.sql, "SELECT loan.status, COUNT(*) FROM loan GROUP BY loan.status");
  EXPECT_EQ(out.audit["rewrite_applied"], true);
}

TEST(Planner, RewriteRejectedWhenItReadsPii) {
  RewritingAdjudicator adj("SELECT ssn FROM member");
  auto out = plan_query("show members", prepared(), adj);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.sql.find("ssn"), std::string::npos);
  EXPECT_EQ(out.audit["rewrite_rejected"], "RewriteRejected: PiiIntroduced");
}

TEST(Planner, ValidateRewriteReasons) {
  const auto& g = oracle::fixture_graph();
  EXPECT_TRUE(validate_rewrite("SELECT m.branch FROM member m", g).ok);
  EXPECT_EQ(validate_rewrite("SELECT x FROM nowhere", g).reason, "UnknownTable");
  EXPECT_EQ(validate_rewrite("SELECT m.nothing FROM member m", g).reason, "UnknownColumn");
  EXPECT_EQ(validate_rewrite("SELECT email FROM member", g).reason, "PiiIntroduced");
  EXPECT_EQ(validate_rewrite("SELECT branch FROM member WHERE member_id IN (SELECT member_id FROM member WHERE ssn = '1')", g).reason,
            "PiiIntroduced");
  EXPECT_EQ(validate_rewrite("DELETE FROM member", g).reason, "NotReadOnly");
  EXPECT_EQ(validate_rewrite("SELECT FROM WHERE", g).reason, "ParseFailure");
}

TEST(Planner, ReferencedColumnsResolvesAliasesAndCtes) {
  const auto& g = oracle::fixture_graph();
  auto refs = referenced_columns(
      "WITH t AS (SELECT account_id, amount FROM loan) SELECT ma.product_category FROM t JOIN member_account ma ON ma.account_id = t.account_id",
      g);
  EXPECT_TRUE(refs.count({"LOAN", "amount"}));
  EXPECT_TRUE(refs.count({"MEMBER_ACCOUNT", "account_id"}));
  EXPECT_TRUE(refs.count({"MEMBER_ACCOUNT", "product_category"}));
}

TEST(Planner, SampleQuestionsShortCircuitTheGrammar) {
  ASSERT_FALSE(prepared().samples.empty());
  auto& [q, sketch] = prepared().samples.front();
  auto out = plan(q);
  ASSERT_TRUE(out.ok()) << q;
  EXPECT_EQ(out.audit["sketch_source"], "sample_question");
}

TEST(Planner, GraphSummaryHasNoPii) {
  auto summary = graph_summary(oracle::fixture_graph()).dump();
  EXPECT_EQ(summary.find("ssn"), std::string::npos);
  EXPECT_EQ(summary.find("email"), std::string::npos);
  EXPECT_EQ(summary.find("@"), std::string::npos);
}
