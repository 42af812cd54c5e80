#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <thread>

#include "oracle.hpp"
#include "tursio/store.hpp"

using namespace tursio;
namespace fs = std::filesystem;

namespace {

struct Crash : std::runtime_error {
  Crash() : std::runtime_error("crash") {}
};

// Every line of the raw log up to the committed length parses as JSON.
void expect_whole_lines(const fs::path& dir) {
  for (auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.path().extension() != ".jsonl") continue;
    auto idx = e.path();
    idx.replace_extension(".idx");
    if (!fs::exists(idx)) continue;
    uint64_t length = 0, count = 0;
    std::ifstream(idx) >> length >> count;
    std::ifstream in(e.path(), std::ios::binary);
    std::string data(length, '\0');
    in.read(data.data(), static_cast<std::streamsize>(length));
    std::istringstream lines(data);
    std::string line;
    uint64_t n = 0;
    while (std::getline(lines, line)) {
      EXPECT_NO_THROW(json::parse(line)) << line;
      ++n;
    }
    EXPECT_EQ(n, count);
  }
}

}  // namespace

TEST(Store, AppendAndRead) {
  Store s(oracle::temp_dir("store_basic"));
  EXPECT_EQ(s.append("g", "history", {{"n", 1}}), 1);
  EXPECT_EQ(s.append("g", "history", {{"n", 2}}), 2);
  auto r = s.read("g", "history");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[1]["n"], 2);
  EXPECT_TRUE(s.read("g", "other").empty());
}

TEST(Store, HistoryIds) {
  Store s(oracle::temp_dir("store_hist"));
  EXPECT_EQ(s.append_history({{"graph_id", "cu"}}), "cu-1");
  EXPECT_EQ(s.append_history({{"graph_id", "cu"}}), "cu-2");
  EXPECT_EQ(s.history("cu")[1]["audit_id"], "cu-2");
}

TEST(Store, CrashAtEveryStageLeavesNoTornRecord) {
  for (std::string stage : {"data_written", "before_index_rename"}) {
    fs::path dir = oracle::temp_dir("store_crash_" + stage);
    {
      Store s(dir);
      s.append_history({{"graph_id", "cu"}, {"q", "first"}});
      s.fault_hook = [&](std::string_view at) {
        if (at == stage) throw Crash();
      };
      EXPECT_THROW(s.append_history({{"graph_id", "cu"}, {"q", std::string(5000, 'x')}}), Crash);
    }
    expect_whole_lines(dir);
    Store reopened(dir);
    auto h = reopened.history("cu");
    ASSERT_EQ(h.size(), 1u) << stage;
    EXPECT_EQ(h[0]["q"], "first");
    // the next append lands cleanly after the torn tail
    reopened.append_history({{"graph_id", "cu"}, {"q", "third"}});
    auto h2 = reopened.history("cu");
    ASSERT_EQ(h2.size(), 2u);
    EXPECT_EQ(h2[1]["q"], "third");
    expect_whole_lines(dir);
  }
}

TEST(Store, RandomCrashesNeverTear) {
  fs::path dir = oracle::temp_dir("store_random");
  std::mt19937_64 rng(99);
  size_t committed = 0;
  for (int i = 0; i < 200; ++i) {
    Store s(dir);
    int crash = static_cast<int>(rng() % 3);
    s.fault_hook = [&](std::string_view at) {
      if ((crash == 0 && at == "data_written") || (crash == 1 && at == "before_index_rename")) throw Crash();
    };
    try {
      s.append_history({{"graph_id", "g"}, {"i", i}, {"pad", std::string(rng() % 300, 'p')}});
      ++committed;
    } catch (const Crash&) {
    }
    ASSERT_EQ(Store(dir).history("g").size(), committed);
  }
  expect_whole_lines(dir);
}

TEST(Store, ConcurrentAppends) {
  Store s(oracle::temp_dir("store_concurrent"));
  std::vector<std::thread> ts;
  for (int t = 0; t < 4; ++t)
    ts.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) s.append("g", "history", {{"t", t}, {"i", i}});
    });
  for (auto& t : ts) t.join();
  EXPECT_EQ(s.read("g", "history").size(), 200u);
}

TEST(Store, FeedbackLifecycle) {
  Store s(oracle::temp_dir("store_feedback"));
  FeedbackEntry neg;
  neg.graph_id = "cu";
  neg.sentiment = Sentiment::Negative;
  neg.graph_version = 3;
  auto submitted = s.submit_feedback(neg);
  EXPECT_EQ(submitted.status, "Open");
  FeedbackEntry pos = neg;
  pos.sentiment = Sentiment::Positive;
  auto p = s.submit_feedback(pos);
  EXPECT_EQ(p.status, "Reviewed");

  auto code = [&](const std::string& id, int64_t v) {
    try {
      s.resolve_feedback(id, v);
      return std::string();
    } catch (const Error& e) {
      return e.code();
    }
  };
  EXPECT_EQ(code(submitted.id, 3), "InvalidPayload");
  EXPECT_EQ(code(p.id, 4), "NotNegative");
  EXPECT_EQ(code("nope", 4), "NotFound");
  auto resolved = s.resolve_feedback(submitted.id, 4);
  EXPECT_EQ(resolved.status, "Resolved");
  EXPECT_EQ(resolved.resolved_by_version, 4);
  for (auto& f : s.feedback())
    if (f.id == submitted.id) EXPECT_EQ(f.status, "Resolved");
}

TEST(Store, Bookmarks) {
  Store s(oracle::temp_dir("store_bm"));
  Bookmark b;
  b.graph_id = "cu";
  b.owner = "u1";
  b.label = "fees";
  EXPECT_EQ(s.add_bookmark(b).id, "bm-cu-1");
  EXPECT_EQ(s.bookmarks("cu").size(), 1u);
}

TEST(Store, GraphSnapshots) {
  Store s(oracle::temp_dir("store_graph"));
  s.save_graph(oracle::fixture_graph());
  auto g = s.load_graph(oracle::fixture_graph().graph_id);
  ASSERT_TRUE(g);
  EXPECT_EQ(*g, oracle::fixture_graph());
  EXPECT_FALSE(s.load_graph("missing"));
  EXPECT_EQ(s.graph_ids(), std::vector<std::string>{oracle::fixture_graph().graph_id});
}

TEST(Store, Insights) {
  std::vector<json> history = {
      {{"latency_ms", 10.0}, {"groundings", {{{"target", "LOAN.amount"}}}}},
      {{"latency_ms", 30.0}, {"error", {{"stage", "ground"}}}},
      {{"latency_ms", 20.0}, {"groundings", {{{"target", "LOAN.amount"}}, {{"target", "MEMBER.branch"}}}}},
  };
  FeedbackEntry f;
  auto j = insights(history, {f});
  EXPECT_EQ(j["query_count"], 3);
  EXPECT_EQ(j["error_count"], 1);
  EXPECT_DOUBLE_EQ(j["error_rate"].get<double>(), 1.0 / 3.0);
  EXPECT_EQ(j["error_rate_by_stage"]["ground"], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(j["median_latency_ms"].get<double>(), 20.0);
  EXPECT_EQ(j["top_grounded_columns"][0]["column"], "LOAN.amount");
}
