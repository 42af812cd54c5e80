#include <gtest/gtest.h>

#include <atomic>

#include "httplib.h"
#include "oracle.hpp"
#include "tursio/service.hpp"

using namespace tursio;

namespace {

std::atomic<int> g_executes{0};

class CountingAdapter : public DataSourceAdapter {
 public:
  explicit CountingAdapter(std::unique_ptr<DataSourceAdapter> inner) : inner_(std::move(inner)) {}
  std::vector<std::string> list_tables() override { return inner_->list_tables(); }
  std::vector<std::pair<std::string, DataType>> read_schema(const std::string& t) override {
    return inner_->read_schema(t);
  }
  std::vector<Row> scan(const std::string& t, std::optional<size_t> limit) override { return inner_->scan(t, limit); }
  ResultSet execute(const std::string& sql) override {
    ++g_executes;
    return inner_->execute(sql);
  }

 private:
  std::unique_ptr<DataSourceAdapter> inner_;
};

json principals() {
  auto p = [](std::string id, std::string role, json grants) {
    return json{{"id", id}, {"role", role}, {"token_sha256", sha256_hex("tok-" + id)}, {"grants", grants}};
  };
  return json::array({p("admin", "Administrator", json::array({"*"})), p("owner", "Owner", {"cu"}),
                      p("user", "User", {"cu"}), p("viewer", "Viewer", {"cu"}), p("viewer2", "Viewer", {"cu"}),
                      p("outsider", "Owner", {"other"})});
}

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ServiceConfig cfg;
    cfg.data_dir = oracle::temp_dir("service");
    cfg.principals->replace(PrincipalTable::parse(principals()));
    cfg.adapter_factory = [](const json& c) { return std::make_unique<CountingAdapter>(open_adapter(c)); };
    cfg.clock = [] { return std::string("2025-04-01T00:00:00Z"); };
    svc_ = new Service(cfg);
    auto ds = call("admin", "POST", "/v1/datasources", {{"kind", "csv"}, {"path", oracle::fixture_dir().string()}});
    ASSERT_EQ(ds.status, 201) << ds.body.dump();
    ds_id_ = ds.body["id"];
    auto build = call("admin", "POST", "/v1/graphs", {{"datasource", ds_id_}, {"graph_id", "cu"}});
    ASSERT_EQ(build.status, 202) << build.body.dump();
    EXPECT_EQ(build.body["status"], "Building");
    svc_->wait_for_builds();
  }
  static void TearDownTestSuite() {
    delete svc_;
    svc_ = nullptr;
  }

  static ApiResponse call(const std::string& who, const std::string& method, const std::string& path,
                          const json& body = nullptr, std::map<std::string, std::string> query = {}) {
    ApiRequest r;
    r.method = method;
    r.path = path;
    r.token = "tok-" + who;
    r.body = body.is_null() ? "" : body.dump();
    r.query = std::move(query);
    return svc_->handle(r);
  }

  static inline Service* svc_ = nullptr;
  static inline std::string ds_id_;
};

}  // namespace

TEST_F(ServiceTest, BuildReachesReady) {
  auto st = call("owner", "GET", "/v1/graphs/cu/status");
  ASSERT_EQ(st.status, 200);
  EXPECT_EQ(st.body["status"], "Ready");
  auto g = call("viewer", "GET", "/v1/graphs/cu");
  ASSERT_EQ(g.status, 200);
  EXPECT_EQ(g.body["tables"].size(), 5u);
  EXPECT_EQ(g.body["joins"].size(), 4u);
}

TEST_F(ServiceTest, AuthFailures) {
  ApiRequest r{"GET", "/v1/graphs/cu", "bogus", "", {}};
  EXPECT_EQ(svc_->handle(r).status, 401);
  r.token.clear();
  EXPECT_EQ(svc_->handle(r).status, 401);
  auto no_grant = call("outsider", "GET", "/v1/graphs/cu");
  EXPECT_EQ(no_grant.status, 403);
  EXPECT_EQ(no_grant.body["error"]["code"], "NoGrant");
  auto forbidden = call("user", "PATCH", "/v1/graphs/cu/annotations", {{"kind", "Description"}});
  EXPECT_EQ(forbidden.status, 403);
  EXPECT_EQ(forbidden.body["error"]["code"], "RoleForbidden");
  EXPECT_EQ(call("viewer", "POST", "/v1/bookmarks", {{"graph_id", "cu"}}).status, 403);
  EXPECT_EQ(call("user", "POST", "/v1/datasources", {{"kind", "csv"}, {"path", "/tmp"}}).status, 403);
  EXPECT_EQ(call("user", "GET", "/v1/insights").status, 403);
}

TEST_F(ServiceTest, ClientErrors) {
  ApiRequest bad{"POST", "/v1/graphs/cu/query", "tok-user", "{nope", {}};
  EXPECT_EQ(svc_->handle(bad).status, 400);
  EXPECT_EQ(call("user", "POST", "/v1/graphs/cu/query", json::object()).status, 422);
  EXPECT_EQ(call("admin", "GET", "/v1/graphs/missing").status, 404);
  EXPECT_EQ(call("admin", "GET", "/v1/nothing").status, 404);
  EXPECT_EQ(call("admin", "POST", "/v1/graphs", {{"datasource", "ds-999"}}).status, 404);
  EXPECT_EQ(call("admin", "POST", "/v1/datasources", {{"kind", "csv"}}).status, 422);
  EXPECT_EQ(call("owner", "PATCH", "/v1/graphs/cu/annotations", {{"kind", "Prioritization"}}).status, 422);
  auto fb = call("user", "POST", "/v1/feedback", {{"graph_id", "cu"}});
  EXPECT_EQ(fb.status, 422);
}

TEST_F(ServiceTest, ConcurrentBuildConflicts) {
  auto first = call("admin", "POST", "/v1/graphs", {{"datasource", ds_id_}, {"graph_id", "cu_copy"}});
  ASSERT_EQ(first.status, 202);
  auto second = call("admin", "POST", "/v1/graphs", {{"datasource", ds_id_}, {"graph_id", "cu_copy"}});
  svc_->wait_for_builds();
  // the first build may already be done on a fast machine
  if (second.status != 202) EXPECT_EQ(second.status, 409);
  svc_->wait_for_builds();
  EXPECT_EQ(call("admin", "GET", "/v1/graphs/cu_copy/status").body["status"], "Ready");
}

TEST_F(ServiceTest, PlanErrorsCarryStage) {
  auto r = call("user", "POST", "/v1/graphs/cu/query", {{"question", "number of loans by zebra"}});
  ASSERT_EQ(r.status, 400);
  EXPECT_EQ(r.body["error"]["stage"], "ground");
  EXPECT_EQ(r.body["error"]["code"], "UngroundedPhrase");
  EXPECT_TRUE(r.body["error"].contains("audit_id"));
}

TEST_F(ServiceTest, DryRunNeverExecutes) {
  int before = g_executes;
  auto r = call("owner", "POST", "/v1/graphs/cu/query",
                {{"question", "number of loans by status"}, {"dry_run", true}, {"execute", true}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_FALSE(r.body.contains("results"));
  EXPECT_FALSE(r.body["sql"].get<std::string>().empty());
  EXPECT_EQ(g_executes, before);
  auto ex = call("owner", "POST", "/v1/graphs/cu/query", {{"question", "number of loans by status"}, {"execute", true}});
  ASSERT_EQ(ex.status, 200);
  EXPECT_EQ(g_executes, before + 1);
  EXPECT_EQ(ex.body["results"]["rows"].size(), 4u);
}

TEST_F(ServiceTest, ViewerGetsShapedResults) {
  auto raw = call("user", "POST", "/v1/graphs/cu/query", {{"question", "loans with amount over 30000"}, {"execute", true}});
  ASSERT_EQ(raw.status, 200) << raw.body.dump();
  ASSERT_TRUE(raw.body["results"].contains("rows"));
  auto rows = raw.body["results"]["rows"];
  ASSERT_FALSE(rows.empty());

  auto v = call("viewer", "POST", "/v1/graphs/cu/query", {{"question", "loans with amount over 30000"}, {"execute", true}});
  ASSERT_EQ(v.status, 200);
  const json& res = v.body["results"];
  EXPECT_FALSE(res.contains("rows"));
  EXPECT_EQ(res["reason"], "SummaryOnly");
  EXPECT_EQ(res["row_count"], rows.size());
  std::string dump = res.dump();
  // numeric columns may be summarized by min/max; text dimensions never appear
  for (auto& row : rows)
    for (auto& v : row)
      if (v.is_string()) EXPECT_EQ(dump.find(v.dump()), std::string::npos) << v;

  auto agg = call("viewer", "POST", "/v1/graphs/cu/query", {{"question", "number of loans by status"}, {"execute", true}});
  EXPECT_EQ(agg.body["results"]["rows"].size(), 4u);
}

TEST_F(ServiceTest, HistoryCountsReconcile) {
  auto count = [](const std::string& who) {
    return call(who, "GET", "/v1/history", nullptr, {{"graph_id", "cu"}}).body["total"].get<size_t>();
  };
  size_t before = count("admin");
  size_t viewer_before = count("viewer2");
  for (std::string q : {"show members", "number of cards by card type", "xylophone quartet"})
    call("viewer2", "POST", "/v1/graphs/cu/query", {{"question", q}});
  call("user", "POST", "/v1/graphs/cu/query", {{"question", "show members"}});
  EXPECT_EQ(count("admin"), before + 4);
  EXPECT_EQ(count("viewer2"), viewer_before + 3);
  auto page = call("admin", "GET", "/v1/history", nullptr, {{"graph_id", "cu"}, {"offset", "1"}, {"limit", "2"}});
  EXPECT_EQ(page.body["history"].size(), 2u);
  for (auto& rec : call("viewer2", "GET", "/v1/history").body["history"]) EXPECT_EQ(rec["principal"], "viewer2");
  auto ins = call("owner", "GET", "/v1/insights", nullptr, {{"graph_id", "cu"}});
  ASSERT_EQ(ins.status, 200);
  EXPECT_EQ(ins.body["graphs"]["cu"]["query_count"].get<size_t>(), count("admin"));
}

TEST_F(ServiceTest, AnnotationLoopResolvesFeedback) {
  const json q = {{"question", "List accounts which got closed last year"}};
  auto before = call("user", "POST", "/v1/graphs/cu/query", q);
  ASSERT_EQ(before.status, 200);
  auto fb = call("user", "POST", "/v1/feedback",
                 {{"graph_id", "cu"}, {"audit_ref", before.body["audit_id"]}, {"sentiment", "Negative"},
                  {"user_correction", "close date means the loan close date"}});
  ASSERT_EQ(fb.status, 201);
  EXPECT_EQ(fb.body["status"], "Open");
  EXPECT_EQ(call("user", "GET", "/v1/feedback").status, 403);
  auto listed = call("owner", "GET", "/v1/feedback", nullptr, {{"graph_id", "cu"}});
  EXPECT_FALSE(listed.body["feedback"].empty());

  json ann = {{"target", {{"kind", "Graph"}}},
              {"kind", "Prioritization"},
              {"payload", {{"term", "close date"}, {"candidates", {"LOAN.close_date", "MEMBER_ACCOUNT.close_date"}}}}};
  auto patched = call("owner", "PATCH", "/v1/graphs/cu/annotations", ann);
  ASSERT_EQ(patched.status, 200) << patched.body.dump();
  int64_t version = patched.body["version"];
  EXPECT_GT(version, before.body["graph_version"].get<int64_t>());

  auto after = call("user", "POST", "/v1/graphs/cu/query", q);
  EXPECT_EQ(after.body["graph_version"], version);
  EXPECT_NE(after.body["sql"], before.body["sql"]);
  EXPECT_NE(after.body["sql"].get<std::string>().find("loan.close_date"), std::string::npos);

  std::string fid = fb.body["id"];
  EXPECT_EQ(call("owner", "POST", "/v1/feedback/" + fid + "/resolve", {{"annotation_version", version + 5}}).status, 422);
  auto resolved = call("owner", "POST", "/v1/feedback/" + fid + "/resolve", {{"annotation_version", version}});
  ASSERT_EQ(resolved.status, 200) << resolved.body.dump();
  EXPECT_EQ(resolved.body["status"], "Resolved");
  EXPECT_EQ(call("owner", "POST", "/v1/feedback/fb-999/resolve", {{"annotation_version", version}}).status, 404);
}

TEST_F(ServiceTest, Bookmarks) {
  auto b = call("user", "POST", "/v1/bookmarks", {{"graph_id", "cu"}, {"label", "closed"}});
  ASSERT_EQ(b.status, 201);
  auto list = call("viewer", "GET", "/v1/bookmarks", nullptr, {{"graph_id", "cu"}});
  ASSERT_EQ(list.status, 200);
  EXPECT_FALSE(list.body["bookmarks"].empty());
  EXPECT_TRUE(call("outsider", "GET", "/v1/bookmarks").body["bookmarks"].empty());
}

TEST_F(ServiceTest, RestartKeepsGraphsAndHistory) {
  ServiceConfig cfg;
  cfg.data_dir = svc_->store().dir();
  cfg.principals->replace(PrincipalTable::parse(principals()));
  Service again(cfg);
  ApiRequest r{"GET", "/v1/graphs/cu/status", "tok-admin", "", {}};
  EXPECT_EQ(again.handle(r).body["status"], "Ready");
  EXPECT_EQ(again.store().history("cu").size(), svc_->store().history("cu").size());
}

TEST_F(ServiceTest, HttpRoundTrip) {
  httplib::Server server;
  svc_->bind(server);
  int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  auto res = client.Post("/v1/graphs/cu/query", {{"Authorization", "Bearer tok-user"}},
                         json{{"question", "number of loans by status"}}.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_NE(json::parse(res->body)["sql"].get<std::string>().find("GROUP BY"), std::string::npos);
  auto unauth = client.Get("/v1/graphs/cu");
  ASSERT_TRUE(unauth);
  EXPECT_EQ(unauth->status, 401);
  server.stop();
  t.join();
}
