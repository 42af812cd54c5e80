#include "tursio/service.hpp"

#include <chrono>
#include <ctime>
#include <fmt/format.h>

#include "httplib.h"
#include "tursio/graph_builder.hpp"
#include "tursio/text.hpp"

namespace tursio {

namespace {

constexpr const char* kSystem = "_system";

ApiResponse error(int status, const std::string& code, const std::string& message, json extra = json::object()) {
  json e = {{"code", code}, {"message", message}};
  for (auto& [k, v] : extra.items()) e[k] = v;
  return {status, {{"error", e}}};
}

ApiResponse forbidden(const Decision& d, Action a) {
  return error(403, d.reason, fmt::format("{} is not permitted", to_string(a)));
}

int status_for(const std::string& code) {
  if (code == "NotFound" || code == "TableNotFound") return 404;
  if (code == "InvalidPayload" || code == "UnresolvedTarget" || code == "MalformedDocument" ||
      code == "UnsupportedSchemaVersion" || code == "NotNegative")
    return 422;
  if (code == "AdapterFailure" || code == "AdjudicatorFailure") return 502;
  return 500;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < path.size()) {
    size_t j = path.find('/', i);
    if (j == std::string::npos) j = path.size();
    if (j > i) out.push_back(path.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

}  // namespace

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Service::Service(ServiceConfig config) : config_(std::move(config)), store_(config_.data_dir) {
  for (auto& id : store_.graph_ids()) builds_[id] = {"Ready", ""};
}

Service::~Service() { wait_for_builds(); }

void Service::wait_for_builds() {
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    workers.swap(workers_);
  }
  for (auto& w : workers)
    if (w.joinable()) w.join();
}

std::string Service::now() const { return config_.clock ? config_.clock() : utc_now(); }

std::shared_ptr<const PreparedGraph> Service::graph(const std::string& id) {
  {
    std::lock_guard lock(mu_);
    if (auto it = graphs_.find(id); it != graphs_.end()) return it->second;
  }
  std::optional<ContextGraph> g;
  try {
    g = store_.load_graph(id);
  } catch (const Error&) {
    return nullptr;
  }
  if (!g) return nullptr;
  auto prepared = std::make_shared<const PreparedGraph>(std::move(*g));
  std::lock_guard lock(mu_);
  return graphs_.emplace(id, prepared).first->second;
}

void Service::publish(ContextGraph g) {
  store_.save_graph(g);
  auto prepared = std::make_shared<const PreparedGraph>(std::move(g));
  std::lock_guard lock(mu_);
  graphs_[prepared->graph.graph_id] = prepared;
}

std::optional<json> Service::datasource(const std::string& id) const {
  std::optional<json> found;
  for (auto& r : store_.read(kSystem, "datasources"))
    if (r.value("id", "") == id) found = r;
  return found;
}

std::optional<std::string> Service::graph_source(const std::string& graph_id) const {
  std::optional<std::string> found;
  for (auto& r : store_.read(kSystem, "graph_sources"))
    if (r.value("graph_id", "") == graph_id) found = r.value("datasource", "");
  return found;
}

ApiResponse Service::handle(const ApiRequest& req) {
  auto principal = config_.principals->find_by_token(req.token);
  if (!principal) return error(401, "Unauthenticated", "missing or unknown bearer token");
  json body = json::object();
  if (!text::trim(req.body).empty()) {
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      return error(400, "InvalidPayload", std::string("body is not JSON: ") + e.what());
    }
    if (!body.is_object()) return error(400, "InvalidPayload", "body must be a JSON object");
  }
  auto seg = split_path(req.path);
  const Principal& p = *principal;
  const std::string& m = req.method;
  try {
    if (seg.size() < 2 || seg[0] != "v1") return error(404, "NotFound", "no route " + req.path);
    const std::string& res = seg[1];
    if (res == "datasources" && seg.size() == 2 && m == "POST") return post_datasource(p, body);
    if (res == "graphs") {
      if (seg.size() == 2 && m == "POST") return post_graph(p, body);
      if (seg.size() == 3 && m == "GET") return get_graph(p, seg[2]);
      if (seg.size() == 4 && seg[3] == "status" && m == "GET") return get_status(p, seg[2]);
      if (seg.size() == 4 && seg[3] == "query" && m == "POST") return post_query(p, seg[2], body);
      if (seg.size() == 4 && seg[3] == "annotations" && m == "PATCH") return patch_annotations(p, seg[2], body);
    }
    if (res == "feedback") {
      if (seg.size() == 2 && m == "POST") return post_feedback(p, body);
      if (seg.size() == 2 && m == "GET") return get_feedback(p, req);
      if (seg.size() == 4 && seg[3] == "resolve" && m == "POST") return resolve_feedback(p, seg[2], body);
    }
    if (res == "bookmarks" && seg.size() == 2) {
      if (m == "POST") return post_bookmark(p, body);
      if (m == "GET") return get_bookmarks(p, req);
    }
    if (res == "history" && seg.size() == 2 && m == "GET") return get_history(p, req);
    if (res == "insights" && seg.size() == 2 && m == "GET") return get_insights(p, req);
    return error(404, "NotFound", "no route " + m + " " + req.path);
  } catch (const json::exception& e) {
    return error(422, "InvalidPayload", e.what());
  } catch (const Error& e) {
    return error(status_for(e.code()), e.code(), e.what());
  }
}

ApiResponse Service::post_datasource(const Principal& p, const json& body) {
  if (auto d = authorize(p.role, Action::RegisterDatasource); !d.allow) return forbidden(d, Action::RegisterDatasource);
  try {
    config_.adapter_factory(body);
  } catch (const Error& e) {
    return error(422, e.code(), e.what());
  }
  json record = body;
  record["id"] = fmt::format("ds-{}", store_.read(kSystem, "datasources").size() + 1);
  record["created_by"] = p.id;
  store_.append(kSystem, "datasources", record);
  return {201, record};
}

ApiResponse Service::post_graph(const Principal& p, const json& body) {
  if (auto d = authorize(p.role, Action::RebuildGraph); !d.allow) return forbidden(d, Action::RebuildGraph);
  std::string ds_id = body.value("datasource", "");
  auto ds = datasource(ds_id);
  if (!ds) return error(404, "NotFound", "unknown datasource " + ds_id);
  std::string graph_id = body.value("graph_id", "");
  if (graph_id.empty()) graph_id = "graph-" + ds_id;
  if (!p.can_access(graph_id)) return error(403, "NoGrant", "no grant for graph " + graph_id);
  BuildOptions options;
  options.graph_id = graph_id;
  options.built_at = now();
  if (body.contains("tables")) options.tables = body["tables"].get<std::vector<std::string>>();
  {
    std::lock_guard lock(mu_);
    auto it = builds_.find(graph_id);
    if (it != builds_.end() && it->second.status == "Building")
      return error(409, "BuildInProgress", "graph " + graph_id + " is already building");
    builds_[graph_id] = {"Building", ""};
  }
  store_.append(kSystem, "graph_sources", {{"graph_id", graph_id}, {"datasource", ds_id}});
  json config = *ds;
  std::thread worker([this, graph_id, config, options] {
    BuildState result{"Ready", ""};
    try {
      auto adapter = config_.adapter_factory(config);
      auto adjudicator = config_.adjudicator_factory();
      auto built = build_graph(*adapter, *adjudicator, options);
      auto violations = validate_graph(built.graph);
      if (!violations.empty()) {
        result = {"Failed", fmt::format("{}: {}", violations.front().rule, violations.front().element)};
      } else {
        publish(std::move(built.graph));
      }
    } catch (const std::exception& e) {
      result = {"Failed", e.what()};
    }
    std::lock_guard lock(mu_);
    builds_[graph_id] = result;
  });
  {
    std::lock_guard lock(mu_);
    workers_.push_back(std::move(worker));
  }
  return {202, {{"graph_id", graph_id}, {"job_id", graph_id}, {"status", "Building"}}};
}

ApiResponse Service::get_graph(const Principal& p, const std::string& id) {
  if (auto d = authorize(p.role, Action::ViewGraph); !d.allow) return forbidden(d, Action::ViewGraph);
  if (!p.can_access(id)) return error(403, "NoGrant", "no grant for graph " + id);
  auto g = graph(id);
  if (!g) return error(404, "NotFound", "unknown graph " + id);
  return {200, json::parse(serialize_graph(g->graph))};
}

ApiResponse Service::get_status(const Principal& p, const std::string& id) {
  if (auto d = authorize(p.role, Action::ViewGraph); !d.allow) return forbidden(d, Action::ViewGraph);
  if (!p.can_access(id)) return error(403, "NoGrant", "no grant for graph " + id);
  std::lock_guard lock(mu_);
  auto it = builds_.find(id);
  if (it == builds_.end()) return error(404, "NotFound", "unknown graph " + id);
  json j = {{"graph_id", id}, {"status", it->second.status}};
  if (!it->second.reason.empty()) j["reason"] = it->second.reason;
  return {200, j};
}

ApiResponse Service::post_query(const Principal& p, const std::string& id, const json& body) {
  if (auto d = authorize(p.role, Action::Plan); !d.allow) return forbidden(d, Action::Plan);
  if (!p.can_access(id)) return error(403, "NoGrant", "no grant for graph " + id);
  auto g = graph(id);
  if (!g) return error(404, "NotFound", "unknown graph " + id);
  if (!body.contains("question") || !body["question"].is_string())
    return error(422, "InvalidPayload", "question is required");
  bool dry_run = body.value("dry_run", false);
  bool execute = body.value("execute", false) && !dry_run;
  if (execute)
    if (auto d = authorize(p.role, Action::Execute); !d.allow) return forbidden(d, Action::Execute);

  PlannerOptions options = config_.planner;
  if (config_.clock || options.clock.empty()) options.clock = now();
  options.principal = p.id;
  auto adjudicator = config_.adjudicator_factory();
  PlanOutcome plan = plan_query(body["question"].get<std::string>(), *g, *adjudicator, options);
  json record = plan.audit;
  record["principal"] = p.id;
  record["recorded_at"] = now();
  record["dry_run"] = dry_run;
  record["executed"] = execute && plan.ok();
  std::string audit_id = store_.append_history(record);

  if (!plan.ok()) {
    const PlannerError& e = *plan.error;
    json extra = {{"stage", e.stage}, {"details", e.details}, {"audit_id", audit_id}};
    if (e.details.contains("alternatives")) extra["alternatives"] = e.details["alternatives"];
    return error(400, e.code, e.message, extra);
  }
  json out = {{"audit_id", audit_id},
              {"graph_id", id},
              {"graph_version", g->graph.version},
              {"sketch", plan.audit.value("sketch", json::object())},
              {"groundings", plan.audit.value("groundings", json::array())},
              {"tables", plan.audit.value("tables", json::array())},
              {"join_path", plan.audit.value("join_path", json::array())},
              {"rules_fired", plan.audit.value("rules_fired", json::array())},
              {"tree", plan.audit.value("tree", json::object())},
              {"sql", plan.sql},
              {"rewrite_applied", plan.audit.value("rewrite_applied", false)}};
  if (!execute) return {200, out};

  auto source = graph_source(id);
  std::optional<json> ds = source ? datasource(*source) : std::nullopt;
  if (!ds) return error(404, "NotFound", "graph " + id + " has no datasource");
  ResultSet rows;
  try {
    rows = config_.adapter_factory(*ds)->execute(plan.sql);
  } catch (const Error& e) {
    return error(502, e.code(), e.what(), {{"audit_id", audit_id}});
  }
  Decision full = authorize(p.role, Action::ViewFullResults);
  out["results"] = full.allow ? result_to_json(rows) : shape_for_viewer(rows, *plan.tree);
  if (!full.allow) out["results"]["reason"] = full.reason;
  return {200, out};
}

ApiResponse Service::patch_annotations(const Principal& p, const std::string& id, const json& body) {
  if (auto d = authorize(p.role, Action::ApplyAnnotation); !d.allow) return forbidden(d, Action::ApplyAnnotation);
  if (!p.can_access(id)) return error(403, "NoGrant", "no grant for graph " + id);
  auto g = graph(id);
  if (!g) return error(404, "NotFound", "unknown graph " + id);
  json doc = body.contains("annotation") ? body["annotation"] : body;
  if (!doc.contains("author")) doc["author"] = p.id;
  if (!doc.contains("created_at")) doc["created_at"] = now();
  Annotation ann;
  try {
    ann = doc.get<Annotation>();
  } catch (const json::exception& e) {
    return error(422, "InvalidPayload", e.what());
  } catch (const Error& e) {
    return error(422, e.code(), e.what());
  }
  ContextGraph next;
  try {
    next = apply_annotation(g->graph, ann);
  } catch (const Error& e) {
    return error(422, e.code(), e.what());
  }
  int64_t version = next.version;
  publish(std::move(next));
  return {200, {{"graph_id", id}, {"version", version}}};
}

ApiResponse Service::post_feedback(const Principal& p, const json& body) {
  if (auto d = authorize(p.role, Action::Feedback); !d.allow) return forbidden(d, Action::Feedback);
  FeedbackEntry f;
  f.graph_id = body.at("graph_id").get<std::string>();
  if (!p.can_access(f.graph_id)) return error(403, "NoGrant", "no grant for graph " + f.graph_id);
  auto g = graph(f.graph_id);
  if (!g) return error(404, "NotFound", "unknown graph " + f.graph_id);
  f.audit_ref = body.value("audit_ref", "");
  f.sentiment = sentiment_from_string(body.at("sentiment").get<std::string>());
  if (body.contains("user_correction") && body["user_correction"].is_string())
    f.user_correction = body["user_correction"].get<std::string>();
  f.graph_version = g->graph.version;
  f.principal = p.id;
  f.created_at = now();
  return {201, feedback_to_json(store_.submit_feedback(f))};
}

ApiResponse Service::get_feedback(const Principal& p, const ApiRequest& r) {
  if (auto d = authorize(p.role, Action::ResolveFeedback); !d.allow) return forbidden(d, Action::ResolveFeedback);
  json out = json::array();
  auto gid = r.query.find("graph_id");
  for (auto& f : store_.feedback()) {
    if (!p.can_access(f.graph_id)) continue;
    if (gid != r.query.end() && f.graph_id != gid->second) continue;
    out.push_back(feedback_to_json(f));
  }
  return {200, {{"feedback", out}}};
}

ApiResponse Service::resolve_feedback(const Principal& p, const std::string& id, const json& body) {
  if (auto d = authorize(p.role, Action::ResolveFeedback); !d.allow) return forbidden(d, Action::ResolveFeedback);
  int64_t version = body.at("annotation_version").get<int64_t>();
  for (auto& f : store_.feedback())
    if (f.id == id) {
      if (!p.can_access(f.graph_id)) return error(403, "NoGrant", "no grant for graph " + f.graph_id);
      auto g = graph(f.graph_id);
      if (g && version > g->graph.version)
        return error(422, "InvalidPayload", fmt::format("graph {} has no version {}", f.graph_id, version));
    }
  return {200, feedback_to_json(store_.resolve_feedback(id, version))};
}

ApiResponse Service::post_bookmark(const Principal& p, const json& body) {
  if (auto d = authorize(p.role, Action::Bookmark); !d.allow) return forbidden(d, Action::Bookmark);
  Bookmark b;
  b.graph_id = body.at("graph_id").get<std::string>();
  if (!p.can_access(b.graph_id)) return error(403, "NoGrant", "no grant for graph " + b.graph_id);
  if (!graph(b.graph_id)) return error(404, "NotFound", "unknown graph " + b.graph_id);
  b.owner = p.id;
  b.audit_ref = body.value("audit_ref", "");
  b.label = body.value("label", "");
  b.created_at = now();
  return {201, bookmark_to_json(store_.add_bookmark(b))};
}

ApiResponse Service::get_bookmarks(const Principal& p, const ApiRequest& r) {
  if (auto d = authorize(p.role, Action::ViewGraph); !d.allow) return forbidden(d, Action::ViewGraph);
  std::vector<std::string> ids;
  if (auto it = r.query.find("graph_id"); it != r.query.end()) ids.push_back(it->second);
  else ids = store_.graph_ids();
  json out = json::array();
  for (auto& gid : ids) {
    if (!p.can_access(gid)) continue;
    for (auto& b : store_.bookmarks(gid)) out.push_back(bookmark_to_json(b));
  }
  return {200, {{"bookmarks", out}}};
}

ApiResponse Service::get_history(const Principal& p, const ApiRequest& r) {
  if (auto d = authorize(p.role, Action::ViewHistory); !d.allow) return forbidden(d, Action::ViewHistory);
  std::vector<std::string> ids;
  if (auto it = r.query.find("graph_id"); it != r.query.end()) ids.push_back(it->second);
  else ids = store_.graph_ids();
  size_t offset = 0, limit = 100;
  if (auto it = r.query.find("offset"); it != r.query.end()) offset = std::stoul(it->second);
  if (auto it = r.query.find("limit"); it != r.query.end()) limit = std::stoul(it->second);
  std::vector<json> visible;
  for (auto& gid : ids) {
    if (!p.can_access(gid)) continue;
    for (auto& rec : store_.history(gid)) {
      if (p.role == Role::Viewer && rec.value("principal", "") != p.id) continue;
      visible.push_back(std::move(rec));
    }
  }
  json out = json::array();
  for (size_t i = offset; i < visible.size() && out.size() < limit; ++i) out.push_back(visible[i]);
  return {200, {{"history", out}, {"total", visible.size()}}};
}

ApiResponse Service::get_insights(const Principal& p, const ApiRequest& r) {
  if (auto d = authorize(p.role, Action::ViewInsights); !d.allow) return forbidden(d, Action::ViewInsights);
  std::vector<std::string> ids;
  if (auto it = r.query.find("graph_id"); it != r.query.end()) ids.push_back(it->second);
  else ids = store_.graph_ids();
  json out = json::object();
  auto feedback = store_.feedback();
  for (auto& gid : ids) {
    if (!p.can_access(gid)) continue;
    std::vector<FeedbackEntry> fb;
    for (auto& f : feedback)
      if (f.graph_id == gid) fb.push_back(f);
    out[gid] = insights(store_.history(gid), fb);
  }
  return {200, {{"graphs", out}}};
}

void Service::bind(httplib::Server& server) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r;
    r.method = req.method;
    r.path = req.path;
    std::string auth = req.get_header_value("Authorization");
    if (text::starts_with(auth, "Bearer ")) r.token = auth.substr(7);
    r.body = req.body;
    for (auto& [k, v] : req.params) r.query[k] = v;
    ApiResponse out = handle(r);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  server.Get(R"(/v1/.*)", handler);
  server.Post(R"(/v1/.*)", handler);
  server.Patch(R"(/v1/.*)", handler);
}

}  // namespace tursio
