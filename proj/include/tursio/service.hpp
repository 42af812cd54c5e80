#pragma once

// /v1 HTTP API. Service::handle is transport-free so it can be exercised
// directly; bind() mounts it on an httplib server.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "tursio/access.hpp"
#include "tursio/adapter.hpp"
#include "tursio/adjudicator.hpp"
#include "tursio/planner.hpp"
#include "tursio/store.hpp"

namespace httplib {
class Server;
}

namespace tursio {

struct ApiRequest {
  std::string method;
  std::string path;
  std::string token;  // bearer token, without the "Bearer " prefix
  std::string body;
  std::map<std::string, std::string> query;
};

struct ApiResponse {
  int status = 200;
  json body = json::object();
};

struct ServiceConfig {
  std::filesystem::path data_dir;
  std::shared_ptr<PrincipalTable> principals = std::make_shared<PrincipalTable>();
  std::function<std::unique_ptr<DataSourceAdapter>(const json&)> adapter_factory = open_adapter;
  std::function<std::unique_ptr<Adjudicator>()> adjudicator_factory = [] {
    return std::make_unique<DeterministicAdjudicator>();
  };
  /// Current instant as ISO text; wall clock (UTC) when unset.
  std::function<std::string()> clock;
  PlannerOptions planner;
};

/// Current UTC instant, second precision.
std::string utc_now();

class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ApiResponse handle(const ApiRequest& request);
  void bind(httplib::Server& server);
  /// Blocks until every running build has finished.
  void wait_for_builds();
  Store& store() { return store_; }

 private:
  struct BuildState {
    std::string status = "Building";  // Building | Ready | Failed
    std::string reason;
  };

  std::string now() const;
  std::shared_ptr<const PreparedGraph> graph(const std::string& id);
  void publish(ContextGraph graph);
  std::optional<json> datasource(const std::string& id) const;
  std::optional<std::string> graph_source(const std::string& graph_id) const;

  ApiResponse post_datasource(const Principal& p, const json& body);
  ApiResponse post_graph(const Principal& p, const json& body);
  ApiResponse get_graph(const Principal& p, const std::string& id);
  ApiResponse get_status(const Principal& p, const std::string& id);
  ApiResponse post_query(const Principal& p, const std::string& id, const json& body);
  ApiResponse patch_annotations(const Principal& p, const std::string& id, const json& body);
  ApiResponse post_feedback(const Principal& p, const json& body);
  ApiResponse get_feedback(const Principal& p, const ApiRequest& r);
  ApiResponse resolve_feedback(const Principal& p, const std::string& id, const json& body);
  ApiResponse post_bookmark(const Principal& p, const json& body);
  ApiResponse get_bookmarks(const Principal& p, const ApiRequest& r);
  ApiResponse get_history(const Principal& p, const ApiRequest& r);
  ApiResponse get_insights(const Principal& p, const ApiRequest& r);

  ServiceConfig config_;
  Store store_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const PreparedGraph>> graphs_;
  std::map<std::string, BuildState> builds_;
  std::vector<std::thread> workers_;
};

}  // namespace tursio
