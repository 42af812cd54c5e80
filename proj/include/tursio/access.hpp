#pragma once

// Roles, the capability matrix, principals and viewer result shaping.

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tursio/adapter.hpp"
#include "tursio/json_io.hpp"
#include "tursio/plan_tree.hpp"

namespace tursio {

enum class Role { Administrator, Owner, User, Viewer };
std::string_view to_string(Role r);
Role role_from_string(std::string_view s);
inline constexpr Role kAllRoles[] = {Role::Administrator, Role::Owner, Role::User, Role::Viewer};

enum class Action {
  Plan,
  Execute,
  ViewFullResults,
  Bookmark,
  Feedback,
  ViewHistory,
  ViewGraph,
  ApplyAnnotation,
  RebuildGraph,
  RegisterDatasource,
  ResolveFeedback,
  ViewInsights,
  ManagePrincipals,
};
std::string_view to_string(Action a);
inline constexpr Action kAllActions[] = {
    Action::Plan,         Action::Execute,         Action::ViewFullResults,    Action::Bookmark,
    Action::Feedback,     Action::ViewHistory,     Action::ViewGraph,          Action::ApplyAnnotation,
    Action::RebuildGraph, Action::RegisterDatasource, Action::ResolveFeedback, Action::ViewInsights,
    Action::ManagePrincipals,
};

struct Decision {
  bool allow = false;
  std::string reason;  // RoleForbidden, SummaryOnly
  bool operator==(const Decision&) const = default;
};

/// Pure in (role, action).
Decision authorize(Role role, Action action);

struct Principal {
  std::string id;
  Role role = Role::Viewer;
  std::string token_sha256;      // lowercase hex
  std::set<std::string> grants;  // graph ids; "*" grants every graph

  bool can_access(const std::string& graph_id) const;
};

std::string sha256_hex(std::string_view data);

/// Principals keyed by token hash; reload swaps the whole table.
class PrincipalTable {
 public:
  PrincipalTable() = default;
  explicit PrincipalTable(std::vector<Principal> principals);

  /// JSON array of {id, role, token_sha256, grants}. Throws Error("MalformedDocument").
  static std::vector<Principal> parse(const json& doc);
  void load(const std::filesystem::path& path);
  void replace(std::vector<Principal> principals);
  std::optional<Principal> find_by_token(std::string_view token) const;
  std::optional<Principal> find(const std::string& id) const;

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const std::vector<Principal>> table_ = std::make_shared<std::vector<Principal>>();
};

/// Aggregated plans pass through as rows; other plans become
/// {row_count, columns: [...]} with no raw values.
json shape_for_viewer(const ResultSet& rows, const PlanNode& tree);

/// True when the tree contains an Aggregate node.
bool is_aggregated(const PlanNode& tree);

}  // namespace tursio
