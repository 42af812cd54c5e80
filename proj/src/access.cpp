#include "tursio/access.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <openssl/evp.h>
#include <set>

#include "tursio/text.hpp"

namespace tursio {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Administrator: return "Administrator";
    case Role::Owner: return "Owner";
    case Role::User: return "User";
    case Role::Viewer: return "Viewer";
  }
  return "";
}

Role role_from_string(std::string_view s) {
  std::string l = text::lower(s);
  if (l == "administrator" || l == "admin") return Role::Administrator;
  if (l == "owner") return Role::Owner;
  if (l == "user") return Role::User;
  if (l == "viewer") return Role::Viewer;
  throw Error("InvalidPayload", "unknown role " + std::string(s));
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::Plan: return "plan";
    case Action::Execute: return "execute";
    case Action::ViewFullResults: return "view_full_results";
    case Action::Bookmark: return "bookmark";
    case Action::Feedback: return "feedback";
    case Action::ViewHistory: return "view_history";
    case Action::ViewGraph: return "view_graph";
    case Action::ApplyAnnotation: return "apply_annotation";
    case Action::RebuildGraph: return "rebuild_graph";
    case Action::RegisterDatasource: return "register_datasource";
    case Action::ResolveFeedback: return "resolve_feedback";
    case Action::ViewInsights: return "view_insights";
    case Action::ManagePrincipals: return "manage_principals";
  }
  return "";
}

Decision authorize(Role role, Action action) {
  static const Decision allow{true, ""};
  static const Decision forbidden{false, "RoleForbidden"};
  switch (role) {
    case Role::Administrator:
    case Role::Owner:
      return allow;
    case Role::User:
      switch (action) {
        case Action::Plan:
        case Action::Execute:
        case Action::ViewFullResults:
        case Action::Bookmark:
        case Action::Feedback:
        case Action::ViewHistory:
        case Action::ViewGraph:
          return allow;
        default:
          return forbidden;
      }
    case Role::Viewer:
      switch (action) {
        case Action::Plan:
        case Action::Execute:
        case Action::ViewHistory:
        case Action::ViewGraph:
          return allow;
        case Action::ViewFullResults:
          return {false, "SummaryOnly"};
        default:
          return forbidden;
      }
  }
  return forbidden;
}

bool Principal::can_access(const std::string& graph_id) const {
  return role == Role::Administrator || grants.count("*") > 0 || grants.count(graph_id) > 0;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("StorageFailure", "sha256 failed");
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

PrincipalTable::PrincipalTable(std::vector<Principal> principals) { replace(std::move(principals)); }

std::vector<Principal> PrincipalTable::parse(const json& doc) {
  if (!doc.is_array()) throw Error("MalformedDocument", "principals: expected a JSON array");
  std::vector<Principal> out;
  try {
    for (auto& p : doc) {
      Principal pr;
      pr.id = p.at("id").get<std::string>();
      pr.role = role_from_string(p.at("role").get<std::string>());
      pr.token_sha256 = text::lower(p.at("token_sha256").get<std::string>());
      for (auto& g : p.value("grants", json::array())) pr.grants.insert(g.get<std::string>());
      out.push_back(std::move(pr));
    }
  } catch (const json::exception& e) {
    throw Error("MalformedDocument", std::string("principals: ") + e.what());
  } catch (const Error& e) {
    throw Error("MalformedDocument", std::string("principals: ") + e.what());
  }
  return out;
}

void PrincipalTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("NotFound", "cannot open principals file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error("MalformedDocument", std::string("principals: ") + e.what());
  }
  replace(parse(doc));
}

void PrincipalTable::replace(std::vector<Principal> principals) {
  auto next = std::make_shared<const std::vector<Principal>>(std::move(principals));
  std::lock_guard lock(mu_);
  table_ = std::move(next);
}

std::optional<Principal> PrincipalTable::find_by_token(std::string_view token) const {
  if (token.empty()) return std::nullopt;
  std::string h = sha256_hex(token);
  std::shared_ptr<const std::vector<Principal>> t;
  {
    std::lock_guard lock(mu_);
    t = table_;
  }
  for (auto& p : *t)
    if (p.token_sha256 == h) return p;
  return std::nullopt;
}

std::optional<Principal> PrincipalTable::find(const std::string& id) const {
  std::shared_ptr<const std::vector<Principal>> t;
  {
    std::lock_guard lock(mu_);
    t = table_;
  }
  for (auto& p : *t)
    if (p.id == id) return p;
  return std::nullopt;
}

bool is_aggregated(const PlanNode& tree) {
  bool agg = false;
  visit_nodes(tree, [&](const PlanNode& n) { agg |= n.kind == NodeKind::Aggregate; });
  return agg;
}

json shape_for_viewer(const ResultSet& rs, const PlanNode& tree) {
  if (is_aggregated(tree)) {
    json j = result_to_json(rs);
    j["shaped"] = false;
    return j;
  }
  json cols = json::array();
  for (size_t c = 0; c < rs.columns.size(); ++c) {
    int64_t count = 0;
    std::set<std::string> distinct;
    bool numeric = true;
    std::optional<double> lo, hi;
    for (auto& row : rs.rows) {
      const Value& v = row[c];
      if (is_null(v)) continue;
      ++count;
      distinct.insert(value_to_string(v));
      double x = 0;
      if (auto i = std::get_if<int64_t>(&v)) x = static_cast<double>(*i);
      else if (auto d = std::get_if<double>(&v)) x = *d;
      else {
        numeric = false;
        continue;
      }
      lo = lo ? std::min(*lo, x) : x;
      hi = hi ? std::max(*hi, x) : x;
    }
    json cj = {{"name", rs.columns[c]}, {"count", count}, {"distinct_count", distinct.size()}};
    if (numeric && lo) {
      cj["min"] = *lo;
      cj["max"] = *hi;
    }
    cols.push_back(cj);
  }
  json out = {{"shaped", true}, {"row_count", rs.rows.size()}};
  if (!rs.rows.empty()) out["columns"] = cols;
  return out;
}

}  // namespace tursio
