#include "tursio/store.hpp"

#include <algorithm>
#include <cstdio>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "tursio/text.hpp"

namespace tursio {

namespace fs = std::filesystem;

std::string_view to_string(Sentiment s) { return s == Sentiment::Positive ? "Positive" : "Negative"; }

Sentiment sentiment_from_string(std::string_view s) {
  std::string l = text::lower(s);
  if (l == "positive" || l == "up") return Sentiment::Positive;
  if (l == "negative" || l == "down") return Sentiment::Negative;
  throw Error("InvalidPayload", "unknown sentiment " + std::string(s));
}

json feedback_to_json(const FeedbackEntry& f) {
  json j = {{"id", f.id},
            {"graph_id", f.graph_id},
            {"audit_ref", f.audit_ref},
            {"sentiment", to_string(f.sentiment)},
            {"user_correction", f.user_correction ? json(*f.user_correction) : json(nullptr)},
            {"status", f.status},
            {"graph_version", f.graph_version},
            {"principal", f.principal},
            {"created_at", f.created_at}};
  if (f.resolved_by_version) j["resolved_by_version"] = *f.resolved_by_version;
  return j;
}

namespace {

FeedbackEntry feedback_from_json(const json& j) {
  FeedbackEntry f;
  f.id = j.at("id").get<std::string>();
  f.graph_id = j.value("graph_id", "");
  f.audit_ref = j.value("audit_ref", "");
  f.sentiment = sentiment_from_string(j.at("sentiment").get<std::string>());
  if (j.contains("user_correction") && j["user_correction"].is_string())
    f.user_correction = j["user_correction"].get<std::string>();
  f.status = j.value("status", "Open");
  f.graph_version = j.value("graph_version", int64_t{0});
  if (j.contains("resolved_by_version")) f.resolved_by_version = j["resolved_by_version"].get<int64_t>();
  f.principal = j.value("principal", "");
  f.created_at = j.value("created_at", "");
  return f;
}

void check_name(const std::string& name) {
  if (name.empty() || name == "." || name == "..")
    throw Error("InvalidPayload", "invalid store name '" + name + "'");
  for (char c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
      throw Error("InvalidPayload", "invalid store name '" + name + "'");
}

struct IndexState {
  uint64_t length = 0;
  int64_t count = 0;
};

IndexState read_index(const fs::path& p) {
  IndexState s;
  std::ifstream in(p);
  if (in) in >> s.length >> s.count;
  return s;
}

void write_all(std::FILE* f, std::string_view data, const fs::path& p) {
  if (std::fwrite(data.data(), 1, data.size(), f) != data.size() || std::fflush(f) != 0)
    throw Error("StorageFailure", "write failed: " + p.string());
}

void write_file_atomic(const fs::path& target, std::string_view data,
                       const std::function<void(std::string_view)>& hook) {
  fs::path tmp = target;
  tmp += ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  if (!f) throw Error("StorageFailure", "cannot open " + tmp.string());
  try {
    write_all(f, data, tmp);
    ::fsync(fileno(f));
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
  if (hook) hook("before_index_rename");
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error("StorageFailure", "rename failed: " + ec.message());
}

}  // namespace

json bookmark_to_json(const Bookmark& b) {
  return {{"id", b.id},       {"graph_id", b.graph_id}, {"owner", b.owner},
          {"audit_ref", b.audit_ref}, {"label", b.label}, {"created_at", b.created_at}};
}

Store::Store(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error("StorageFailure", "cannot create " + dir_.string() + ": " + ec.message());
}

fs::path Store::log_path(const std::string& graph_id, const std::string& kind) const {
  check_name(graph_id);
  check_name(kind);
  return dir_ / graph_id / (kind + ".jsonl");
}

fs::path Store::index_path(const std::string& graph_id, const std::string& kind) const {
  check_name(graph_id);
  check_name(kind);
  return dir_ / graph_id / (kind + ".idx");
}

uint64_t Store::committed(const std::string& graph_id, const std::string& kind) const {
  return read_index(index_path(graph_id, kind)).length;
}

namespace {

int64_t append_unlocked(const fs::path& log, const fs::path& idx, const json& record,
                        const std::function<void(std::string_view)>& hook) {
  std::error_code ec;
  fs::create_directories(log.parent_path(), ec);
  if (ec) throw Error("StorageFailure", "cannot create " + log.parent_path().string());
  IndexState state = read_index(idx);
  if (fs::exists(log) && fs::file_size(log) != state.length) fs::resize_file(log, state.length);
  std::string line = record.dump() + "\n";
  std::FILE* f = std::fopen(log.c_str(), "ab");
  if (!f) throw Error("StorageFailure", "cannot open " + log.string());
  try {
    size_t half = line.size() / 2;
    write_all(f, std::string_view(line).substr(0, half), log);
    if (hook) hook("data_written");
    write_all(f, std::string_view(line).substr(half), log);
    ::fsync(fileno(f));
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
  IndexState next{state.length + line.size(), state.count + 1};
  write_file_atomic(idx, fmt::format("{} {}\n", next.length, next.count), hook);
  return next.count;
}

std::vector<json> read_unlocked(const fs::path& log, const fs::path& idx) {
  IndexState state = read_index(idx);
  std::vector<json> out;
  if (state.length == 0) return out;
  std::ifstream in(log, std::ios::binary);
  if (!in) throw Error("StorageFailure", "missing log " + log.string());
  std::string data(state.length, '\0');
  in.read(data.data(), static_cast<std::streamsize>(state.length));
  if (static_cast<uint64_t>(in.gcount()) != state.length)
    throw Error("StorageFailure", "log shorter than its index: " + log.string());
  std::istringstream lines(data);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error("StorageFailure", fmt::format("corrupt record in {}: {}", log.string(), e.what()));
    }
  }
  return out;
}

constexpr const char* kFeedbackScope = "_feedback";

}  // namespace

int64_t Store::append(const std::string& graph_id, const std::string& kind, const json& record) {
  std::lock_guard lock(mu_);
  return append_unlocked(log_path(graph_id, kind), index_path(graph_id, kind), record, fault_hook);
}

std::vector<json> Store::read(const std::string& graph_id, const std::string& kind) const {
  std::lock_guard lock(mu_);
  return read_unlocked(log_path(graph_id, kind), index_path(graph_id, kind));
}

std::string Store::append_history(json record) {
  std::string graph_id = record.value("graph_id", "");
  std::lock_guard lock(mu_);
  auto idx = index_path(graph_id, "history");
  std::string id = fmt::format("{}-{}", graph_id, read_index(idx).count + 1);
  record["audit_id"] = id;
  append_unlocked(log_path(graph_id, "history"), idx, record, fault_hook);
  return id;
}

std::vector<json> Store::history(const std::string& graph_id) const { return read(graph_id, "history"); }

FeedbackEntry Store::submit_feedback(FeedbackEntry entry) {
  std::lock_guard lock(mu_);
  auto idx = index_path(kFeedbackScope, "feedback");
  entry.id = fmt::format("fb-{}", read_index(idx).count + 1);
  entry.status = entry.sentiment == Sentiment::Negative ? "Open" : "Reviewed";
  entry.resolved_by_version.reset();
  append_unlocked(log_path(kFeedbackScope, "feedback"), idx, {{"op", "submit"}, {"entry", feedback_to_json(entry)}},
                  fault_hook);
  return entry;
}

namespace {

std::vector<FeedbackEntry> fold_feedback(const std::vector<json>& events) {
  std::vector<FeedbackEntry> out;
  for (auto& ev : events) {
    if (ev.value("op", "") == "submit") {
      out.push_back(feedback_from_json(ev.at("entry")));
    } else if (ev.value("op", "") == "resolve") {
      for (auto& f : out)
        if (f.id == ev.value("id", "")) {
          f.status = "Resolved";
          f.resolved_by_version = ev.at("annotation_version").get<int64_t>();
        }
    }
  }
  return out;
}

}  // namespace

FeedbackEntry Store::resolve_feedback(const std::string& id, int64_t annotation_version) {
  std::lock_guard lock(mu_);
  auto log = log_path(kFeedbackScope, "feedback");
  auto idx = index_path(kFeedbackScope, "feedback");
  auto entries = fold_feedback(read_unlocked(log, idx));
  auto it = std::find_if(entries.begin(), entries.end(), [&](auto& f) { return f.id == id; });
  if (it == entries.end()) throw Error("NotFound", "no feedback entry " + id);
  if (it->sentiment != Sentiment::Negative) throw Error("NotNegative", "feedback " + id + " is positive");
  if (annotation_version <= it->graph_version)
    throw Error("InvalidPayload", fmt::format("annotation version {} predates feedback {} (graph version {})",
                                              annotation_version, id, it->graph_version));
  append_unlocked(log, idx, {{"op", "resolve"}, {"id", id}, {"annotation_version", annotation_version}}, fault_hook);
  it->status = "Resolved";
  it->resolved_by_version = annotation_version;
  return *it;
}

std::vector<FeedbackEntry> Store::feedback() const {
  std::lock_guard lock(mu_);
  return fold_feedback(read_unlocked(log_path(kFeedbackScope, "feedback"), index_path(kFeedbackScope, "feedback")));
}

Bookmark Store::add_bookmark(Bookmark b) {
  std::lock_guard lock(mu_);
  auto idx = index_path(b.graph_id, "bookmarks");
  b.id = fmt::format("bm-{}-{}", b.graph_id, read_index(idx).count + 1);
  append_unlocked(log_path(b.graph_id, "bookmarks"), idx, bookmark_to_json(b), fault_hook);
  return b;
}

std::vector<Bookmark> Store::bookmarks(const std::string& graph_id) const {
  std::vector<Bookmark> out;
  for (auto& j : read(graph_id, "bookmarks"))
    out.push_back({j.value("id", ""), j.value("graph_id", ""), j.value("owner", ""), j.value("audit_ref", ""),
                   j.value("label", ""), j.value("created_at", "")});
  return out;
}

void Store::save_graph(const ContextGraph& graph) {
  check_name(graph.graph_id);
  std::lock_guard lock(mu_);
  fs::path d = dir_ / graph.graph_id;
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw Error("StorageFailure", "cannot create " + d.string());
  write_file_atomic(d / "graph.json", serialize_graph(graph), nullptr);
}

std::optional<ContextGraph> Store::load_graph(const std::string& graph_id) const {
  check_name(graph_id);
  std::lock_guard lock(mu_);
  std::ifstream in(dir_ / graph_id / "graph.json", std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_graph(ss.str());
}

std::vector<std::string> Store::graph_ids() const {
  std::vector<std::string> out;
  std::error_code ec;
  for (auto& e : fs::directory_iterator(dir_, ec))
    if (e.is_directory() && fs::exists(e.path() / "graph.json")) out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

json insights(const std::vector<json>& history, const std::vector<FeedbackEntry>& feedback) {
  std::map<std::string, int64_t> errors;
  std::map<std::string, int64_t> columns;
  std::vector<double> latencies;
  int64_t failed = 0;
  for (auto& r : history) {
    if (r.contains("error") && r["error"].is_object()) {
      ++failed;
      ++errors[r["error"].value("stage", "unknown")];
    }
    if (r.contains("latency_ms") && r["latency_ms"].is_number()) latencies.push_back(r["latency_ms"].get<double>());
    if (r.contains("groundings") && r["groundings"].is_array())
      for (auto& g : r["groundings"])
        if (g.contains("target") && g["target"].is_string()) {
          std::string t = g["target"].get<std::string>();
          if (t.find('.') != std::string::npos) ++columns[t];
        }
  }
  double n = static_cast<double>(history.size());
  json by_stage = json::object();
  for (auto& [stage, count] : errors) by_stage[stage] = static_cast<double>(count) / n;
  double median = 0;
  if (!latencies.empty()) {
    std::sort(latencies.begin(), latencies.end());
    size_t m = latencies.size() / 2;
    median = latencies.size() % 2 ? latencies[m] : (latencies[m - 1] + latencies[m]) / 2.0;
  }
  std::vector<std::pair<std::string, int64_t>> top(columns.begin(), columns.end());
  std::stable_sort(top.begin(), top.end(), [](auto& a, auto& b) { return a.second > b.second; });
  if (top.size() > 10) top.resize(10);
  json top_json = json::array();
  for (auto& [c, k] : top) top_json.push_back({{"column", c}, {"count", k}});
  int64_t pos = 0, neg = 0, open = 0, resolved = 0;
  for (auto& f : feedback) {
    (f.sentiment == Sentiment::Positive ? pos : neg)++;
    if (f.status == "Open") ++open;
    if (f.status == "Resolved") ++resolved;
  }
  return {{"query_count", history.size()},
          {"error_count", failed},
          {"error_rate", history.empty() ? 0.0 : static_cast<double>(failed) / n},
          {"error_rate_by_stage", by_stage},
          {"median_latency_ms", median},
          {"top_grounded_columns", top_json},
          {"feedback", {{"positive", pos}, {"negative", neg}, {"open", open}, {"resolved", resolved}}}};
}

}  // namespace tursio
