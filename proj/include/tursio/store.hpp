#pragma once

// File-backed persistence: one append-only JSON-lines log per (graph, kind)
// plus a committed-length index replaced by atomic rename. Readers only see
// bytes covered by the index, so a crash mid-append never exposes a torn line.

#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "tursio/context_model.hpp"
#include "tursio/json_io.hpp"

namespace tursio {

enum class Sentiment { Positive, Negative };
std::string_view to_string(Sentiment s);
Sentiment sentiment_from_string(std::string_view s);

struct FeedbackEntry {
  std::string id;
  std::string graph_id;
  std::string audit_ref;
  Sentiment sentiment = Sentiment::Negative;
  std::optional<std::string> user_correction;
  std::string status = "Open";  // Open | Reviewed | Resolved
  int64_t graph_version = 0;    // graph version when submitted
  std::optional<int64_t> resolved_by_version;
  std::string principal;
  std::string created_at;
};

json feedback_to_json(const FeedbackEntry& f);

struct Bookmark {
  std::string id;
  std::string graph_id;
  std::string owner;
  std::string audit_ref;
  std::string label;
  std::string created_at;
};

json bookmark_to_json(const Bookmark& b);

class Store {
 public:
  explicit Store(std::filesystem::path dir);

  /// Appends one record; returns its 1-based sequence number. Throws Error("StorageFailure").
  int64_t append(const std::string& graph_id, const std::string& kind, const json& record);
  /// Committed records in arrival order.
  std::vector<json> read(const std::string& graph_id, const std::string& kind) const;

  /// Sets audit_id ("<graph>-<seq>") on the record and appends it.
  std::string append_history(json record);
  std::vector<json> history(const std::string& graph_id) const;

  FeedbackEntry submit_feedback(FeedbackEntry entry);
  /// Throws Error("NotFound"), Error("NotNegative") or Error("InvalidPayload") when
  /// the annotation version is not newer than the entry.
  FeedbackEntry resolve_feedback(const std::string& id, int64_t annotation_version);
  std::vector<FeedbackEntry> feedback() const;

  Bookmark add_bookmark(Bookmark b);
  std::vector<Bookmark> bookmarks(const std::string& graph_id) const;

  /// Graph snapshot written next to the logs via temp file + rename.
  void save_graph(const ContextGraph& graph);
  std::optional<ContextGraph> load_graph(const std::string& graph_id) const;
  std::vector<std::string> graph_ids() const;

  /// Test hook called at "data_written" (line partially flushed) and
  /// "before_index_rename"; throwing from it simulates a crash at that point.
  std::function<void(std::string_view stage)> fault_hook;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path log_path(const std::string& graph_id, const std::string& kind) const;
  std::filesystem::path index_path(const std::string& graph_id, const std::string& kind) const;
  uint64_t committed(const std::string& graph_id, const std::string& kind) const;

  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

/// Usage summary over history and feedback: query count, error rate by stage,
/// median latency, top grounded columns, feedback counts.
json insights(const std::vector<json>& history, const std::vector<FeedbackEntry>& feedback);

}  // namespace tursio
