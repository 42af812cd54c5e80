#pragma once

// The decision service behind every judgement call: join validation, text
// refinement, intent parsing and SQL rewriting. DeterministicAdjudicator is
// rule based and pure; ExternalAdjudicator calls an HTTP provider and falls
// back to the deterministic rules on any failure.

#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "tursio/intent.hpp"
#include "tursio/join_inference.hpp"
#include "tursio/json_io.hpp"

namespace tursio {

struct TranscriptEntry {
  std::string task;
  std::string source;  // "deterministic", "provider" or "fallback"
  json request;
  json response;
  std::string note;    // e.g. "FallbackUsed: ProviderTimeout"
};

/// Append-only, thread-safe call log.
class Transcript {
 public:
  void append(TranscriptEntry e);
  std::vector<TranscriptEntry> entries() const;
  size_t size() const;
  json to_json() const;

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptEntry> entries_;
};

struct JoinVerdict {
  bool accept = false;
  std::string reason;  // empty on accept
  std::string to_string() const { return accept ? "Accept" : "Reject(" + reason + ")"; }
};

class Adjudicator {
 public:
  virtual ~Adjudicator() = default;
  virtual JoinVerdict adjudicate_join(const JoinCandidate& candidate, const json& context,
                                      Transcript& transcript) = 0;
  virtual std::string refine_text(const std::string& kind, const std::string& input,
                                  const json& context, Transcript& transcript) = 0;
  /// nullopt means Unparseable.
  virtual std::optional<QuerySketch> parse_intent(const std::string& question,
                                                  const json& graph_summary,
                                                  Transcript& transcript) = 0;
  virtual std::string rewrite_sql(const std::string& sql, const std::string& question,
                                  const json& graph_summary, Transcript& transcript) = 0;
  virtual bool deterministic() const = 0;
};

class DeterministicAdjudicator : public Adjudicator {
 public:
  JoinVerdict adjudicate_join(const JoinCandidate& candidate, const json& context,
                              Transcript& transcript) override;
  std::string refine_text(const std::string& kind, const std::string& input, const json& context,
                          Transcript& transcript) override;
  std::optional<QuerySketch> parse_intent(const std::string& question, const json& graph_summary,
                                          Transcript& transcript) override;
  std::string rewrite_sql(const std::string& sql, const std::string& question,
                          const json& graph_summary, Transcript& transcript) override;
  bool deterministic() const override { return true; }

  /// The join rule without transcript side effects.
  static JoinVerdict join_rule(const JoinCandidate& candidate);
};

struct ProviderConfig {
  std::string url;    // http://host:port/path
  std::string token;  // bearer token, may be empty
  int timeout_ms = 10000;
  int max_in_flight = 4;
};

class ExternalAdjudicator : public Adjudicator {
 public:
  explicit ExternalAdjudicator(ProviderConfig config);

  JoinVerdict adjudicate_join(const JoinCandidate& candidate, const json& context,
                              Transcript& transcript) override;
  std::string refine_text(const std::string& kind, const std::string& input, const json& context,
                          Transcript& transcript) override;
  std::optional<QuerySketch> parse_intent(const std::string& question, const json& graph_summary,
                                          Transcript& transcript) override;
  std::string rewrite_sql(const std::string& sql, const std::string& question,
                          const json& graph_summary, Transcript& transcript) override;
  bool deterministic() const override { return false; }

 private:
  /// Sends {task, payload, context}; returns the reply object or nullopt after
  /// recording the failure reason in `failure`.
  std::optional<json> call(const std::string& task, const json& payload, const json& context,
                           std::string& failure);

  ProviderConfig config_;
  std::string scheme_host_;
  std::string path_;
  std::counting_semaphore<64> slots_;
  DeterministicAdjudicator fallback_;
};

/// ExternalAdjudicator when TURSIO_PROVIDER_URL is set, deterministic otherwise.
std::unique_ptr<Adjudicator> adjudicator_from_env();

}  // namespace tursio
