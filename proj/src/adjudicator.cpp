#include "tursio/adjudicator.hpp"

#include <cstdlib>
#include <fmt/format.h>

#include "httplib.h"
#include "tursio/text.hpp"

namespace tursio {

void Transcript::append(TranscriptEntry e) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(e));
}

std::vector<TranscriptEntry> Transcript::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

size_t Transcript::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

json Transcript::to_json() const {
  std::lock_guard lock(mu_);
  json out = json::array();
  for (auto& e : entries_)
    out.push_back({{"task", e.task},
                   {"source", e.source},
                   {"request", e.request},
                   {"response", e.response},
                   {"note", e.note}});
  return out;
}

// ---------------------------------------------------------------------------

JoinVerdict DeterministicAdjudicator::join_rule(const JoinCandidate& c) {
  if (c.inclusion_coeff < 0.95) return {false, "InclusionBelowBar"};
  std::string fk = text::lower(c.fk_side.column);
  bool suffix = text::ends_with(fk, "_id") || text::ends_with(fk, "_key");
  if (c.name_similarity < 0.4 && !suffix) return {false, "NameEvidenceMissing"};
  return {true, ""};
}

JoinVerdict DeterministicAdjudicator::adjudicate_join(const JoinCandidate& candidate,
                                                      const json& context, Transcript& transcript) {
  (void)context;
  auto v = join_rule(candidate);
  transcript.append({"adjudicate_join", "deterministic", candidate_to_json(candidate),
                     {{"verdict", v.accept ? "Accept" : "Reject"}, {"reason", v.reason}}, ""});
  return v;
}

std::string DeterministicAdjudicator::refine_text(const std::string& kind, const std::string& input,
                                                  const json& context, Transcript& transcript) {
  (void)context;
  (void)kind;
  (void)transcript;
  return input;
}

std::optional<QuerySketch> DeterministicAdjudicator::parse_intent(const std::string& question,
                                                                  const json& graph_summary,
                                                                  Transcript& transcript) {
  (void)question;
  (void)graph_summary;
  (void)transcript;
  return std::nullopt;
}

std::string DeterministicAdjudicator::rewrite_sql(const std::string& sql, const std::string& question,
                                                  const json& graph_summary, Transcript& transcript) {
  (void)question;
  (void)graph_summary;
  (void)transcript;
  return sql;
}

// ---------------------------------------------------------------------------

ExternalAdjudicator::ExternalAdjudicator(ProviderConfig config)
    : config_(std::move(config)), slots_(std::clamp(config_.max_in_flight, 1, 64)) {
  auto scheme = config_.url.find("://");
  size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
  auto slash = config_.url.find('/', host_start);
  scheme_host_ = config_.url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : config_.url.substr(slash);
}

std::optional<json> ExternalAdjudicator::call(const std::string& task, const json& payload,
                                              const json& context, std::string& failure) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<64>& s;
    ~Release() { s.release(); }
  } release{slots_};
  try {
    httplib::Client client(scheme_host_);
    auto secs = config_.timeout_ms / 1000;
    auto usecs = (config_.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!config_.token.empty()) headers.emplace("Authorization", "Bearer " + config_.token);
    json body = {{"task", task}, {"payload", payload}, {"context", context}};
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
      failure = res.error() == httplib::Error::Read || res.error() == httplib::Error::Write
                    ? "ProviderTimeout"
                    : "ProviderUnavailable";
      return std::nullopt;
    }
    if (res->status != 200) {
      failure = fmt::format("ProviderStatus{}", res->status);
      return std::nullopt;
    }
    auto reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.is_object()) {
      failure = "MalformedProviderReply";
      return std::nullopt;
    }
    return reply;
  } catch (const std::exception& e) {
    failure = fmt::format("ProviderUnavailable: {}", e.what());
    return std::nullopt;
  }
}

JoinVerdict ExternalAdjudicator::adjudicate_join(const JoinCandidate& candidate, const json& context,
                                                 Transcript& transcript) {
  auto rule = DeterministicAdjudicator::join_rule(candidate);
  std::string failure;
  auto request = candidate_to_json(candidate);
  if (auto reply = call("adjudicate_join", request, context, failure)) {
    auto verdict = reply->value("verdict", "");
    if (verdict == "Accept" || verdict == "Reject") {
      JoinVerdict v{verdict == "Accept", verdict == "Accept" ? "" : reply->value("reason", "Provider")};
      transcript.append({"adjudicate_join", "provider", request, *reply,
                         "deterministic verdict: " + rule.to_string()});
      return v;
    }
    failure = "MalformedProviderReply";
  }
  transcript.append({"adjudicate_join", "fallback", request,
                     {{"verdict", rule.accept ? "Accept" : "Reject"}, {"reason", rule.reason}},
                     "FallbackUsed: " + failure});
  return rule;
}

std::string ExternalAdjudicator::refine_text(const std::string& kind, const std::string& input,
                                             const json& context, Transcript& transcript) {
  std::string failure;
  json request = {{"kind", kind}, {"input", input}};
  if (auto reply = call("refine_text", request, context, failure)) {
    if (reply->contains("text") && (*reply)["text"].is_string()) {
      transcript.append({"refine_text", "provider", request, *reply, ""});
      return (*reply)["text"].get<std::string>();
    }
    failure = "MalformedProviderReply";
  }
  transcript.append({"refine_text", "fallback", request, {{"text", input}}, "FallbackUsed: " + failure});
  return input;
}

std::optional<QuerySketch> ExternalAdjudicator::parse_intent(const std::string& question,
                                                             const json& graph_summary,
                                                             Transcript& transcript) {
  std::string failure;
  json request = {{"question", question}};
  if (auto reply = call("parse_intent", request, graph_summary, failure)) {
    if (reply->contains("sketch")) {
      try {
        auto sketch = sketch_from_json((*reply)["sketch"]);
        transcript.append({"parse_intent", "provider", request, *reply, ""});
        return sketch;
      } catch (const Error&) {
      }
    }
    failure = "MalformedProviderReply";
  }
  transcript.append({"parse_intent", "fallback", request, nullptr, "FallbackUsed: " + failure});
  return std::nullopt;
}

std::string ExternalAdjudicator::rewrite_sql(const std::string& sql, const std::string& question,
                                             const json& graph_summary, Transcript& transcript) {
  std::string failure;
  json request = {{"sql", sql}, {"question", question}};
  if (auto reply = call("rewrite_sql", request, graph_summary, failure)) {
    if (reply->contains("sql") && (*reply)["sql"].is_string()) {
      transcript.append({"rewrite_sql", "provider", request, *reply, ""});
      return (*reply)["sql"].get<std::string>();
    }
    failure = "MalformedProviderReply";
  }
  transcript.append({"rewrite_sql", "fallback", request, {{"sql", sql}}, "FallbackUsed: " + failure});
  return sql;
}

std::unique_ptr<Adjudicator> adjudicator_from_env() {
  const char* url = std::getenv("TURSIO_PROVIDER_URL");
  if (!url || !*url) return std::make_unique<DeterministicAdjudicator>();
  const char* token = std::getenv("TURSIO_PROVIDER_TOKEN");
  return std::make_unique<ExternalAdjudicator>(ProviderConfig{url, token ? token : ""});
}

}  // namespace tursio
