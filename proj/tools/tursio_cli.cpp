// Operator CLI. JSON on stdout, diagnostics on stderr.
// Exit codes: 0 success, 1 planner or user error, 2 system error.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"
#include "tursio/adjudicator.hpp"
#include "tursio/eval.hpp"
#include "tursio/fixtures.hpp"
#include "tursio/graph_builder.hpp"
#include "tursio/planner.hpp"
#include "tursio/profiler.hpp"
#include "tursio/service.hpp"
#include "tursio/value.hpp"

namespace fs = std::filesystem;
using namespace tursio;

namespace {

struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& data) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << data;
  }
  fs::rename(tmp, path);
}

json source_config(const std::string& source) {
  if (!fs::exists(source)) throw UserError("no such source " + source);
  return {{"kind", fs::is_directory(source) ? "csv" : "sqlite"}, {"path", source}};
}

ContextGraph load_graph_file(const std::string& path) { return deserialize_graph(read_file(path)); }

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_profile(const std::string& source, size_t sample) {
  auto adapter = open_adapter(source_config(source));
  json tables = json::array();
  for (auto& t : adapter->list_tables()) {
    json cols = json::array();
    for (auto& s : profile_table(*adapter, t, sample)) cols.push_back(stats_to_json(s));
    tables.push_back({{"table", t}, {"columns", cols}});
  }
  emit({{"source", source}, {"tables", tables}});
  return 0;
}

int cmd_build(const std::string& source, const std::vector<std::string>& tables, const std::string& out,
              const std::string& clock, const std::string& graph_id) {
  auto adapter = open_adapter(source_config(source));
  DeterministicAdjudicator adjudicator;
  BuildOptions options;
  options.graph_id = graph_id;
  options.tables = tables;
  options.built_at = clock.empty() ? utc_now() : clock;
  auto built = build_graph(*adapter, adjudicator, options);
  auto violations = validate_graph(built.graph);
  std::string doc = serialize_graph(built.graph);
  if (out.empty()) {
    std::cout << doc << "\n";
  } else {
    write_file(out, doc);
    json v = json::array();
    for (auto& x : violations) v.push_back({{"rule", x.rule}, {"element", x.element}});
    emit({{"graph_id", built.graph.graph_id},
          {"out", out},
          {"tables", built.graph.tables.size()},
          {"joins", built.graph.joins.size()},
          {"violations", v}});
  }
  return violations.empty() ? 0 : 1;
}

int cmd_query(const std::string& graph_path, const std::string& question, bool dry_run, bool execute,
              const std::string& clock, const std::string& source) {
  PreparedGraph prepared(load_graph_file(graph_path));
  DeterministicAdjudicator adjudicator;
  PlannerOptions options;
  if (!clock.empty()) options.clock = clock;
  options.principal = "cli";
  PlanOutcome plan = plan_query(question, prepared, adjudicator, options);
  json out = plan.audit;
  out.erase("latency_ms");
  out["dry_run"] = dry_run;
  if (!plan.ok()) {
    emit(out);
    return 1;
  }
  if (execute && !dry_run) {
    if (source.empty()) throw UserError("--execute needs --source");
    out["results"] = result_to_json(open_adapter(source_config(source))->execute(plan.sql));
  }
  emit(out);
  return 0;
}

int cmd_annotate(const std::string& graph_path, const std::string& kind, const std::string& payload,
                 const std::string& target, const std::string& author, const std::string& clock,
                 const std::string& out) {
  ContextGraph graph = load_graph_file(graph_path);
  json doc;
  try {
    doc = {{"kind", kind}, {"payload", json::parse(payload)}, {"author", author},
           {"created_at", clock.empty() ? utc_now() : clock}};
  } catch (const json::exception& e) {
    throw UserError(std::string("--payload is not JSON: ") + e.what());
  }
  if (target.empty()) {
    doc["target"] = {{"kind", "Graph"}};
  } else if (auto dot = target.find('.'); dot == std::string::npos) {
    doc["target"] = {{"kind", "Table"}, {"table_id", target}};
  } else {
    doc["target"] = {{"kind", "Column"}, {"table_id", target.substr(0, dot)}, {"column", target.substr(dot + 1)}};
  }
  Annotation ann;
  try {
    ann = doc.get<Annotation>();
  } catch (const json::exception& e) {
    throw UserError(e.what());
  }
  ContextGraph next = apply_annotation(graph, ann);
  write_file(out.empty() ? graph_path : out, serialize_graph(next));
  emit({{"graph_id", next.graph_id}, {"version", next.version}});
  return 0;
}

int cmd_eval(const std::string& graph_path, const std::string& corpus_path, const std::string& clock) {
  PreparedGraph prepared(load_graph_file(graph_path));
  DeterministicAdjudicator adjudicator;
  PlannerOptions options;
  if (!clock.empty()) options.clock = clock;
  emit(run_corpus(load_corpus(corpus_path), prepared, adjudicator, options));
  return 0;
}

httplib::Server* g_server = nullptr;

int cmd_serve(std::string addr, const std::string& data_dir, const std::string& principals) {
  if (addr.empty()) {
    const char* env = std::getenv("TURSIO_ADDR");
    addr = env ? env : "127.0.0.1:8080";
  }
  auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw UserError("--addr must be host:port");
  std::string host = addr.substr(0, colon);
  int port = std::stoi(addr.substr(colon + 1));
  ServiceConfig config;
  config.data_dir = data_dir;
  config.principals->load(principals);
  Service service(config);
  httplib::Server server;
  service.bind(server);
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::cerr << "listening on " << host << ":" << port << "\n";
  if (!server.listen(host, port)) throw std::runtime_error("cannot listen on " + addr);
  return 0;
}

int cmd_fixture(uint64_t seed, const std::string& out) {
  emit(generate_fixture(seed, out));
  return 0;
}

int user_error_code(const std::string& code) {
  static const std::set<std::string> system{"AdapterFailure", "AdjudicatorFailure", "StorageFailure"};
  return system.count(code) ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tursio: natural-language questions to SQL over an inferred context graph"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON file of default option values")->envname("TURSIO_CONFIG");

  std::string source, out, clock, graph_path, question, kind, payload, target, corpus, addr, data_dir,
      principals, author = "cli", graph_id = "default";
  size_t sample = kDefaultSampleSize;
  std::vector<std::string> tables;
  bool dry_run = false, execute = false;
  uint64_t seed = kDefaultFixtureSeed;

  auto* profile = app.add_subcommand("profile", "profile every table of a source");
  profile->add_option("source", source, "CSV directory or SQLite file")->required();
  profile->add_option("--sample", sample, "reservoir size");

  auto* build = app.add_subcommand("build", "build a context graph");
  build->add_option("source", source, "CSV directory or SQLite file")->required();
  build->add_option("--tables", tables, "physical tables to include")->delimiter(',');
  build->add_option("--out", out, "graph document path");
  build->add_option("--clock", clock, "ISO instant recorded as built_at");
  build->add_option("--graph-id", graph_id, "graph id");

  auto* query = app.add_subcommand("query", "plan a question");
  query->add_option("graph", graph_path, "graph document")->required();
  query->add_option("question", question, "question text")->required();
  query->add_flag("--dry-run", dry_run, "plan only");
  query->add_flag("--execute", execute, "run the SQL against --source");
  query->add_option("--clock", clock, "ISO instant used for relative dates");
  query->add_option("--source", source, "CSV directory or SQLite file for --execute");

  auto* annotate = app.add_subcommand("annotate", "append an annotation to a graph document");
  annotate->add_option("graph", graph_path, "graph document")->required();
  annotate->add_option("--kind", kind, "Prioritization, Synonym, Description, CustomMeasure, EnforcerRule")
      ->required();
  annotate->add_option("--payload", payload, "payload JSON")->required();
  annotate->add_option("--target", target, "TABLE or TABLE.column; graph-level when omitted");
  annotate->add_option("--author", author, "author id");
  annotate->add_option("--clock", clock, "ISO instant recorded as created_at");
  annotate->add_option("--out", out, "write here instead of in place");

  auto* eval = app.add_subcommand("eval", "score a corpus");
  eval->add_option("graph", graph_path, "graph document")->required();
  eval->add_option("corpus", corpus, "JSON lines corpus")->required();
  eval->add_option("--clock", clock, "ISO instant used for relative dates");

  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  serve->add_option("--addr", addr, "host:port (default TURSIO_ADDR or 127.0.0.1:8080)");
  serve->add_option("--data", data_dir, "store directory")->required();
  serve->add_option("--principals", principals, "principals JSON file")->required();

  auto* fixture = app.add_subcommand("fixture", "write the synthetic credit-union fixture");
  fixture->add_option("--seed", seed, "generator seed");
  fixture->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
    if (!config_path.empty()) {
      // Values from the config file fill options the command line left unset.
      json cfg = json::parse(read_file(config_path));
      if (data_dir.empty()) data_dir = cfg.value("data_dir", "");
      if (principals.empty()) principals = cfg.value("principals", "");
      if (addr.empty()) addr = cfg.value("addr", "");
      if (clock.empty()) clock = cfg.value("clock", "");
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*profile) return cmd_profile(source, sample);
    if (*build) return cmd_build(source, tables, out, clock, graph_id);
    if (*query) return cmd_query(graph_path, question, dry_run, execute, clock, source);
    if (*annotate) return cmd_annotate(graph_path, kind, payload, target, author, clock, out);
    if (*eval) return cmd_eval(graph_path, corpus, clock);
    if (*serve) return cmd_serve(addr, data_dir, principals);
    if (*fixture) return cmd_fixture(seed, out);
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    emit({{"error", {{"code", e.code()}, {"message", e.what()}}}});
    return user_error_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
