#include "tursio/adapter.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "tursio/csv.hpp"
#include "tursio/profiler.hpp"
#include "tursio/sql_ast.hpp"
#include "tursio/text.hpp"

namespace fs = std::filesystem;

namespace tursio {

json result_to_json(const ResultSet& rs) {
  json rows = json::array();
  for (auto& r : rs.rows) {
    json row = json::array();
    for (auto& v : r) row.push_back(value_to_json(v));
    rows.push_back(std::move(row));
  }
  return {{"columns", rs.columns}, {"rows", rows}};
}

void require_read_only(const std::string& sql) { (void)sql::parse_select(sql); }

namespace {

std::string quote_ident(const std::string& name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

Value column_value(sqlite3_stmt* stmt, int i) {
  switch (sqlite3_column_type(stmt, i)) {
    case SQLITE_INTEGER: return static_cast<int64_t>(sqlite3_column_int64(stmt, i));
    case SQLITE_FLOAT: return sqlite3_column_double(stmt, i);
    case SQLITE_NULL: return std::monostate{};
    default: {
      auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt, i));
      return std::string(p ? p : "", static_cast<size_t>(sqlite3_column_bytes(stmt, i)));
    }
  }
}

ResultSet run_query(sqlite3* db, const std::string& sql) {
  sqlite3_stmt* stmt = nullptr;
  if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK)
    throw Error("AdapterFailure", fmt::format("prepare failed: {}", sqlite3_errmsg(db)));
  if (!sqlite3_stmt_readonly(stmt)) {
    sqlite3_finalize(stmt);
    throw Error("NotReadOnly", "statement would modify the database");
  }
  ResultSet rs;
  int n = sqlite3_column_count(stmt);
  for (int i = 0; i < n; ++i) rs.columns.emplace_back(sqlite3_column_name(stmt, i));
  int rc;
  while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
    Row row;
    row.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) row.push_back(column_value(stmt, i));
    rs.rows.push_back(std::move(row));
  }
  std::string err = rc == SQLITE_DONE ? "" : sqlite3_errmsg(db);
  sqlite3_finalize(stmt);
  if (!err.empty()) throw Error("AdapterFailure", "query failed: " + err);
  return rs;
}

void exec_or_throw(sqlite3* db, const std::string& sql) {
  char* msg = nullptr;
  if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &msg) != SQLITE_OK) {
    std::string err = msg ? msg : "unknown";
    sqlite3_free(msg);
    throw Error("AdapterFailure", err);
  }
}

std::string sqlite_type(DataType t) {
  switch (t) {
    case DataType::Integer:
    case DataType::Boolean: return "INTEGER";
    case DataType::Decimal: return "REAL";
    default: return "TEXT";
  }
}

DataType from_declared(std::string declared) {
  declared = text::upper(declared);
  if (declared.find("INT") != std::string::npos) return DataType::Integer;
  if (declared.find("BOOL") != std::string::npos) return DataType::Boolean;
  if (declared.find("TIMESTAMP") != std::string::npos || declared.find("DATETIME") != std::string::npos)
    return DataType::Timestamp;
  if (declared.find("DATE") != std::string::npos) return DataType::Date;
  if (declared.find("REAL") != std::string::npos || declared.find("DEC") != std::string::npos ||
      declared.find("NUM") != std::string::npos || declared.find("FLOA") != std::string::npos ||
      declared.find("DOUB") != std::string::npos)
    return DataType::Decimal;
  return DataType::Text;
}

void bind_value(sqlite3_stmt* stmt, int i, const Value& v) {
  if (auto p = std::get_if<int64_t>(&v)) sqlite3_bind_int64(stmt, i, *p);
  else if (auto d = std::get_if<double>(&v)) sqlite3_bind_double(stmt, i, *d);
  else if (auto s = std::get_if<std::string>(&v))
    sqlite3_bind_text(stmt, i, s->c_str(), static_cast<int>(s->size()), SQLITE_TRANSIENT);
  else if (auto b = std::get_if<bool>(&v)) sqlite3_bind_int64(stmt, i, *b ? 1 : 0);
  else sqlite3_bind_null(stmt, i);
}

}  // namespace

// ---------------------------------------------------------------------------

CsvDirectoryAdapter::CsvDirectoryAdapter(std::string directory) : dir_(std::move(directory)) {
  if (!fs::is_directory(dir_))
    throw Error("AdapterFailure", fmt::format("'{}' is not a directory", dir_));
}

CsvDirectoryAdapter::~CsvDirectoryAdapter() {
  if (db_) sqlite3_close(db_);
}

std::vector<std::string> CsvDirectoryAdapter::list_tables() {
  std::vector<std::string> out;
  for (auto& entry : fs::directory_iterator(dir_))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      out.push_back(entry.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

const CsvDirectoryAdapter::Table& CsvDirectoryAdapter::load(const std::string& table) {
  if (auto it = tables_.find(table); it != tables_.end()) return it->second;
  fs::path path = fs::path(dir_) / (table + ".csv");
  if (table.find('/') != std::string::npos || !fs::is_regular_file(path))
    throw Error("TableNotFound", fmt::format("no table '{}'", table));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("AdapterFailure", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  std::vector<csv::Row> raw;
  try {
    raw = csv::parse(ss.str());
  } catch (const Error& e) {
    throw Error("AdapterFailure", fmt::format("{}: {}", path.string(), e.what()));
  }
  Table t;
  if (raw.empty()) {
    tables_[table] = t;
    return tables_[table];
  }
  const auto& header = raw.front();
  size_t width = header.size();
  for (size_t r = 1; r < raw.size(); ++r)
    if (raw[r].size() != width)
      throw Error("AdapterFailure",
                  fmt::format("{} row {} has {} fields, header has {}", path.string(), r + 1,
                              raw[r].size(), width));
  for (size_t c = 0; c < width; ++c) {
    std::vector<std::string> values;
    for (size_t r = 1; r < raw.size(); ++r)
      if (raw[r][c]) values.push_back(*raw[r][c]);
    t.schema.emplace_back(header[c].value_or(fmt::format("column_{}", c + 1)), infer_type(values));
  }
  t.rows.reserve(raw.size() - 1);
  for (size_t r = 1; r < raw.size(); ++r) {
    Row row;
    row.reserve(width);
    for (size_t c = 0; c < width; ++c) {
      if (!raw[r][c]) row.emplace_back(std::monostate{});
      else row.push_back(parse_as(*raw[r][c], t.schema[c].second).value_or(Value{*raw[r][c]}));
    }
    t.rows.push_back(std::move(row));
  }
  return tables_[table] = std::move(t);
}

std::vector<std::pair<std::string, DataType>> CsvDirectoryAdapter::read_schema(
    const std::string& table) {
  std::lock_guard lock(mu_);
  return load(table).schema;
}

std::vector<Row> CsvDirectoryAdapter::scan(const std::string& table, std::optional<size_t> limit) {
  std::lock_guard lock(mu_);
  const auto& rows = load(table).rows;
  size_t n = limit ? std::min(*limit, rows.size()) : rows.size();
  return {rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n)};
}

void CsvDirectoryAdapter::ensure_database() {
  if (db_) return;
  if (sqlite3_open(":memory:", &db_) != SQLITE_OK)
    throw Error("AdapterFailure", "cannot open in-memory database");
  exec_or_throw(db_, "BEGIN");
  for (auto& name : list_tables()) {
    const Table& t = load(name);
    if (t.schema.empty()) continue;
    std::vector<std::string> cols, marks;
    for (auto& [col, type] : t.schema) {
      cols.push_back(quote_ident(col) + " " + sqlite_type(type));
      marks.push_back("?");
    }
    exec_or_throw(db_, fmt::format("CREATE TABLE {} ({})", quote_ident(name), text::join(cols, ", ")));
    sqlite3_stmt* stmt = nullptr;
    auto insert = fmt::format("INSERT INTO {} VALUES ({})", quote_ident(name), text::join(marks, ","));
    if (sqlite3_prepare_v2(db_, insert.c_str(), -1, &stmt, nullptr) != SQLITE_OK)
      throw Error("AdapterFailure", sqlite3_errmsg(db_));
    for (auto& row : t.rows) {
      for (size_t i = 0; i < row.size(); ++i) bind_value(stmt, static_cast<int>(i) + 1, row[i]);
      sqlite3_step(stmt);
      sqlite3_reset(stmt);
    }
    sqlite3_finalize(stmt);
  }
  exec_or_throw(db_, "COMMIT");
}

ResultSet CsvDirectoryAdapter::execute(const std::string& sql) {
  require_read_only(sql);
  std::lock_guard lock(mu_);
  ensure_database();
  return run_query(db_, sql);
}

// ---------------------------------------------------------------------------

SqliteAdapter::SqliteAdapter(const std::string& path) {
  if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READONLY, nullptr) != SQLITE_OK) {
    std::string err = db_ ? sqlite3_errmsg(db_) : "out of memory";
    if (db_) sqlite3_close(db_);
    db_ = nullptr;
    throw Error("AdapterFailure", fmt::format("cannot open '{}': {}", path, err));
  }
}

SqliteAdapter::~SqliteAdapter() {
  if (db_) sqlite3_close(db_);
}

std::vector<std::string> SqliteAdapter::list_tables() {
  std::lock_guard lock(mu_);
  auto rs = run_query(db_,
                      "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE "
                      "'sqlite_%' ORDER BY name");
  std::vector<std::string> out;
  for (auto& r : rs.rows) out.push_back(value_to_string(r[0]));
  return out;
}

std::vector<std::pair<std::string, DataType>> SqliteAdapter::read_schema(const std::string& table) {
  std::lock_guard lock(mu_);
  auto rs = run_query(db_, fmt::format("PRAGMA table_info({})", quote_ident(table)));
  if (rs.rows.empty()) throw Error("TableNotFound", fmt::format("no table '{}'", table));
  std::vector<std::pair<std::string, DataType>> out;
  for (auto& r : rs.rows) out.emplace_back(value_to_string(r[1]), from_declared(value_to_string(r[2])));
  return out;
}

std::vector<Row> SqliteAdapter::scan(const std::string& table, std::optional<size_t> limit) {
  auto schema = read_schema(table);
  std::lock_guard lock(mu_);
  auto sql = fmt::format("SELECT * FROM {}", quote_ident(table));
  if (limit) sql += fmt::format(" LIMIT {}", *limit);
  auto rows = run_query(db_, sql).rows;
  for (auto& row : rows)
    for (size_t i = 0; i < row.size() && i < schema.size(); ++i)
      if (auto s = std::get_if<std::string>(&row[i]))
        if (auto v = parse_as(*s, schema[i].second)) row[i] = *v;
  return rows;
}

ResultSet SqliteAdapter::execute(const std::string& sql) {
  require_read_only(sql);
  std::lock_guard lock(mu_);
  return run_query(db_, sql);
}

std::unique_ptr<DataSourceAdapter> open_adapter(const json& config) {
  if (!config.is_object()) throw Error("InvalidPayload", "datasource config must be an object");
  auto kind = config.value("kind", "");
  auto path = config.value("path", "");
  if (path.empty()) throw Error("InvalidPayload", "datasource config needs a path");
  try {
    if (kind == "csv") return std::make_unique<CsvDirectoryAdapter>(path);
    if (kind == "sqlite") return std::make_unique<SqliteAdapter>(path);
  } catch (const Error& e) {
    throw Error("InvalidPayload", e.what());
  }
  throw Error("InvalidPayload", fmt::format("unknown datasource kind '{}'", kind));
}

}  // namespace tursio
