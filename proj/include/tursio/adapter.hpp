#pragma once

// Data-source adapters: a CSV directory (one file per table) and a read-only
// SQLite database. execute() accepts SELECT only.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tursio/json_io.hpp"
#include "tursio/value.hpp"

struct sqlite3;

namespace tursio {

using Row = std::vector<Value>;

struct ResultSet {
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

json result_to_json(const ResultSet& rs);

class DataSourceAdapter {
 public:
  virtual ~DataSourceAdapter() = default;
  virtual std::vector<std::string> list_tables() = 0;
  virtual std::vector<std::pair<std::string, DataType>> read_schema(const std::string& table) = 0;
  /// Returns at most `limit` rows in storage order. Throws TableNotFound.
  virtual std::vector<Row> scan(const std::string& table, std::optional<size_t> limit) = 0;
  /// Runs one read-only statement. Throws NotReadOnly, ParseFailure or AdapterFailure.
  virtual ResultSet execute(const std::string& sql) = 0;
};

/// Throws Error("NotReadOnly") unless `sql` is a single SELECT / WITH ... SELECT.
void require_read_only(const std::string& sql);

class CsvDirectoryAdapter : public DataSourceAdapter {
 public:
  explicit CsvDirectoryAdapter(std::string directory);
  ~CsvDirectoryAdapter() override;

  std::vector<std::string> list_tables() override;
  std::vector<std::pair<std::string, DataType>> read_schema(const std::string& table) override;
  std::vector<Row> scan(const std::string& table, std::optional<size_t> limit) override;
  ResultSet execute(const std::string& sql) override;

 private:
  struct Table {
    std::vector<std::pair<std::string, DataType>> schema;
    std::vector<Row> rows;
  };
  const Table& load(const std::string& table);
  void ensure_database();

  std::string dir_;
  std::mutex mu_;
  std::map<std::string, Table> tables_;
  sqlite3* db_ = nullptr;
};

class SqliteAdapter : public DataSourceAdapter {
 public:
  /// Opens `path` read-only.
  explicit SqliteAdapter(const std::string& path);
  ~SqliteAdapter() override;

  std::vector<std::string> list_tables() override;
  std::vector<std::pair<std::string, DataType>> read_schema(const std::string& table) override;
  std::vector<Row> scan(const std::string& table, std::optional<size_t> limit) override;
  ResultSet execute(const std::string& sql) override;

 private:
  std::mutex mu_;
  sqlite3* db_ = nullptr;
};

/// Datasource config: {"kind": "csv", "path": dir} or {"kind": "sqlite", "path": file}.
/// Throws Error("InvalidPayload") for an unusable config.
std::unique_ptr<DataSourceAdapter> open_adapter(const json& config);

}  // namespace tursio
