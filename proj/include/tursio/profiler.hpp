#pragma once

// Column profiling over a fixed-size, seeded row reservoir.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tursio/adapter.hpp"
#include "tursio/json_io.hpp"
#include "tursio/value.hpp"

namespace tursio {

inline constexpr size_t kDefaultSampleSize = 10000;
inline constexpr size_t kValueSampleSize = 100;

struct ColumnStats {
  std::string table;
  std::string column;
  int64_t sampled_rows = 0;
  int64_t distinct_count = 0;  // distinct non-null values in the row sample
  int64_t null_count = 0;
  double null_fraction = 0.0;
  std::optional<Value> min;
  std::optional<Value> max;
  std::optional<double> avg_length;  // text columns only
  /// Up to 100 distinct values: the ones with the smallest value_hash, in hash
  /// order. Every column picks by the same hash, so samples of a column and of
  /// a superset column stay nested.
  std::vector<Value> value_sample;
  DataType inferred_type = DataType::Text;

  /// True when value_sample holds every distinct sampled value.
  bool complete_sample() const {
    return static_cast<int64_t>(value_sample.size()) == distinct_count;
  }
  bool operator==(const ColumnStats&) const = default;
};

json stats_to_json(const ColumnStats& s);

uint64_t value_hash(const Value& v);

/// Narrowest of integer, decimal, date, timestamp, boolean, text that parses
/// every value. Empty input gives text.
DataType infer_type(const std::vector<std::string>& values);

/// Profiles every column of `table` over a reservoir of `sample_size` rows.
/// The reservoir is seeded from (graph_id, table). Throws TableNotFound,
/// AdapterFailure.
std::vector<ColumnStats> profile_table(DataSourceAdapter& adapter, const std::string& table,
                                       size_t sample_size = kDefaultSampleSize,
                                       const std::string& graph_id = "");

}  // namespace tursio
