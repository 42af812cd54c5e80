#include "tursio/profiler.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <random>
#include <unordered_map>

#include "tursio/text.hpp"

namespace tursio {

json stats_to_json(const ColumnStats& s) {
  json sample = json::array();
  for (auto& v : s.value_sample) sample.push_back(value_to_json(v));
  return {{"table", s.table},
          {"column", s.column},
          {"sampled_rows", s.sampled_rows},
          {"distinct_count", s.distinct_count},
          {"null_fraction", s.null_fraction},
          {"min", s.min ? value_to_json(*s.min) : json(nullptr)},
          {"max", s.max ? value_to_json(*s.max) : json(nullptr)},
          {"avg_length", s.avg_length ? json(*s.avg_length) : json(nullptr)},
          {"value_sample", sample},
          {"inferred_type", to_string(s.inferred_type)}};
}

uint64_t value_hash(const Value& v) { return text::fnv1a64(value_to_string(v)); }

DataType infer_type(const std::vector<std::string>& values) {
  if (values.empty()) return DataType::Text;
  for (auto type : {DataType::Integer, DataType::Decimal, DataType::Date, DataType::Timestamp,
                    DataType::Boolean}) {
    bool all = std::all_of(values.begin(), values.end(),
                           [&](const std::string& v) { return parse_as(v, type).has_value(); });
    if (all) return type;
  }
  return DataType::Text;
}

std::vector<ColumnStats> profile_table(DataSourceAdapter& adapter, const std::string& table,
                                       size_t sample_size, const std::string& graph_id) {
  if (sample_size == 0) throw Error("InvalidPayload", "sample_size must be at least 1");
  std::vector<std::pair<std::string, DataType>> schema;
  std::vector<Row> rows;
  try {
    schema = adapter.read_schema(table);
    rows = adapter.scan(table, std::nullopt);
  } catch (const Error& e) {
    if (e.code() == "TableNotFound" || e.code() == "AdapterFailure") throw;
    throw Error("AdapterFailure", fmt::format("profiling {}: {}", table, e.what()));
  } catch (const std::exception& e) {
    throw Error("AdapterFailure", fmt::format("profiling {}: {}", table, e.what()));
  }

  // Algorithm R over the full scan.
  std::mt19937_64 rng(text::fnv1a64(graph_id + "\x1f" + table));
  std::vector<size_t> reservoir;
  reservoir.reserve(std::min(sample_size, rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (reservoir.size() < sample_size) {
      reservoir.push_back(i);
    } else {
      uint64_t j = rng() % (i + 1);
      if (j < sample_size) reservoir[j] = i;
    }
  }
  std::sort(reservoir.begin(), reservoir.end());

  std::vector<ColumnStats> out;
  for (size_t c = 0; c < schema.size(); ++c) {
    ColumnStats s;
    s.table = table;
    s.column = schema[c].first;
    s.inferred_type = schema[c].second;
    s.sampled_rows = static_cast<int64_t>(reservoir.size());
    std::unordered_map<std::string, Value> distinct;
    double total_len = 0;
    for (size_t r : reservoir) {
      const Value& v = c < rows[r].size() ? rows[r][c] : Value{};
      if (is_null(v)) {
        ++s.null_count;
        continue;
      }
      auto key = value_to_string(v);
      if (s.inferred_type == DataType::Text) total_len += static_cast<double>(key.size());
      if (!s.min || compare_values(v, *s.min) < 0) s.min = v;
      if (!s.max || compare_values(v, *s.max) > 0) s.max = v;
      distinct.try_emplace(std::move(key), v);
    }
    s.distinct_count = static_cast<int64_t>(distinct.size());
    s.null_fraction = s.sampled_rows ? static_cast<double>(s.null_count) / s.sampled_rows : 0.0;
    int64_t non_null = s.sampled_rows - s.null_count;
    if (s.inferred_type == DataType::Text && non_null > 0) s.avg_length = total_len / non_null;

    std::vector<std::pair<uint64_t, const std::string*>> ranked;
    ranked.reserve(distinct.size());
    for (auto& [key, v] : distinct) ranked.emplace_back(text::fnv1a64(key), &key);
    size_t k = std::min(kValueSampleSize, ranked.size());
    auto by_hash = [](auto& a, auto& b) { return std::tie(a.first, *a.second) < std::tie(b.first, *b.second); };
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(), by_hash);
    for (size_t i = 0; i < k; ++i) s.value_sample.push_back(distinct.at(*ranked[i].second));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace tursio
