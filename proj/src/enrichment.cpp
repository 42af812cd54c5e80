#include "tursio/enrichment.hpp"

#include <algorithm>
#include <cctype>
#include <fmt/format.h>
#include <regex>

#include "tursio/text.hpp"

namespace tursio {

namespace {

const std::set<std::string> kMeasureTerms = {"amount", "balance", "total", "count",
                                             "rate",   "fee",     "price", "qty"};
const std::set<std::string> kNonMeasureTerms = {"id", "key", "code", "date", "dt", "zip"};

std::string title(std::string_view word) {
  std::string out(word);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

}  // namespace

ColumnRole classify_column(const ColumnMeta& meta, const ColumnStats& stats, bool is_key) {
  if (!is_numeric(meta.data_type) || is_key) return ColumnRole::Dimension;
  auto tokens = text::split_identifier(meta.name);
  for (auto& t : tokens)
    if (kNonMeasureTerms.count(t)) return ColumnRole::Dimension;
  bool lexical = std::any_of(tokens.begin(), tokens.end(), [](auto& t) { return kMeasureTerms.count(t) > 0; });
  double ratio = stats.sampled_rows ? static_cast<double>(stats.distinct_count) / stats.sampled_rows : 0.0;
  return lexical || ratio > 0.5 ? ColumnRole::Measure : ColumnRole::Dimension;
}

std::string expand_name(std::string_view physical_name, const Lexicon& lexicon) {
  std::vector<std::string> words;
  for (auto& token : text::split_identifier(physical_name)) {
    auto it = lexicon.abbreviations.find(token);
    std::string expanded = it == lexicon.abbreviations.end() ? token : it->second;
    for (auto& w : text::words(expanded)) {
      // keep all-caps expansions such as "ID"
      bool caps = it != lexicon.abbreviations.end() && expanded == text::upper(expanded);
      words.push_back(caps ? text::upper(w) : title(w));
    }
  }
  return text::join(words, " ");
}

bool looks_ssn(std::string_view s) {
  static const std::regex re(R"(^\d{3}-\d{2}-\d{4}$)");
  return std::regex_match(s.begin(), s.end(), re);
}

bool looks_email(std::string_view s) {
  static const std::regex re(R"(^[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}$)");
  return std::regex_match(s.begin(), s.end(), re);
}

bool looks_e164_phone(std::string_view s) {
  static const std::regex re(R"(^\+[1-9]\d{7,14}$)");
  return std::regex_match(s.begin(), s.end(), re);
}

bool detect_pii(const ColumnMeta& meta, const ColumnStats& stats, const Lexicon& lexicon) {
  if (lexicon.names_pii(meta.name)) return true;
  size_t n = 0, hits = 0;
  for (auto& v : stats.value_sample) {
    auto s = std::get_if<std::string>(&v);
    if (is_null(v)) continue;
    ++n;
    if (s && (looks_ssn(*s) || looks_email(*s) || looks_e164_phone(*s))) ++hits;
  }
  return n > 0 && hits * 5 >= n * 4;
}

std::string generate_alias(std::string_view physical_name, const std::set<std::string>& existing) {
  auto tokens = text::split_identifier(physical_name);
  std::string base;
  if (tokens.size() >= 2) {
    for (auto& t : tokens) base.push_back(t[0]);
  } else {
    base = text::lower(physical_name).substr(0, 4);
  }
  if (base.empty()) base = "t";
  base = base.substr(0, 20);
  if (!existing.count(base)) return base;
  for (int n = 2;; ++n) {
    auto candidate = fmt::format("{}{}", base, n);
    if (!existing.count(candidate)) return candidate;
  }
}

std::string describe_column(const ColumnMeta& column, const TableNode& table) {
  std::string out = fmt::format("{} of {}; type {}", column.display_name, table.display_name,
                                to_string(column.data_type));
  if (!column.pii && !column.sample_values.empty())
    out += fmt::format("; e.g. {}", value_to_string(column.sample_values.front()));
  return out;
}

std::string describe_table(const TableNode& table) { return table.display_name + " table"; }

std::vector<Annotation> derive_custom_measures(const ContextGraph& graph, const std::string& created_at) {
  std::vector<Annotation> out;
  auto add = [&](const TableNode& t, std::string name, std::string expression) {
    Annotation a;
    a.target = {AnnotationTarget::Kind::Table, t.table_id, ""};
    a.kind = AnnotationKind::CustomMeasure;
    a.payload = CustomMeasurePayload{std::move(name), std::move(expression), t.table_id};
    a.author = "system";
    a.created_at = created_at;
    out.push_back(std::move(a));
  };
  for (auto& t : graph.tables) {
    for (auto& c : t.columns) {
      if (c.role != ColumnRole::Measure || c.pii) continue;
      add(t, "sum_" + c.name, fmt::format("SUM({})", c.name));
      add(t, "avg_" + c.name, fmt::format("AVG({})", c.name));
    }
    add(t, "row_count", "COUNT(*)");
  }
  return out;
}

}  // namespace tursio
