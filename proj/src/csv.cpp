#include "tursio/csv.hpp"

#include "tursio/value.hpp"

namespace tursio::csv {

std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool quoted = false;      // current field was opened with a quote
  bool in_quotes = false;   // inside the quoted section
  bool any = false;         // current row has content
  size_t i = 0;
  auto end_field = [&] {
    if (quoted || !field.empty()) row.emplace_back(field);
    else row.emplace_back(std::nullopt);
    field.clear();
    quoted = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
    any = false;
  };
  while (i < text.size()) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      ++i;
      continue;
    }
    if (c == '"' && field.empty() && !quoted) {
      quoted = in_quotes = any = true;
    } else if (c == ',') {
      end_field();
      any = true;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      // handled on the '\n'
    } else if (c == '\n') {
      if (any || !field.empty() || !row.empty()) end_row();
    } else {
      field.push_back(c);
      any = true;
    }
    ++i;
  }
  if (in_quotes) throw Error("MalformedDocument", "unterminated quoted CSV field");
  if (any || !field.empty() || !row.empty()) end_row();
  return rows;
}

std::string escape(std::string_view field) {
  bool needs = field.empty() || field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

std::string format_row(const Row& row) {
  std::string out;
  for (size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    if (row[i]) out += escape(*row[i]);
  }
  return out;
}

}  // namespace tursio::csv
