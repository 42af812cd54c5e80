#pragma once

// RFC-4180 reader/writer. An unquoted empty field is null; a quoted empty
// field ("") is the empty string.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tursio::csv {

using Field = std::optional<std::string>;
using Row = std::vector<Field>;

/// Throws Error("MalformedDocument") on an unterminated quote.
std::vector<Row> parse(std::string_view text);

std::string escape(std::string_view field);
std::string format_row(const Row& row);

}  // namespace tursio::csv
