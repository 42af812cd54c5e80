#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace tursio {

enum class DataType { Integer, Decimal, Text, Date, Timestamp, Boolean };

std::string_view to_string(DataType type);
DataType data_type_from_string(std::string_view name);
bool is_numeric(DataType type);
bool is_temporal(DataType type);

/// A single scalar cell. Dates and timestamps are carried as ISO-8601 text.
using Value = std::variant<std::monostate, int64_t, double, std::string, bool>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

/// Canonical text form used for hashing, distinct counting and CSV output.
std::string value_to_string(const Value& v);

/// Total order over values: null < bool < numbers < text. Numbers compare numerically.
int compare_values(const Value& a, const Value& b);

struct ValueLess {
  bool operator()(const Value& a, const Value& b) const { return compare_values(a, b) < 0; }
};

/// Parses raw text into the representation for `type`; nullopt when it does not parse.
std::optional<Value> parse_as(std::string_view text, DataType type);

// Lexical recognizers shared by type inference and the intent grammar.
bool looks_integer(std::string_view s);
bool looks_decimal(std::string_view s);
bool looks_date(std::string_view s);
bool looks_timestamp(std::string_view s);
bool looks_boolean(std::string_view s);

/// Base for every error the library throws; `code` is a stable machine-readable tag.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace tursio
