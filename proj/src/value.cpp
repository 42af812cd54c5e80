#include "tursio/value.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fmt/format.h>

namespace tursio {

std::string_view to_string(DataType type) {
  switch (type) {
    case DataType::Integer: return "integer";
    case DataType::Decimal: return "decimal";
    case DataType::Text: return "text";
    case DataType::Date: return "date";
    case DataType::Timestamp: return "timestamp";
    case DataType::Boolean: return "boolean";
  }
  return "text";
}

DataType data_type_from_string(std::string_view name) {
  if (name == "integer") return DataType::Integer;
  if (name == "decimal") return DataType::Decimal;
  if (name == "text") return DataType::Text;
  if (name == "date") return DataType::Date;
  if (name == "timestamp") return DataType::Timestamp;
  if (name == "boolean") return DataType::Boolean;
  throw Error("MalformedDocument", fmt::format("unknown data type '{}'", name));
}

bool is_numeric(DataType type) { return type == DataType::Integer || type == DataType::Decimal; }
bool is_temporal(DataType type) { return type == DataType::Date || type == DataType::Timestamp; }

std::string value_to_string(const Value& v) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const {
      if (std::floor(d) == d && std::fabs(d) < 1e15) return fmt::format("{:.1f}", d);
      return fmt::format("{}", d);
    }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
  };
  return std::visit(Visitor{}, v);
}

namespace {

int rank(const Value& v) {
  if (is_null(v)) return 0;
  if (std::holds_alternative<bool>(v)) return 1;
  if (std::holds_alternative<int64_t>(v) || std::holds_alternative<double>(v)) return 2;
  return 3;
}

double as_double(const Value& v) {
  if (auto* i = std::get_if<int64_t>(&v)) return static_cast<double>(*i);
  return std::get<double>(v);
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

}  // namespace

int compare_values(const Value& a, const Value& b) {
  int ra = rank(a), rb = rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (ra) {
    case 0: return 0;
    case 1: return static_cast<int>(std::get<bool>(a)) - static_cast<int>(std::get<bool>(b));
    case 2: {
      if (std::holds_alternative<int64_t>(a) && std::holds_alternative<int64_t>(b)) {
        auto x = std::get<int64_t>(a), y = std::get<int64_t>(b);
        return x < y ? -1 : (x > y ? 1 : 0);
      }
      double x = as_double(a), y = as_double(b);
      return x < y ? -1 : (x > y ? 1 : 0);
    }
    default: {
      int c = std::get<std::string>(a).compare(std::get<std::string>(b));
      return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
  }
}

bool looks_integer(std::string_view s) {
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) s.remove_prefix(1);
  if (!all_digits(s) || s.size() > 18) return false;
  return true;
}

bool looks_decimal(std::string_view s) {
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) s.remove_prefix(1);
  auto dot = s.find('.');
  if (dot == std::string_view::npos) return all_digits(s);
  auto whole = s.substr(0, dot), frac = s.substr(dot + 1);
  if (whole.empty() && frac.empty()) return false;
  return (whole.empty() || all_digits(whole)) && (frac.empty() || all_digits(frac));
}

bool looks_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  if (!all_digits(s.substr(0, 4)) || !all_digits(s.substr(5, 2)) || !all_digits(s.substr(8, 2)))
    return false;
  int year = std::stoi(std::string(s.substr(0, 4)));
  unsigned month = static_cast<unsigned>((s[5] - '0') * 10 + (s[6] - '0'));
  unsigned day = static_cast<unsigned>((s[8] - '0') * 10 + (s[9] - '0'));
  return std::chrono::year_month_day{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}}.ok();
}

bool looks_timestamp(std::string_view s) {
  // YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z]
  if (s.size() < 16 || !looks_date(s.substr(0, 10))) return false;
  if (s[10] != 'T' && s[10] != ' ') return false;
  auto rest = s.substr(11);
  if (!rest.empty() && rest.back() == 'Z') rest.remove_suffix(1);
  if (rest.size() < 5 || rest[2] != ':') return false;
  if (!all_digits(rest.substr(0, 2)) || !all_digits(rest.substr(3, 2))) return false;
  if (rest.size() == 5) return true;
  if (rest[5] != ':' || rest.size() < 8 || !all_digits(rest.substr(6, 2))) return false;
  if (rest.size() == 8) return true;
  return rest[8] == '.' && all_digits(rest.substr(9));
}

bool looks_boolean(std::string_view s) {
  return s == "true" || s == "false" || s == "TRUE" || s == "FALSE" || s == "True" ||
         s == "False";
}

std::optional<Value> parse_as(std::string_view text, DataType type) {
  switch (type) {
    case DataType::Integer: {
      if (!looks_integer(text)) return std::nullopt;
      int64_t out = 0;
      auto body = text;
      if (!body.empty() && body[0] == '+') body.remove_prefix(1);
      auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), out);
      if (ec != std::errc{} || p != body.data() + body.size()) return std::nullopt;
      return Value{out};
    }
    case DataType::Decimal: {
      if (!looks_decimal(text)) return std::nullopt;
      return Value{std::stod(std::string(text))};
    }
    case DataType::Date:
      if (!looks_date(text)) return std::nullopt;
      return Value{std::string(text)};
    case DataType::Timestamp:
      if (!looks_timestamp(text)) return std::nullopt;
      return Value{std::string(text)};
    case DataType::Boolean:
      if (!looks_boolean(text)) return std::nullopt;
      return Value{text[0] == 't' || text[0] == 'T'};
    case DataType::Text:
      return Value{std::string(text)};
  }
  return std::nullopt;
}

}  // namespace tursio
