#include "tursio/intent.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <fmt/format.h>
#include <regex>

#include "tursio/text.hpp"

namespace tursio {

std::string_view to_string(AggFunc f) {
  switch (f) {
    case AggFunc::None: return "none";
    case AggFunc::Sum: return "sum";
    case AggFunc::Avg: return "avg";
    case AggFunc::Count: return "count";
    case AggFunc::Min: return "min";
    case AggFunc::Max: return "max";
  }
  return "none";
}

AggFunc agg_func_from_string(std::string_view s) {
  for (auto f : {AggFunc::None, AggFunc::Sum, AggFunc::Avg, AggFunc::Count, AggFunc::Min, AggFunc::Max})
    if (to_string(f) == s) return f;
  throw Error("InvalidPayload", fmt::format("unknown aggregate '{}'", s));
}

namespace {

std::string_view literal_kind_name(Literal::Kind k) {
  switch (k) {
    case Literal::Kind::Number: return "number";
    case Literal::Kind::Date: return "date";
    default: return "string";
  }
}

Literal::Kind literal_kind_from(std::string_view s) {
  if (s == "number") return Literal::Kind::Number;
  if (s == "date") return Literal::Kind::Date;
  if (s == "string") return Literal::Kind::String;
  throw Error("InvalidPayload", fmt::format("unknown literal kind '{}'", s));
}

}  // namespace

json sketch_to_json(const QuerySketch& s) {
  json select = json::array();
  for (auto& t : s.select_terms) select.push_back({{"phrase", t.phrase}, {"aggregate", to_string(t.aggregate)}});
  json filters = json::array();
  for (auto& f : s.filter_terms) {
    json lit = nullptr;
    if (f.literal) lit = {{"kind", literal_kind_name(f.literal->kind)}, {"text", f.literal->text}};
    filters.push_back({{"phrase", f.phrase}, {"comparator", f.comparator}, {"literal", lit}});
  }
  json j = {{"select_terms", select},
            {"group_terms", s.group_terms},
            {"filter_terms", filters},
            {"wants_aggregate", s.wants_aggregate},
            {"fallback", s.fallback}};
  j["time_window"] = s.time_window ? json{{"label", s.time_window->label},
                                          {"start", s.time_window->start},
                                          {"end", s.time_window->end},
                                          {"anchor", s.time_window->anchor}}
                                    : json(nullptr);
  j["order_term"] = s.order_term ? json{{"phrase", s.order_term->phrase},
                                        {"direction", s.order_term->descending ? "desc" : "asc"}}
                                  : json(nullptr);
  j["limit"] = s.limit ? json(*s.limit) : json(nullptr);
  return j;
}

QuerySketch sketch_from_json(const json& j) {
  try {
    QuerySketch s;
    for (auto& t : j.at("select_terms")) {
      if (t.is_string()) s.select_terms.push_back({t.get<std::string>(), AggFunc::None});
      else s.select_terms.push_back({t.at("phrase").get<std::string>(),
                                     agg_func_from_string(t.value("aggregate", "none"))});
    }
    s.group_terms = j.value("group_terms", std::vector<std::string>{});
    for (auto& f : j.value("filter_terms", json::array())) {
      FilterTerm ft{f.at("phrase").get<std::string>(), f.value("comparator", "="), std::nullopt};
      if (f.contains("literal") && !f["literal"].is_null())
        ft.literal = Literal{literal_kind_from(f["literal"].value("kind", "string")),
                             f["literal"].at("text").get<std::string>()};
      s.filter_terms.push_back(std::move(ft));
    }
    if (j.contains("time_window") && !j["time_window"].is_null()) {
      auto& t = j["time_window"];
      s.time_window = TimeWindow{t.value("label", ""), t.at("start").get<std::string>(),
                                 t.at("end").get<std::string>(), t.value("anchor", "")};
    }
    if (j.contains("order_term") && !j["order_term"].is_null())
      s.order_term = OrderTerm{j["order_term"].at("phrase").get<std::string>(),
                               j["order_term"].value("direction", "desc") == "desc"};
    if (j.contains("limit") && !j["limit"].is_null()) s.limit = j["limit"].get<int64_t>();
    s.wants_aggregate = j.value("wants_aggregate", false);
    s.fallback = j.value("fallback", false);
    if (s.select_terms.empty()) throw Error("InvalidPayload", "sketch has no select term");
    return s;
  } catch (const json::exception& e) {
    throw Error("InvalidPayload", fmt::format("malformed sketch: {}", e.what()));
  }
}

// ---------------------------------------------------------------------------
// Dates

namespace {

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }
int days_in(int y, int m) {
  static const int d[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && leap(y) ? 29 : d[m - 1];
}

// Days since 1970-01-01 (H. Hinnant's algorithm).
int64_t to_days(const CivilDate& c) {
  int y = c.year - (c.month <= 2);
  int64_t era = (y >= 0 ? y : y - 399) / 400;
  int64_t yoe = y - era * 400;
  int64_t doy = (153 * (c.month + (c.month > 2 ? -3 : 9)) + 2) / 5 + c.day - 1;
  int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

CivilDate from_days(int64_t z) {
  z += 719468;
  int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  int64_t doe = z - era * 146097;
  int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  int64_t y = yoe + era * 400;
  int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  int64_t mp = (5 * doy + 2) / 153;
  int d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  int m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  return {static_cast<int>(y + (m <= 2)), m, d};
}

}  // namespace

std::string CivilDate::iso() const { return fmt::format("{:04d}-{:02d}-{:02d}", year, month, day); }

CivilDate CivilDate::parse(std::string_view t) {
  if (t.size() < 10 || !looks_date(t.substr(0, 10)))
    throw Error("InvalidPayload", fmt::format("'{}' is not an ISO date or instant", t));
  CivilDate c{std::stoi(std::string(t.substr(0, 4))), std::stoi(std::string(t.substr(5, 2))),
              std::stoi(std::string(t.substr(8, 2)))};
  if (c.month < 1 || c.month > 12 || c.day < 1 || c.day > days_in(c.year, c.month))
    throw Error("InvalidPayload", fmt::format("'{}' is not a valid date", t));
  return c;
}

CivilDate CivilDate::add_days(int days) const { return from_days(to_days(*this) + days); }

CivilDate CivilDate::add_months(int months) const {
  int total = year * 12 + (month - 1) + months;
  return {total / 12, total % 12 + 1, 1};
}

// ---------------------------------------------------------------------------
// Grammar

namespace {

struct AggWord {
  const char* text;
  AggFunc func;
};

// Longest first so "number of" wins over "number".
const std::array<AggWord, 20> kAggWords = {{
    {"the total number of", AggFunc::Count}, {"total number of", AggFunc::Count},
    {"the number of", AggFunc::Count},       {"number of", AggFunc::Count},
    {"count of", AggFunc::Count},            {"how many", AggFunc::Count},
    {"the sum of", AggFunc::Sum},            {"sum of", AggFunc::Sum},
    {"the total", AggFunc::Sum},             {"total", AggFunc::Sum},
    {"the average", AggFunc::Avg},           {"average", AggFunc::Avg},
    {"avg", AggFunc::Avg},                   {"mean", AggFunc::Avg},
    {"maximum", AggFunc::Max},               {"highest", AggFunc::Max},
    {"largest", AggFunc::Max},               {"minimum", AggFunc::Min},
    {"lowest", AggFunc::Min},                {"smallest", AggFunc::Min},
}};

const std::array<const char*, 16> kCommands = {
    "show me", "give me", "what is the", "what are the", "what is", "what are", "list all",
    "list",    "show",    "display",     "find",         "get",     "return",  "which",
    "count",   "who are"};

struct Comparator {
  const char* text;
  const char* op;
};

const std::array<Comparator, 20> kComparators = {{
    {"greater than or equal to", ">="}, {"less than or equal to", "<="},
    {"more than", ">"},                 {"greater than", ">"},
    {"exceeding", ">"},                 {"exceeds", ">"},
    {"over", ">"},                      {"above", ">"},
    {"at least", ">="},                 {"less than", "<"},
    {"fewer than", "<"},                {"below", "<"},
    {"under", "<"},                     {"at most", "<="},
    {"equal to", "="},                  {"equals", "="},
    {"is not", "<>"},                   {"is", "="},
    {">=", ">="},                       {"<=", "<="},
}};

const std::set<std::string> kGrammarWords = {
    "total", "sum", "average", "avg", "mean", "number", "count", "how", "many", "maximum", "max",
    "highest", "largest", "minimum", "min", "lowest", "smallest", "more", "than", "greater",
    "exceeding", "exceeds", "exceed", "over", "above", "least", "less", "fewer", "below", "under",
    "most", "equal", "equals", "not", "last", "previous", "past", "quarter", "year", "month",
    "since", "between", "during", "this", "list", "show", "display", "find", "get", "return",
    "ordered", "sorted", "order", "top", "ascending", "descending", "asc", "desc", "what", "which"};

std::string squash(std::string s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

bool strip_prefix(std::string& s, std::string_view prefix) {
  if (s == prefix) {
    s.clear();
    return true;
  }
  if (text::starts_with(s, prefix) && s.size() > prefix.size() && s[prefix.size()] == ' ') {
    s = s.substr(prefix.size() + 1);
    return true;
  }
  return false;
}

/// Position of " word " in " s ", as an index into s, or npos.
size_t find_word(const std::string& s, std::string_view word, size_t from = 0) {
  std::string padded = " " + s + " ";
  std::string needle = " " + std::string(word) + " ";
  // padded index of the leading space equals the word's index in s
  return padded.find(needle, from);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur = s;
  for (;;) {
    size_t best = std::string::npos, len = 0;
    for (std::string_view sep : {" and ", ", ", ","}) {
      size_t p = cur.find(sep);
      if (p != std::string::npos && p < best) {
        best = p;
        len = sep.size();
      }
    }
    if (best == std::string::npos) break;
    parts.push_back(text::trim(cur.substr(0, best)));
    cur = cur.substr(best + len);
  }
  parts.push_back(text::trim(cur));
  parts.erase(std::remove(parts.begin(), parts.end(), std::string()), parts.end());
  return parts;
}

AggFunc take_aggregate(std::string& phrase) {
  for (auto& w : kAggWords)
    if (strip_prefix(phrase, w.text)) return w.func;
  return AggFunc::None;
}

std::optional<Literal> parse_literal(std::string value, std::string& unit) {
  value = text::trim(value);
  if (value.size() >= 2 && (value.front() == '\'' || value.front() == '"') && value.back() == value.front())
    return Literal{Literal::Kind::String, value.substr(1, value.size() - 2)};
  auto sp = value.find(' ');
  std::string head = value.substr(0, sp);
  if (looks_date(head)) {
    if (sp != std::string::npos) unit = text::trim(value.substr(sp + 1));
    return Literal{Literal::Kind::Date, head};
  }
  if (looks_integer(head) || looks_decimal(head)) {
    if (sp != std::string::npos) unit = text::trim(value.substr(sp + 1));
    return Literal{Literal::Kind::Number, head};
  }
  if (value.empty()) return std::nullopt;
  return Literal{Literal::Kind::String, value};
}

FilterTerm parse_filter(const std::string& part) {
  std::string padded = " " + part + " ";
  size_t best = std::string::npos;
  const Comparator* which = nullptr;
  for (auto& c : kComparators) {
    std::string needle = " " + std::string(c.text) + " ";
    size_t p = padded.find(needle);
    if (p != std::string::npos && (p < best || (p == best && std::strlen(c.text) > std::strlen(which->text)))) {
      best = p;
      which = &c;
    }
  }
  for (std::string_view sym : {">", "<", "="}) {
    size_t p = padded.find(" " + std::string(sym) + " ");
    if (p != std::string::npos && p < best) {
      best = p;
      static const Comparator gt{">", ">"}, lt{"<", "<"}, eq{"=", "="};
      which = sym == ">" ? &gt : sym == "<" ? &lt : &eq;
    }
  }
  if (!which) return {text::trim(part), "=", std::nullopt};
  std::string phrase = text::trim(padded.substr(0, best));
  std::string rest = padded.substr(best + std::strlen(which->text) + 2);
  std::string unit;
  auto lit = parse_literal(rest, unit);
  if (!unit.empty()) phrase = text::trim(phrase + " " + unit);
  return {phrase, which->op, lit};
}

struct TimeMatch {
  TimeWindow window;
  size_t pos = std::string::npos;
  size_t len = 0;
};

std::optional<TimeMatch> find_time(const std::string& q, const CivilDate& now) {
  static const std::regex relative(
      R"((?:^| )((?:in |during |over )?(?:the )?(last|previous|past|this) (quarter|year|month))(?= |$))");
  static const std::regex last_days(R"((?:^| )((?:in |during |over )?(?:the )?(?:last|past) (\d+) days)(?= |$))");
  static const std::regex in_year(R"((?:^| )((?:in|during) (\d{4}))(?= |$))");
  static const std::regex since(R"((?:^| )((?:since|after) (\d{4}-\d{2}-\d{2}))(?= |$))");
  static const std::regex between(
      R"((?:^| )(between (\d{4}-\d{2}-\d{2}) and (\d{4}-\d{2}-\d{2}))(?= |$))");
  std::smatch m;
  auto make = [&](const std::smatch& mm, std::string label, CivilDate a, CivilDate b) {
    TimeMatch tm;
    tm.window = {std::move(label), a.iso(), b.iso(), ""};
    tm.pos = static_cast<size_t>(mm.position(1));
    tm.len = static_cast<size_t>(mm.length(1));
    return tm;
  };
  if (std::regex_search(q, m, between)) {
    auto a = CivilDate::parse(m[2].str()), b = CivilDate::parse(m[3].str()).add_days(1);
    return make(m, m[1].str(), a, b);
  }
  if (std::regex_search(q, m, last_days)) {
    int n = std::stoi(m[2].str());
    return make(m, fmt::format("last {} days", n), now.add_days(-n), now);
  }
  if (std::regex_search(q, m, relative)) {
    std::string which = m[2].str(), unit = m[3].str();
    bool current = which == "this";
    CivilDate start, end;
    if (unit == "year") {
      start = {now.year - (current ? 0 : 1), 1, 1};
      end = {start.year + 1, 1, 1};
    } else if (unit == "quarter") {
      CivilDate q0{now.year, ((now.month - 1) / 3) * 3 + 1, 1};
      start = current ? q0 : q0.add_months(-3);
      end = start.add_months(3);
    } else {
      CivilDate m0{now.year, now.month, 1};
      start = current ? m0 : m0.add_months(-1);
      end = start.add_months(1);
    }
    return make(m, (current ? "this " : "last ") + unit, start, end);
  }
  if (std::regex_search(q, m, in_year)) {
    int y = std::stoi(m[2].str());
    return make(m, "in " + m[2].str(), CivilDate{y, 1, 1}, CivilDate{y + 1, 1, 1});
  }
  if (std::regex_search(q, m, since)) {
    auto a = CivilDate::parse(m[2].str());
    return make(m, "since " + m[2].str(), a, now.add_days(1));
  }
  return std::nullopt;
}

const std::array<const char*, 8> kFilterConnectors = {"with", "where", "which", "that", "who",
                                                      "having", "have", "has"};

}  // namespace

bool is_grammar_word(std::string_view token) { return kGrammarWords.count(std::string(token)) > 0; }

std::string normalize_question(std::string_view question) {
  std::string q = text::lower(question);
  std::string out;
  for (size_t i = 0; i < q.size(); ++i) {
    char c = q[i];
    if (c == '$') continue;
    if (c == ',' && i > 0 && i + 1 < q.size() && std::isdigit(static_cast<unsigned char>(q[i - 1])) &&
        std::isdigit(static_cast<unsigned char>(q[i + 1])))
      continue;
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    out.push_back(c);
  }
  out = squash(out);
  while (!out.empty() && (out.back() == '?' || out.back() == '.' || out.back() == '!' || out.back() == ' '))
    out.pop_back();
  return out;
}

QuerySketch parse_intent_grammar(std::string_view question, std::string_view clock) {
  QuerySketch s;
  std::string q = normalize_question(question);
  const std::string original = q;
  CivilDate now = CivilDate::parse(clock);

  static const std::regex top_re(R"((?:^| )(top (\d+))(?= |$))");
  std::smatch m;
  bool ranked = false;
  if (std::regex_search(q, m, top_re)) {
    s.limit = std::stoll(m[2].str());
    ranked = true;
    q = squash(q.substr(0, static_cast<size_t>(m.position(1))) + " " +
               q.substr(static_cast<size_t>(m.position(1) + m.length(1))));
  }

  static const std::regex order_re(
      R"((?:^| )((?:ordered|sorted|order|sort) by (.+?)(?: (ascending|asc|descending|desc))?)$)");
  if (std::regex_search(q, m, order_re)) {
    std::string dir = m[3].str();
    s.order_term = OrderTerm{text::trim(m[2].str()), dir == "descending" || dir == "desc"};
    q = text::trim(q.substr(0, static_cast<size_t>(m.position(1))));
  }

  if (auto tm = find_time(q, now)) {
    s.time_window = tm->window;
    q = squash(q.substr(0, tm->pos) + " " + q.substr(tm->pos + tm->len));
  }

  if (!text::starts_with(q, "count of "))
    for (auto* cmd : kCommands)
      if (strip_prefix(q, cmd)) break;
  strip_prefix(q, "me");

  // Split off the filter clause at the first connector word.
  std::string main = q, filters;
  size_t cut = std::string::npos;
  size_t cut_len = 0;
  for (auto* w : kFilterConnectors) {
    size_t p = find_word(q, w);
    if (p != std::string::npos && (cut == std::string::npos || p < cut)) {
      cut = p;
      cut_len = std::strlen(w);
    }
  }
  if (cut != std::string::npos) {
    main = text::trim(q.substr(0, cut));
    filters = text::trim(q.substr(std::min(q.size(), cut + cut_len)));
  }

  auto split_group = [&](std::string& clause) {
    for (std::string_view sep : {" by ", " per ", " for each "}) {
      size_t p = clause.find(sep);
      if (p != std::string::npos) {
        std::string tail = text::trim(clause.substr(p + sep.size()));
        clause = text::trim(clause.substr(0, p));
        return tail;
      }
    }
    return std::string();
  };

  std::string group = split_group(main);
  if (group.empty()) group = split_group(filters);

  // " for accounts" only narrows the entity; keep it for table identification.
  std::string context;
  if (size_t p = main.find(" for "); p != std::string::npos) {
    context = text::trim(main.substr(p + 5));
    main = text::trim(main.substr(0, p));
  }

  AggFunc lead = take_aggregate(main);
  for (auto& part : split_list(main)) {
    std::string phrase = part;
    AggFunc agg = take_aggregate(phrase);
    if (agg == AggFunc::None) agg = lead;
    strip_prefix(phrase, "the");
    if (!phrase.empty()) s.select_terms.push_back({phrase, agg});
  }
  if (!group.empty()) {
    std::string g = group;
    AggFunc gagg = take_aggregate(g);
    if (ranked && gagg != AggFunc::None) {
      // "top 5 members by total balance": rank the entity by the measure.
      std::vector<std::string> entities;
      for (auto& t : s.select_terms) entities.push_back(t.phrase);
      s.select_terms = {{g, gagg}};
      s.group_terms = entities;
      s.order_term = OrderTerm{g, true};
    } else {
      for (auto& part : split_list(group)) s.group_terms.push_back(part);
    }
  }
  std::vector<std::string> bare;
  for (auto& part : split_list(filters)) {
    auto f = parse_filter(part);
    if (f.phrase.empty()) continue;
    if (!f.literal) bare.push_back(f.phrase);
    else s.filter_terms.push_back(std::move(f));
  }
  for (size_t i = 0; i < bare.size(); ++i) {
    if (s.time_window && s.time_window->anchor.empty() && i + 1 == bare.size()) {
      s.time_window->anchor = bare[i];
    } else {
      s.filter_terms.push_back({bare[i], "=", std::nullopt});
    }
  }
  if (!context.empty()) s.filter_terms.push_back({context, "=", std::nullopt});
  // "accounts opened since ...": a trailing participle names the date column.
  if (s.time_window && s.time_window->anchor.empty() && !s.select_terms.empty()) {
    std::string& phrase = s.select_terms.back().phrase;
    size_t sp = phrase.rfind(' ');
    if (sp != std::string::npos && text::ends_with(phrase, "ed")) {
      s.time_window->anchor = phrase.substr(sp + 1);
      phrase = phrase.substr(0, sp);
    }
  }

  for (auto& t : s.select_terms)
    if (t.aggregate != AggFunc::None) s.wants_aggregate = true;
  if (!s.group_terms.empty()) s.wants_aggregate = true;

  if (s.select_terms.empty()) {
    QuerySketch fb;
    fb.select_terms = {{original, AggFunc::None}};
    fb.fallback = true;
    return fb;
  }
  if (s.limit && !s.order_term) {
    for (auto& t : s.select_terms)
      if (t.aggregate != AggFunc::None) {
        s.order_term = OrderTerm{t.phrase, true};
        break;
      }
  }
  return s;
}

std::vector<std::pair<std::string, QuerySketch>> sample_questions(const ContextGraph& graph) {
  std::vector<std::pair<std::string, QuerySketch>> out;
  for (auto& t : graph.tables) {
    for (auto& m : t.columns) {
      if (m.role != ColumnRole::Measure || m.pii) continue;
      for (auto& d : t.columns) {
        if (d.role != ColumnRole::Dimension || d.pii || d.data_type != DataType::Text) continue;
        if (out.size() >= 50) return out;
        std::string measure = text::lower(m.display_name), dim = text::lower(d.display_name);
        QuerySketch s;
        s.select_terms = {{measure, AggFunc::Sum}};
        s.group_terms = {dim};
        s.wants_aggregate = true;
        out.emplace_back(fmt::format("total {} by {}", measure, dim), std::move(s));
      }
    }
  }
  return out;
}

}  // namespace tursio
