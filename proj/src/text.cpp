#include "tursio/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace tursio::text {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_identifier(std::string_view name) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(lower(cur));
    cur.clear();
  };
  for (size_t i = 0; i < name.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(name[i]);
    if (!std::isalnum(c)) {
      flush();
      continue;
    }
    if (!cur.empty()) {
      unsigned char prev = static_cast<unsigned char>(cur.back());
      bool lower_to_upper = std::islower(prev) && std::isupper(c);
      // "HTTPServer" -> HTTP, Server
      bool acronym_end = std::isupper(prev) && std::isupper(c) && i + 1 < name.size() &&
                         std::islower(static_cast<unsigned char>(name[i + 1]));
      bool alpha_digit = std::isalpha(prev) != 0 && std::isdigit(c) != 0;
      bool digit_alpha = std::isdigit(prev) != 0 && std::isalpha(c) != 0;
      if (lower_to_upper || acronym_end || alpha_digit || digit_alpha) flush();
    }
    cur.push_back(static_cast<char>(c));
  }
  flush();
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string stem(std::string_view word) {
  std::string w = lower(word);
  if (w.size() <= 3) return w;
  if (ends_with(w, "ies") && w.size() > 4) {
    w.resize(w.size() - 3);
    w += 'y';
  } else if (ends_with(w, "sses")) {
    w.resize(w.size() - 2);
  } else if (w.back() == 's' && !ends_with(w, "ss") && !ends_with(w, "us") &&
             !ends_with(w, "is")) {
    w.pop_back();
  }
  if (ends_with(w, "ing") && w.size() > 5) {
    w.resize(w.size() - 3);
  } else if (ends_with(w, "ed") && w.size() > 4) {
    w.resize(w.size() - 2);
  }
  if (w.size() > 3 && w.back() == 'e') w.pop_back();
  return w;
}

bool is_stopword(std::string_view word) {
  static const std::array<std::string_view, 61> kStop = {
      "a",     "an",   "the",  "of",    "for",   "in",    "on",    "at",     "to",
      "from",  "with", "by",   "and",   "or",    "which", "what",  "who",    "whose",
      "have",  "has",  "had",  "is",    "are",   "was",   "were",  "be",     "been",
      "got",   "get",  "list", "show",  "me",    "give",  "find",  "all",    "each",
      "per",   "e",    "g",    "eg",    "table", "their", "there",  "this",
      "that",  "these", "those", "do",  "does",  "did",   "any",   "some",   "please",
      "i",     "we",   "my",   "our",   "as",    "its",   "it",    "display"};
  return std::find(kStop.begin(), kStop.end(), word) != kStop.end();
}

std::set<std::string> token_set(std::string_view s) {
  std::set<std::string> out;
  for (auto& part : split_identifier(s)) {
    if (is_stopword(part)) continue;
    out.insert(stem(part));
  }
  return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  size_t inter = 0;
  for (auto& x : a) inter += b.count(x);
  size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

uint64_t fnv1a64(std::string_view data, uint64_t seed) {
  uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace tursio::text
