#include "tursio/lexicon.hpp"

#include <fstream>
#include <sstream>

#include "tursio/text.hpp"
#include "tursio/value.hpp"

namespace tursio {

namespace lexicon_data {
extern const std::string_view kAbbreviations;
extern const std::string_view kPiiTerms;
}  // namespace lexicon_data

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("StorageFailure", "cannot read lexicon " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename Fn>
void for_each_line(std::string_view body, Fn fn) {
  size_t pos = 0;
  while (pos <= body.size()) {
    size_t nl = body.find('\n', pos);
    if (nl == std::string_view::npos) nl = body.size();
    std::string line = text::trim(body.substr(pos, nl - pos));
    if (!line.empty() && line[0] != '#') fn(line);
    pos = nl + 1;
  }
}

}  // namespace

Lexicon Lexicon::parse(std::string_view abbreviations_text, std::string_view pii_text) {
  Lexicon lex;
  for_each_line(abbreviations_text, [&](const std::string& line) {
    auto eq = line.find('=');
    if (eq == std::string::npos) return;
    auto key = text::lower(text::trim(line.substr(0, eq)));
    auto value = text::trim(line.substr(eq + 1));
    if (!key.empty() && !value.empty()) lex.abbreviations[key] = value;
  });
  for_each_line(pii_text, [&](const std::string& line) { lex.pii_terms.insert(text::lower(line)); });
  return lex;
}

Lexicon Lexicon::load(const std::string& abbreviations_path, const std::string& pii_path) {
  return parse(read_file(abbreviations_path), read_file(pii_path));
}

const Lexicon& Lexicon::bundled() {
  static const Lexicon lex = parse(lexicon_data::kAbbreviations, lexicon_data::kPiiTerms);
  return lex;
}

bool Lexicon::names_pii(std::string_view identifier) const {
  auto tokens = text::split_identifier(identifier);
  std::string joined = text::join(tokens, "_");
  for (auto& term : pii_terms) {
    auto term_tokens = text::split_identifier(term);
    if (term_tokens.size() == 1) {
      for (auto& t : tokens)
        if (t == term_tokens[0]) return true;
    } else {
      std::string needle = text::join(term_tokens, "_");
      if (joined == needle || joined.find(needle + "_") == 0 ||
          joined.find("_" + needle) != std::string::npos)
        return true;
    }
  }
  return false;
}

}  // namespace tursio
