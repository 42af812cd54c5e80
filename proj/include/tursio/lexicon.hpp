#pragma once

// Abbreviation and PII-term lexicons. The bundled copies are compiled in from
// data/lexicons; operators can load extended files with the same format.

#include <map>
#include <set>
#include <string>
#include <string_view>

namespace tursio {

struct Lexicon {
  std::map<std::string, std::string> abbreviations;  // lowercase abbrev -> expansion
  std::set<std::string> pii_terms;                   // lowercase identifier fragments

  /// Parses "abbrev=expansion" lines and "term" lines; '#' starts a comment.
  static Lexicon parse(std::string_view abbreviations_text, std::string_view pii_text);
  static Lexicon load(const std::string& abbreviations_path, const std::string& pii_path);
  static const Lexicon& bundled();

  /// True when the identifier contains a PII term, either as a whole token
  /// sequence ("tax_id") or as a single token ("member_ssn").
  bool names_pii(std::string_view identifier) const;
};

}  // namespace tursio
