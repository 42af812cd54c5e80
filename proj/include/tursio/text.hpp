#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tursio::text {

std::string lower(std::string_view s);
std::string upper(std::string_view s);
std::string trim(std::string_view s);

/// Splits an identifier on underscores, spaces, digits boundaries and camelCase; lowercased.
std::vector<std::string> split_identifier(std::string_view name);

/// Splits free text into lowercase word tokens (letters/digits; punctuation separates).
std::vector<std::string> words(std::string_view s);

/// Light suffix stripper so "closed"/"close" and "accounts"/"account" meet.
std::string stem(std::string_view word);

bool is_stopword(std::string_view word);

/// Stemmed, stopword-free token set of free text or an identifier.
std::set<std::string> token_set(std::string_view s);

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

/// FNV-1a, 64 bit. Stable across platforms and runs.
uint64_t fnv1a64(std::string_view data, uint64_t seed = 0xcbf29ce484222325ULL);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

}  // namespace tursio::text
