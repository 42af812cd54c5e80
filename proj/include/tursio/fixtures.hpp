#pragma once

// Seeded synthetic credit-union database: five CSV tables plus a manifest of
// keys, foreign keys, the decoy inclusion, row counts and PII columns.

#include <cstdint>
#include <filesystem>

#include "tursio/json_io.hpp"

namespace tursio {

inline constexpr uint64_t kDefaultFixtureSeed = 42;

/// Writes member.csv, member_account.csv, loan.csv, card.csv, transaction.csv
/// and manifest.json into `out_dir`; returns the manifest.
json generate_fixture(uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace tursio
