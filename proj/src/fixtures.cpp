#include "tursio/fixtures.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <fmt/format.h>
#include <fstream>
#include <random>

#include "tursio/csv.hpp"
#include "tursio/intent.hpp"

namespace tursio {

namespace fs = std::filesystem;

namespace {

constexpr std::array kFirstNames = {"Ava",   "Ben",  "Chloe", "Dev",   "Elena", "Farid", "Grace", "Hiro",
                                    "Ines",  "Jon",  "Kira",  "Liam",  "Maya",  "Noah",  "Olga",  "Priya",
                                    "Quinn", "Rosa", "Sam",   "Tariq", "Uma",   "Vic",   "Wen",   "Yara"};
constexpr std::array kLastNames = {"Abbott", "Baker",  "Chen",   "Diaz",   "Evans",  "Fischer", "Garcia",
                                   "Hughes", "Ito",    "Jensen", "Khan",   "Lopez",  "Moreau",  "Nakamura",
                                   "Okafor", "Patel",  "Quist",  "Rossi",  "Silva",  "Tanaka"};
constexpr std::array kBranches = {"Downtown", "Eastside", "Harbor",    "Hillcrest", "Lakeview",
                                  "Midtown",  "Northgate", "Riverside", "Southpark", "Westfield"};
constexpr std::array kCategories = {"Checking", "Savings", "Certificate", "Money Market", "IRA"};
constexpr std::array kTiers = {"STD", "PRM", "BIZ"};
constexpr std::array kCardTypes = {"STD", "PRM", "BIZ", "SEC"};
constexpr std::array kTxnTypes = {"DEP", "WDL", "FEE", "TRF"};

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}
  /// Uniform-ish integer in [lo, hi] by modulo reduction (stable across platforms).
  int64_t range(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(gen_() % static_cast<uint64_t>(hi - lo + 1));
  }
  bool chance(int percent) { return range(0, 99) < percent; }
  template <typename A>
  const char* pick(const A& a) {
    return a[static_cast<size_t>(range(0, static_cast<int64_t>(a.size()) - 1))];
  }

 private:
  std::mt19937_64 gen_;
};

std::string cents(int64_t c) { return fmt::format("{}.{:02}", c / 100, c % 100); }

const CivilDate kEpoch{2015, 1, 1};
const CivilDate kHorizon{2025, 3, 31};

int days_between(const CivilDate& a, const CivilDate& b) {
  using namespace std::chrono;
  auto days = [](const CivilDate& d) {
    return sys_days{year{d.year} / month{static_cast<unsigned>(d.month)} / day{static_cast<unsigned>(d.day)}};
  };
  return static_cast<int>((days(b) - days(a)).count());
}

CivilDate random_date(Rng& rng, const CivilDate& lo, const CivilDate& hi) {
  return lo.add_days(static_cast<int>(rng.range(0, days_between(lo, hi))));
}

struct Table {
  std::string file;
  std::vector<std::string> header;
  std::vector<csv::Row> rows;
};

void write_table(const fs::path& dir, const Table& t) {
  std::ofstream out(dir / t.file, std::ios::binary);
  if (!out) throw Error("StorageFailure", "cannot write " + (dir / t.file).string());
  csv::Row header(t.header.begin(), t.header.end());
  out << csv::format_row(header) << "\n";
  for (auto& r : t.rows) out << csv::format_row(r) << "\n";
}

csv::Field opt(const std::optional<CivilDate>& d) {
  if (!d) return std::nullopt;
  return d->iso();
}

}  // namespace

json generate_fixture(uint64_t seed, const fs::path& out_dir) {
  Rng rng(seed);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("StorageFailure", "cannot create " + out_dir.string());

  constexpr int kMembers = 1200, kAccounts = 2000, kLoans = 700, kCards = 900, kTxns = 8000;

  Table member{"member.csv", {"member_id", "first_name", "last_name", "ssn", "email", "birth_date", "join_date", "branch"}, {}};
  std::vector<CivilDate> joined;
  for (int i = 0; i < kMembers; ++i) {
    int64_t id = 10001 + i;
    std::string first = rng.pick(kFirstNames), last = rng.pick(kLastNames);
    std::string ssn = fmt::format("{:03}-{:02}-{:04}", 100 + (id * 7) % 800, (id * 13) % 89 + 10, id % 10000);
    csv::Field email;
    if (!rng.chance(8)) email = fmt::format("{}.{}{}@example.org", first, last, id);
    CivilDate birth = random_date(rng, {1950, 1, 1}, {2003, 12, 31});
    CivilDate join = random_date(rng, kEpoch, {2024, 6, 30});
    joined.push_back(join);
    member.rows.push_back({std::to_string(id), first, last, ssn, email, birth.iso(), join.iso(), std::string(rng.pick(kBranches))});
  }

  Table account{"member_account.csv",
                {"account_id", "member_id", "product_category", "open_date", "close_date", "balance", "status", "retention_days"},
                {}};
  std::vector<CivilDate> account_open;
  std::vector<std::optional<CivilDate>> account_close;
  for (int i = 0; i < kAccounts; ++i) {
    int64_t id = 200001 + i;
    // every member holds at least one account
    int m = i < kMembers ? i : static_cast<int>(rng.range(0, kMembers - 1));
    CivilDate open = random_date(rng, joined[static_cast<size_t>(m)], {2024, 9, 30});
    std::optional<CivilDate> close;
    if (rng.chance(25)) close = random_date(rng, open.add_days(30), kHorizon);
    int64_t balance = close ? 0 : rng.range(0, 5000000);
    account_open.push_back(open);
    account_close.push_back(close);
    account.rows.push_back({std::to_string(id), std::to_string(10001 + m), std::string(rng.pick(kCategories)), open.iso(),
                            opt(close), cents(balance), std::string(rng.pick(kTiers)),
                            std::to_string(rng.range(30, 3650))});
  }

  auto account_index = [&] { return static_cast<size_t>(rng.range(0, kAccounts - 1)); };

  Table loan{"loan.csv", {"loan_id", "account_id", "amount", "status", "delinquent_days", "open_date", "close_date"}, {}};
  for (int i = 0; i < kLoans; ++i) {
    size_t a = account_index();
    CivilDate open = random_date(rng, account_open[a], kHorizon.add_days(-60));
    int64_t roll = rng.range(0, 99);
    std::string status = roll < 55 ? "CURRENT" : roll < 75 ? "DELINQUENT" : roll < 95 ? "PAID" : "VOID";
    int64_t delinquent = status == "DELINQUENT" ? rng.range(1, 180) : 0;
    std::optional<CivilDate> close;
    if (status == "PAID" || status == "VOID") close = random_date(rng, open.add_days(30), kHorizon);
    loan.rows.push_back({std::to_string(300001 + i), std::to_string(200001 + static_cast<int64_t>(a)),
                         cents(rng.range(50000, 4000000)), status, std::to_string(delinquent), open.iso(), opt(close)});
  }

  Table card{"card.csv", {"card_id", "account_id", "card_type", "credit_limit", "issue_date", "close_date"}, {}};
  for (int i = 0; i < kCards; ++i) {
    size_t a = account_index();
    CivilDate issue = random_date(rng, account_open[a], kHorizon.add_days(-60));
    std::optional<CivilDate> close;
    if (rng.chance(15)) close = random_date(rng, issue.add_days(30), kHorizon);
    card.rows.push_back({std::to_string(400001 + i), std::to_string(200001 + static_cast<int64_t>(a)),
                         std::string(rng.pick(kCardTypes)), cents(rng.range(50000, 2500000)), issue.iso(), opt(close)});
  }

  struct Txn {
    CivilDate date;
    size_t account;
    int64_t amount;
    std::string type;
  };
  std::vector<Txn> txns;
  for (int i = 0; i < kTxns; ++i) {
    // the first pass gives every account a transaction
    size_t a = i < kAccounts ? static_cast<size_t>(i) : account_index();
    CivilDate hi = account_close[a].value_or(kHorizon);
    CivilDate date = random_date(rng, account_open[a], hi);
    std::string type = rng.pick(kTxnTypes);
    int64_t amount = type == "FEE" ? rng.range(100, 5000) : rng.range(500, 500000);
    txns.push_back({date, a, amount, type});
  }
  std::stable_sort(txns.begin(), txns.end(), [](const Txn& x, const Txn& y) {
    return std::tie(x.date, x.account) < std::tie(y.date, y.account);
  });
  Table transaction{"transaction.csv", {"txn_id", "account_id", "txn_date", "amount", "txn_type"}, {}};
  for (size_t i = 0; i < txns.size(); ++i)
    transaction.rows.push_back({std::to_string(500001 + static_cast<int64_t>(i)),
                                std::to_string(200001 + static_cast<int64_t>(txns[i].account)), txns[i].date.iso(),
                                cents(txns[i].amount), txns[i].type});

  for (auto* t : {&member, &account, &loan, &card, &transaction}) write_table(out_dir, *t);

  json manifest = {
      {"seed", seed},
      {"tables",
       {{{"table", "MEMBER"}, {"file", member.file}, {"rows", member.rows.size()}, {"primary_key", "member_id"}},
        {{"table", "MEMBER_ACCOUNT"}, {"file", account.file}, {"rows", account.rows.size()}, {"primary_key", "account_id"}},
        {{"table", "LOAN"}, {"file", loan.file}, {"rows", loan.rows.size()}, {"primary_key", "loan_id"}},
        {{"table", "CARD"}, {"file", card.file}, {"rows", card.rows.size()}, {"primary_key", "card_id"}},
        {{"table", "TRANSACTION"}, {"file", transaction.file}, {"rows", transaction.rows.size()}, {"primary_key", "txn_id"}}}},
      {"foreign_keys",
       {{{"from", "MEMBER_ACCOUNT.member_id"}, {"to", "MEMBER.member_id"}},
        {{"from", "LOAN.account_id"}, {"to", "MEMBER_ACCOUNT.account_id"}},
        {{"from", "CARD.account_id"}, {"to", "MEMBER_ACCOUNT.account_id"}},
        {{"from", "TRANSACTION.account_id"}, {"to", "MEMBER_ACCOUNT.account_id"}}}},
      {"decoys", {{{"from", "MEMBER_ACCOUNT.status"}, {"to", "CARD.card_type"}, {"kind", "value inclusion, no name evidence"}}}},
      {"pii_columns", {"MEMBER.ssn", "MEMBER.email", "MEMBER.birth_date"}},
      {"close_date_tables", {"CARD", "LOAN", "MEMBER_ACCOUNT"}}};
  std::ofstream(out_dir / "manifest.json", std::ios::binary) << manifest.dump(2) << "\n";
  return manifest;
}

}  // namespace tursio
