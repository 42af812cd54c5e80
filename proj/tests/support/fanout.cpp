#include "fanout.hpp"

#include <cmath>
#include <set>

#include "oracle.hpp"

namespace fs = std::filesystem;

namespace oracle {

namespace {

struct Account {
  std::string member_id, category, branch;
  int64_t balance = 0;
  int64_t txn_count = 0, txn_sum = 0;
  int64_t loan_count = 0, loan_sum = 0;
  int64_t card_count = 0, card_limit = 0;
};

struct Totals {
  int64_t a = 0, b = 0, n = 0;
};

std::map<std::string, Account> accounts(const fs::path& dir) {
  Table members = read_table(dir / "member.csv");
  std::map<std::string, std::string> branch;
  for (size_t i = 0; i < members.rows.size(); ++i) branch[members.at(i, "member_id")] = members.at(i, "branch");
  Table ma = read_table(dir / "member_account.csv");
  std::map<std::string, Account> out;
  for (size_t i = 0; i < ma.rows.size(); ++i) {
    Account& a = out[ma.at(i, "account_id")];
    a.member_id = ma.at(i, "member_id");
    a.category = ma.at(i, "product_category");
    a.branch = branch.at(a.member_id);
    a.balance = cents(ma.at(i, "balance"));
  }
  Table txn = read_table(dir / "transaction.csv");
  for (size_t i = 0; i < txn.rows.size(); ++i) {
    Account& a = out.at(txn.at(i, "account_id"));
    a.txn_count += 1;
    a.txn_sum += cents(txn.at(i, "amount"));
  }
  Table loan = read_table(dir / "loan.csv");
  for (size_t i = 0; i < loan.rows.size(); ++i) {
    Account& a = out.at(loan.at(i, "account_id"));
    a.loan_count += 1;
    a.loan_sum += cents(loan.at(i, "amount"));
  }
  Table card = read_table(dir / "card.csv");
  for (size_t i = 0; i < card.rows.size(); ++i) {
    Account& a = out.at(card.at(i, "account_id"));
    a.card_count += 1;
    a.card_limit += cents(card.at(i, "credit_limit"));
  }
  return out;
}

/// Groups accounts passing `keep` by `key`, summing the two picked quantities.
std::map<std::string, Totals> group(const std::map<std::string, Account>& accts,
                                    const std::function<std::string(const Account&)>& key,
                                    const std::function<bool(const Account&)>& keep,
                                    const std::function<int64_t(const Account&)>& first,
                                    const std::function<int64_t(const Account&)>& second) {
  std::map<std::string, Totals> out;
  for (auto& [_, a] : accts) {
    if (!keep(a)) continue;
    Totals& t = out[key(a)];
    t.a += first(a);
    t.b += second(a);
    t.n += 1;
  }
  return out;
}

}  // namespace

std::vector<FanoutCase> fanout_cases(const fs::path& fixture) {
  auto accts = accounts(fixture);
  auto by_member = [](const Account& a) { return a.member_id; };
  auto by_category = [](const Account& a) { return a.category; };
  auto by_branch = [](const Account& a) { return a.branch; };
  auto balance = [](const Account& a) { return a.balance; };
  auto has_txn = [](const Account& a) { return a.txn_count > 0; };
  auto has_loan = [](const Account& a) { return a.loan_count > 0; };
  auto has_card = [](const Account& a) { return a.card_count > 0; };

  std::vector<FanoutCase> cases;
  auto add = [&](std::string q, std::string key, std::vector<std::pair<std::string, Measure>> measures,
                 const std::map<std::string, Totals>& totals, bool mean_first) {
    FanoutCase c{std::move(q), std::move(key), std::move(measures), {}};
    for (auto& [k, t] : totals) {
      double first = mean_first ? static_cast<double>(t.a) / 100.0 / static_cast<double>(t.n)
                                : static_cast<double>(t.a);
      c.expected[k] = {first, static_cast<double>(t.b)};
    }
    cases.push_back(std::move(c));
  };

  add("total balance and total transaction amount per member", "member_id",
      {{"sum_balance", Measure::Cents}, {"sum_amount", Measure::Cents}},
      group(accts, by_member, has_txn, balance, [](const Account& a) { return a.txn_sum; }), false);
  add("total balance and number of transactions by product category", "product_category",
      {{"sum_balance", Measure::Cents}, {"count_transaction", Measure::Count}},
      group(accts, by_category, has_txn, balance, [](const Account& a) { return a.txn_count; }), false);
  add("total balance and total loan amount by branch", "branch",
      {{"sum_balance", Measure::Cents}, {"sum_amount", Measure::Cents}},
      group(accts, by_branch, has_loan, balance, [](const Account& a) { return a.loan_sum; }), false);
  add("total balance and number of cards per member", "member_id",
      {{"sum_balance", Measure::Cents}, {"count_card", Measure::Count}},
      group(accts, by_member, has_card, balance, [](const Account& a) { return a.card_count; }), false);
  add("average balance and total transaction amount by product category", "product_category",
      {{"avg_balance", Measure::Mean}, {"sum_amount", Measure::Cents}},
      group(accts, by_category, has_txn, balance, [](const Account& a) { return a.txn_sum; }), true);
  add("total loan amount and total credit limit by product category", "product_category",
      {{"sum_amount", Measure::Cents}, {"sum_credit_limit", Measure::Cents}},
      group(
          accts, by_category, [&](const Account& a) { return has_loan(a) && has_card(a); },
          [](const Account& a) { return a.loan_sum; }, [](const Account& a) { return a.card_limit; }),
      false);
  return cases;
}

std::string compare_fanout(const FanoutCase& c, const tursio::ResultSet& rows) {
  auto index = [&](const std::string& name) -> long {
    for (size_t i = 0; i < rows.columns.size(); ++i)
      if (rows.columns[i] == name) return static_cast<long>(i);
    return -1;
  };
  long key = index(c.key_column);
  if (key < 0) return "missing column " + c.key_column;
  std::vector<long> cols;
  for (auto& [name, _] : c.measures) {
    cols.push_back(index(name));
    if (cols.back() < 0) return "missing column " + name;
  }
  if (rows.rows.size() != c.expected.size())
    return "row count " + std::to_string(rows.rows.size()) + " != " + std::to_string(c.expected.size());
  std::set<std::string> seen;
  for (auto& r : rows.rows) {
    std::string k = tursio::value_to_string(r[key]);
    auto it = c.expected.find(k);
    if (it == c.expected.end()) return "unexpected key " + k;
    if (!seen.insert(k).second) return "duplicate key " + k;
    for (size_t m = 0; m < cols.size(); ++m) {
      const tursio::Value& v = r[cols[m]];
      double got = std::holds_alternative<int64_t>(v) ? static_cast<double>(std::get<int64_t>(v))
                   : std::holds_alternative<double>(v) ? std::get<double>(v)
                                                       : NAN;
      double want = it->second[m];
      bool ok = false;
      switch (c.measures[m].second) {
        case Measure::Cents: ok = round_cents(got) == static_cast<int64_t>(want); break;
        case Measure::Count: ok = got == want; break;
        case Measure::Mean: ok = std::fabs(got - want) <= 1e-6 * std::max(1.0, std::fabs(want)); break;
      }
      if (!ok)
        return k + "." + c.measures[m].first + ": got " + tursio::value_to_string(v) + ", want " +
               std::to_string(c.measures[m].second == Measure::Cents ? want / 100.0 : want);
    }
  }
  return "";
}

}  // namespace oracle
