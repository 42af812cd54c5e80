#include "tursio/grounding.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "tursio/text.hpp"

namespace tursio {

std::string_view to_string(Basis b) {
  switch (b) {
    case Basis::ExactAlias: return "ExactAlias";
    case Basis::TokenOverlap: return "TokenOverlap";
    case Basis::SampleValueHit: return "SampleValueHit";
    case Basis::PrioritizationRule: return "PrioritizationRule";
  }
  return "";
}

std::string_view to_string(PhraseRole r) {
  switch (r) {
    case PhraseRole::Select: return "select";
    case PhraseRole::Group: return "group";
    case PhraseRole::Filter: return "filter";
    case PhraseRole::Time: return "time";
    case PhraseRole::Order: return "order";
  }
  return "";
}

namespace {

constexpr size_t kNone = std::numeric_limits<size_t>::max();

json scored_to_json(const ScoredTarget& s) {
  json j = {{"target", s.target.ref()}, {"score", s.score}, {"basis", to_string(s.basis)}};
  if (s.sample_value) j["value"] = value_to_json(*s.sample_value);
  return j;
}

// Scores this close are ties. Relative, so a common positive factor keeps ties tied.
constexpr double kTieTolerance = 1e-9;

bool same_score(double a, double b) { return std::abs(a - b) <= kTieTolerance * std::max(std::abs(a), std::abs(b)); }

bool clearly_greater(double a, double b) { return a > b && !same_score(a, b); }

auto tie_key(const ScoredTarget& s, const TieBreak& tie) {
  size_t prio = kNone;
  if (s.target.kind == Target::Kind::Column) {
    auto it = std::find(tie.priority.begin(), tie.priority.end(), s.target.column_ref());
    if (it != tie.priority.end()) prio = static_cast<size_t>(it - tie.priority.begin());
  }
  auto t = std::find(tie.table_order.begin(), tie.table_order.end(), s.target.table_id);
  size_t table = t == tie.table_order.end() ? kNone : static_cast<size_t>(t - tie.table_order.begin());
  return std::make_tuple(prio, table, s.target.ref());
}

}  // namespace

json grounding_to_json(const Grounding& g) {
  json alts = json::array();
  for (auto& a : g.alternatives) alts.push_back(scored_to_json(a));
  json j = {{"phrase", g.phrase},
            {"role", to_string(g.role)},
            {"target", g.target ? json(g.target->ref()) : json(nullptr)},
            {"score", g.score},
            {"basis", to_string(g.basis)},
            {"alternatives", alts},
            {"pii_suppressed", g.pii_shadow.has_value()},
            {"aggregate", to_string(g.aggregate)}};
  if (!g.comparator.empty()) j["comparator"] = g.comparator;
  if (g.value) j["value"] = value_to_json(*g.value);
  if (g.upper) j["upper"] = value_to_json(*g.upper);
  if (g.role == PhraseRole::Order) j["direction"] = g.descending ? "desc" : "asc";
  return j;
}

std::vector<ScoredTarget> rank_targets(std::vector<ScoredTarget> candidates, const TieBreak& tie) {
  std::stable_sort(candidates.begin(), candidates.end(), [](auto& a, auto& b) { return a.score > b.score; });
  // each run of near-equal scores, anchored at its highest, is ordered by the tie keys
  for (size_t i = 0; i < candidates.size();) {
    size_t j = i + 1;
    while (j < candidates.size() && same_score(candidates[i].score, candidates[j].score)) ++j;
    std::stable_sort(candidates.begin() + static_cast<std::ptrdiff_t>(i), candidates.begin() + static_cast<std::ptrdiff_t>(j),
                     [&](auto& a, auto& b) { return tie_key(a, tie) < tie_key(b, tie); });
    i = j;
  }
  return candidates;
}

size_t choose_target(const std::vector<ScoredTarget>& candidates, const TieBreak& tie) {
  if (candidates.empty()) throw Error("UngroundedPhrase", "no candidates");
  double top = candidates[0].score;
  for (auto& c : candidates) top = std::max(top, c.score);
  size_t best = kNone;
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (!same_score(candidates[i].score, top)) continue;
    if (best == kNone || tie_key(candidates[i], tie) < tie_key(candidates[best], tie)) best = i;
  }
  return best;
}

std::set<std::string> phrase_tokens(std::string_view phrase) {
  std::set<std::string> out;
  for (auto& w : text::words(phrase)) {
    if (text::is_stopword(w) || is_grammar_word(w)) continue;
    if (std::any_of(w.begin(), w.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      continue;
    out.insert(text::stem(w));
  }
  return out;
}

namespace {

struct Scored {
  ScoredTarget st;
  bool pii = false;
  const ColumnMeta* column = nullptr;
};

std::set<std::string> set_union(std::set<std::string> a, const std::set<std::string>& b) {
  a.insert(b.begin(), b.end());
  return a;
}

std::vector<std::set<std::string>> table_sources(const TableNode& t, const ContextGraph& g) {
  std::vector<std::set<std::string>> out = {text::token_set(t.table_id), text::token_set(t.display_name),
                                            text::token_set(t.alias)};
  for (auto& a : g.annotations)
    if (a.kind == AnnotationKind::Synonym && a.target.kind == AnnotationTarget::Kind::Table &&
        a.target.table_id == t.table_id)
      out.push_back(text::token_set(std::get<SynonymPayload>(a.payload).term));
  return out;
}

/// (score, exact) of phrase tokens against sources, optionally widened by table tokens.
std::pair<double, bool> name_score(const std::set<std::string>& p,
                                   const std::vector<std::set<std::string>>& sources,
                                   const std::set<std::string>* table_tokens) {
  double best = 0.0;
  for (auto& s : sources) {
    if (s.empty()) continue;
    if (s == p) return {1.0, true};
    best = std::max(best, text::jaccard(p, s));
    if (table_tokens) best = std::max(best, text::jaccard(p, set_union(s, *table_tokens)));
  }
  return {best, false};
}

std::vector<Scored> score_all(const std::set<std::string>& p, const std::vector<std::string>& tables,
                              const ContextGraph& graph, bool with_samples) {
  std::vector<Scored> out;
  if (p.empty()) return out;
  for (auto& tid : tables) {
    const TableNode* t = graph.table(tid);
    if (!t) continue;
    auto sources = table_sources(*t, graph);
    auto [ts, texact] = name_score(p, sources, nullptr);
    if (ts > 0) out.push_back({{{Target::Kind::Table, tid, ""}, ts, texact ? Basis::ExactAlias : Basis::TokenOverlap, {}}});
    auto ttoks = set_union(text::token_set(t->table_id), text::token_set(t->display_name));
    for (auto& c : t->columns) {
      std::vector<std::set<std::string>> cs = {text::token_set(c.name), text::token_set(c.display_name)};
      for (auto& a : c.aliases) cs.push_back(text::token_set(a));
      auto [s, exact] = name_score(p, cs, &ttoks);
      if (s > 0)
        out.push_back({{{Target::Kind::Column, tid, c.name}, s, exact ? Basis::ExactAlias : Basis::TokenOverlap, {}},
                       c.pii,
                       &c});
      if (!with_samples || c.pii || c.role != ColumnRole::Dimension || c.data_type != DataType::Text) continue;
      const Value* hit = nullptr;
      size_t hit_size = 0;
      for (auto& v : c.sample_values) {
        auto sv = std::get_if<std::string>(&v);
        if (!sv) continue;
        auto vt = text::token_set(*sv);
        if (vt.empty() || vt.size() <= hit_size) continue;
        if (std::includes(p.begin(), p.end(), vt.begin(), vt.end())) {
          hit = &v;
          hit_size = vt.size();
        }
      }
      if (hit) out.push_back({{{Target::Kind::Column, tid, c.name}, 0.8, Basis::SampleValueHit, *hit}, false, &c});
    }
  }
  for (auto& m : custom_measures(graph)) {
    if (std::find(tables.begin(), tables.end(), m.source_table) == tables.end()) continue;
    // derived sum_/avg_/row_count measures duplicate column + aggregate grounding
    bool system = false;
    for (auto& a : graph.annotations)
      if (a.kind == AnnotationKind::CustomMeasure && a.author == "system" &&
          std::get<CustomMeasurePayload>(a.payload) == m)
        system = true;
    if (system) continue;
    const TableNode* t = graph.table(m.source_table);
    auto ttoks = set_union(text::token_set(t->table_id), text::token_set(t->display_name));
    auto [s, exact] = name_score(p, {text::token_set(m.name)}, &ttoks);
    if (s > 0) out.push_back({{{Target::Kind::Measure, m.source_table, m.name}, s, exact ? Basis::ExactAlias : Basis::TokenOverlap, {}}});
  }
  return out;
}

struct Gate {
  bool tables = true;
  bool measures = true;
  bool samples = true;
  std::function<bool(const ColumnMeta&, bool key)> column = [](const ColumnMeta&, bool) { return true; };
};

bool is_key_column(const ContextGraph& g, const std::set<ColumnRef>& fks, const TableNode& t,
                   const ColumnMeta& c) {
  if (std::find(t.primary_key.begin(), t.primary_key.end(), c.name) != t.primary_key.end()) return true;
  if (fks.count({t.table_id, c.name})) return true;
  (void)g;
  for (auto& tok : text::split_identifier(c.name))
    if (tok == "id" || tok == "key") return true;
  return false;
}

Gate gate_for(PhraseRole role, AggFunc agg, const std::string& comparator, const std::optional<Literal>& lit) {
  Gate g;
  switch (role) {
    case PhraseRole::Select:
      if (agg == AggFunc::Sum || agg == AggFunc::Avg) {
        g.tables = false;
        g.column = [](const ColumnMeta& c, bool key) { return is_numeric(c.data_type) && !key; };
      } else if (agg == AggFunc::Min || agg == AggFunc::Max) {
        g.tables = false;
      }
      break;
    case PhraseRole::Group:
      g.measures = false;
      g.samples = false;
      break;
    case PhraseRole::Filter:
      g.measures = false;
      if (lit) {
        g.tables = false;
        bool range = comparator != "=" && comparator != "<>";
        if (lit->kind == Literal::Kind::Number)
          g.column = [range](const ColumnMeta& c, bool key) { return is_numeric(c.data_type) && !(range && key); };
        else if (lit->kind == Literal::Kind::Date)
          g.column = [](const ColumnMeta& c, bool) { return is_temporal(c.data_type); };
      }
      break;
    case PhraseRole::Time:
      g.tables = false;
      g.measures = false;
      g.column = [](const ColumnMeta& c, bool) { return is_temporal(c.data_type); };
      break;
    case PhraseRole::Order:
      g.tables = false;
      g.samples = false;
      break;
  }
  return g;
}

Value typed_literal(const Literal& lit, const ColumnMeta* col) {
  if (lit.kind == Literal::Kind::Number) {
    if (looks_integer(lit.text)) return *parse_as(lit.text, DataType::Integer);
    return *parse_as(lit.text, DataType::Decimal);
  }
  if (col && lit.kind == Literal::Kind::String) {
    for (auto& v : col->sample_values)
      if (auto s = std::get_if<std::string>(&v); s && text::lower(*s) == text::lower(lit.text)) return *s;
  }
  return lit.text;
}

struct Phrase {
  std::string text;
  PhraseRole role;
  AggFunc agg = AggFunc::None;
  std::string comparator{};
  std::optional<Literal> literal{};
  bool descending = true;
};

class Grounder {
 public:
  Grounder(const ContextGraph& g, const std::vector<std::string>& tables, const KeywordIndex& index)
      : g_(g), tables_(tables), index_(index), fks_(foreign_key_columns(g)), prios_(active_prioritizations(g)) {}

  void run(const Phrase& ph, std::vector<Grounding>& out) { run_tokens(ph, phrase_tokens(ph.text), out, true); }

  const ColumnMeta* column(const Target& t) const {
    return t.kind == Target::Kind::Column ? g_.column(t.column_ref()) : nullptr;
  }

 private:
  std::vector<std::string> candidate_tables(const std::set<std::string>& p) const {
    std::vector<std::string> out = tables_;
    std::set<std::string> extra;
    for (auto& tok : p)
      for (auto& [table, _] : index_.lookup(tok))
        if (std::find(out.begin(), out.end(), table) == out.end()) extra.insert(table);
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
  }

  TieBreak tie_for(const std::set<std::string>& p, const std::vector<std::string>& order) const {
    TieBreak tie;
    tie.table_order = order;
    for (auto& pr : prios_) {
      auto term = text::token_set(pr.term);
      bool overlap = std::any_of(term.begin(), term.end(), [&](auto& t) { return p.count(t) > 0; });
      if (overlap)
        for (auto& c : pr.candidates)
          if (std::find(tie.priority.begin(), tie.priority.end(), c) == tie.priority.end())
            tie.priority.push_back(c);
    }
    return tie;
  }

  [[noreturn]] void ungrounded(const Phrase& ph, const std::vector<ScoredTarget>& alts, const std::string& why) {
    json a = json::array();
    for (size_t i = 0; i < alts.size() && i < 5; ++i) a.push_back(scored_to_json(alts[i]));
    throw DetailedError("UngroundedPhrase", fmt::format("cannot ground '{}': {}", ph.text, why),
                        {{"phrase", ph.text}, {"role", to_string(ph.role)}, {"alternatives", a}});
  }

  void run_tokens(const Phrase& ph, const std::set<std::string>& p, std::vector<Grounding>& out,
                  bool allow_split) {
    auto order = candidate_tables(p);
    auto tie = tie_for(p, order);
    Gate gate = gate_for(ph.role, ph.agg, ph.comparator, ph.literal);
    std::vector<ScoredTarget> named, samples, pii;
    for (auto& s : score_all(p, order, g_, allow_split && gate.samples)) {
      const TableNode* t = g_.table(s.st.target.table_id);
      if (s.st.basis == Basis::SampleValueHit) {
        samples.push_back(s.st);
        continue;
      }
      bool pass = true;
      if (s.st.target.kind == Target::Kind::Table) pass = gate.tables;
      else if (s.st.target.kind == Target::Kind::Measure) pass = gate.measures;
      else pass = gate.column(*s.column, is_key_column(g_, fks_, *t, *s.column));
      if (!pass) continue;
      (s.pii ? pii : named).push_back(s.st);
    }
    auto ranked = rank_targets(named, tie);
    auto ranked_samples = rank_targets(samples, tie);
    double best_named = ranked.empty() ? 0.0 : ranked.front().score;

    if (!ranked_samples.empty() && clearly_greater(ranked_samples.front().score, best_named)) {
      const ScoredTarget& hit = ranked_samples.front();
      Grounding eq;
      eq.phrase = ph.text;
      eq.role = PhraseRole::Filter;
      eq.target = hit.target;
      eq.score = hit.score;
      eq.basis = Basis::SampleValueHit;
      eq.comparator = "=";
      eq.value = hit.sample_value;
      eq.alternatives.assign(ranked_samples.begin() + 1, ranked_samples.end());
      out.push_back(eq);
      auto rest = p;
      for (auto& tok : text::token_set(value_to_string(*hit.sample_value))) rest.erase(tok);
      // "members in the harbor branch": the column name went with the value.
      auto without_column = rest;
      for (auto& tok : text::token_set(hit.target.name)) without_column.erase(tok);
      if (!without_column.empty()) rest = without_column;
      if (ph.role == PhraseRole::Filter && !ph.literal) return;
      if (rest.empty()) {
        if (ph.role == PhraseRole::Select) {
          Grounding sel;
          sel.phrase = ph.text;
          sel.role = PhraseRole::Select;
          sel.target = Target{Target::Kind::Table, hit.target.table_id, ""};
          sel.score = hit.score;
          sel.basis = Basis::SampleValueHit;
          sel.aggregate = ph.agg == AggFunc::None ? AggFunc::None : AggFunc::Count;
          out.push_back(sel);
          return;
        }
        if (ph.role == PhraseRole::Time) return;  // caller picks the default date column
        if (ranked.empty() || best_named < kGroundingFloor) ungrounded(ph, ranked, "no column for the comparison");
        finish(ph, ranked, tie, out);
        return;
      }
      run_tokens(ph, rest, out, false);
      return;
    }

    auto ranked_pii = rank_targets(pii, tie);
    if (!ranked_pii.empty() && ranked_pii.front().score >= kGroundingFloor &&
        clearly_greater(ranked_pii.front().score, best_named)) {
      if (ph.role == PhraseRole::Select) {
        Grounding shadow;
        shadow.phrase = ph.text;
        shadow.role = PhraseRole::Select;
        shadow.pii_shadow = ranked_pii.front().target.column_ref();
        shadow.score = ranked_pii.front().score;
        shadow.aggregate = ph.agg;
        shadow.alternatives = ranked;
        out.push_back(shadow);
        return;
      }
      ungrounded(ph, ranked, "the closest match is a PII column");
    }
    if (ranked.empty() || best_named < kGroundingFloor) ungrounded(ph, ranked, "no candidate scores 0.3 or more");
    finish(ph, ranked, tie, out);
  }

  void finish(const Phrase& ph, const std::vector<ScoredTarget>& ranked, const TieBreak& tie,
              std::vector<Grounding>& out) {
    Grounding gr;
    gr.phrase = ph.text;
    gr.role = ph.role;
    gr.target = ranked.front().target;
    gr.score = ranked.front().score;
    gr.basis = ranked.front().basis;
    gr.alternatives.assign(ranked.begin() + 1, ranked.end());
    if (ranked.size() > 1 && ranked[1].score == ranked[0].score && !tie.priority.empty()) {
      auto a = std::find(tie.priority.begin(), tie.priority.end(), ranked[0].target.column_ref());
      auto b = std::find(tie.priority.begin(), tie.priority.end(), ranked[1].target.column_ref());
      if (a < b) gr.basis = Basis::PrioritizationRule;
    }
    gr.aggregate = ph.agg;
    gr.comparator = ph.comparator;
    gr.descending = ph.descending;
    if (ph.literal) gr.value = typed_literal(*ph.literal, column(*gr.target));
    out.push_back(std::move(gr));
  }

  const ContextGraph& g_;
  const std::vector<std::string>& tables_;
  const KeywordIndex& index_;
  std::set<ColumnRef> fks_;
  std::vector<PrioritizationPayload> prios_;
};

}  // namespace

std::vector<ScoredTarget> score_phrase(std::string_view phrase, const std::vector<std::string>& tables,
                                       const ContextGraph& graph) {
  std::vector<ScoredTarget> out;
  for (auto& s : score_all(phrase_tokens(phrase), tables, graph, true))
    if (!s.pii) out.push_back(s.st);
  return out;
}

std::vector<Grounding> ground(const QuerySketch& sketch, const std::vector<std::string>& tables,
                              const ContextGraph& graph, const KeywordIndex& index) {
  std::vector<Grounding> out;
  Grounder g(graph, tables, index);
  for (auto& s : sketch.select_terms) g.run({s.phrase, PhraseRole::Select, s.aggregate, "", std::nullopt}, out);
  for (auto& s : sketch.group_terms) g.run({s, PhraseRole::Group}, out);
  for (auto& f : sketch.filter_terms) g.run({f.phrase, PhraseRole::Filter, AggFunc::None, f.comparator, f.literal}, out);

  if (sketch.time_window) {
    const auto& w = sketch.time_window;
    size_t before = out.size();
    if (!phrase_tokens(w->anchor).empty()) g.run({w->anchor, PhraseRole::Time}, out);
    bool has_time = false;
    for (size_t i = before; i < out.size(); ++i)
      if (out[i].role == PhraseRole::Time) {
        out[i].comparator = "range";
        out[i].value = w->start;
        out[i].upper = w->end;
        has_time = true;
      }
    if (!has_time) {
      // No anchor: the first date column of the first selected table.
      std::vector<std::string> order;
      for (auto& gr : out)
        if (gr.role == PhraseRole::Select && gr.target) order.push_back(gr.target->table_id);
      order.insert(order.end(), tables.begin(), tables.end());
      for (auto& tid : order) {
        const TableNode* t = graph.table(tid);
        if (!t || has_time) continue;
        for (auto& c : t->columns) {
          if (c.pii || !is_temporal(c.data_type)) continue;
          Grounding gr;
          gr.phrase = w->label;
          gr.role = PhraseRole::Time;
          gr.target = Target{Target::Kind::Column, tid, c.name};
          gr.score = kGroundingFloor;
          gr.comparator = "range";
          gr.value = w->start;
          gr.upper = w->end;
          out.push_back(gr);
          has_time = true;
          break;
        }
      }
      if (!has_time)
        throw DetailedError("UngroundedPhrase", fmt::format("no date column for '{}'", w->label),
                            {{"phrase", w->label}, {"role", "time"}, {"alternatives", json::array()}});
    }
  }

  if (sketch.order_term) {
    bool reused = false;
    for (auto& gr : out) {
      if (gr.role == PhraseRole::Select && gr.phrase == sketch.order_term->phrase && gr.target) {
        Grounding o = gr;
        o.role = PhraseRole::Order;
        o.descending = sketch.order_term->descending;
        o.alternatives.clear();
        out.push_back(o);
        reused = true;
        break;
      }
    }
    if (!reused) {
      Phrase ph{sketch.order_term->phrase, PhraseRole::Order};
      ph.descending = sketch.order_term->descending;
      g.run(ph, out);
    }
  }
  return out;
}

}  // namespace tursio
