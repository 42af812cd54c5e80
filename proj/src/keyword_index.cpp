#include "tursio/keyword_index.hpp"

#include <algorithm>
#include <cctype>
#include <fmt/format.h>
#include <functional>
#include <numeric>

#include "tursio/intent.hpp"
#include "tursio/text.hpp"

namespace tursio {

void KeywordIndex::add(const std::string& token, const std::string& table_id, double weight,
                       bool table_level) {
  auto& e = map_[token][table_id];
  if (table_level) e.table_weight = std::max(e.table_weight, weight);
  else e.column_weight = std::max(e.column_weight, weight);
}

const std::map<std::string, IndexEntry>& KeywordIndex::lookup(const std::string& token) const {
  static const std::map<std::string, IndexEntry> empty;
  auto it = map_.find(token);
  return it == map_.end() ? empty : it->second;
}

std::map<std::string, double> KeywordIndex::weights(const std::string& token) const {
  std::map<std::string, double> out;
  for (auto& [table, e] : lookup(token)) out[table] = std::max(e.table_weight, e.column_weight);
  return out;
}

std::set<ColumnRef> foreign_key_columns(const ContextGraph& graph) {
  std::set<ColumnRef> out;
  for (auto& e : graph.joins) {
    for (const JoinSide* side : {&e.left, &e.right}) {
      const TableNode* t = graph.table(side->table_id);
      for (auto& c : side->columns)
        if (!t || std::find(t->primary_key.begin(), t->primary_key.end(), c) == t->primary_key.end())
          out.insert({side->table_id, c});
    }
  }
  return out;
}

namespace {

bool alphabetic(const std::string& token) {
  return !token.empty() && std::all_of(token.begin(), token.end(), [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0;
  });
}

void add_text(KeywordIndex& index, std::string_view text, const std::string& table, double weight,
              bool table_level) {
  for (auto& tok : text::token_set(text))
    if (alphabetic(tok)) index.add(tok, table, weight, table_level);
}

}  // namespace

KeywordIndex build_keyword_index(const ContextGraph& graph) {
  KeywordIndex index;
  auto fks = foreign_key_columns(graph);
  for (auto& t : graph.tables) {
    add_text(index, t.table_id, t.table_id, 1.0, true);
    add_text(index, t.physical_name, t.table_id, 1.0, true);
    add_text(index, t.alias, t.table_id, 1.0, true);
    add_text(index, t.display_name, t.table_id, 1.0, true);
    add_text(index, t.description, t.table_id, 0.5, true);
    for (auto& c : t.columns) {
      if (c.pii || fks.count({t.table_id, c.name})) continue;
      add_text(index, c.name, t.table_id, 1.0, false);
      add_text(index, c.display_name, t.table_id, 1.0, false);
      for (auto& a : c.aliases) add_text(index, a, t.table_id, 1.0, false);
      add_text(index, c.description, t.table_id, 0.5, false);
      if (c.role == ColumnRole::Dimension) {
        size_t n = 0;
        for (auto& v : c.sample_values) {
          if (n++ >= 50) break;
          if (auto s = std::get_if<std::string>(&v)) add_text(index, *s, t.table_id, 0.7, false);
        }
      }
    }
  }
  for (auto& a : graph.annotations) {
    if (a.kind == AnnotationKind::Synonym && a.target.kind == AnnotationTarget::Kind::Table)
      add_text(index, std::get<SynonymPayload>(a.payload).term, a.target.table_id, 1.0, true);
    if (a.kind == AnnotationKind::CustomMeasure && a.author != "system") {
      auto& p = std::get<CustomMeasurePayload>(a.payload);
      add_text(index, p.name, p.source_table, 1.0, false);
    }
  }
  return index;
}

std::vector<std::string> content_tokens(const std::vector<std::string>& phrases) {
  std::vector<std::string> out;
  for (auto& p : phrases) {
    for (auto& w : text::words(p)) {
      if (text::is_stopword(w) || is_grammar_word(w) || !alphabetic(w)) continue;
      out.push_back(text::stem(w));
    }
  }
  return out;
}

namespace {

struct EdgeKey {
  static auto of(const JoinEdge& e) {
    return std::tie(e.left.table_id, e.left.columns, e.right.table_id, e.right.columns);
  }
};

/// Maximum spanning tree over `vertices` by confidence; nullopt when disconnected.
std::optional<std::vector<JoinEdge>> spanning_tree(const ContextGraph& graph,
                                                   const std::vector<std::string>& vertices) {
  std::map<std::string, size_t> pos;
  for (size_t i = 0; i < vertices.size(); ++i) pos[vertices[i]] = i;
  std::vector<const JoinEdge*> edges;
  for (auto& e : graph.joins)
    if (pos.count(e.left.table_id) && pos.count(e.right.table_id) && e.left.table_id != e.right.table_id)
      edges.push_back(&e);
  std::sort(edges.begin(), edges.end(), [](auto* a, auto* b) {
    if (a->confidence != b->confidence) return a->confidence > b->confidence;
    return EdgeKey::of(*a) < EdgeKey::of(*b);
  });
  std::vector<size_t> parent(vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<size_t(size_t)> find = [&](size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  std::vector<JoinEdge> tree;
  for (auto* e : edges) {
    size_t a = find(pos[e->left.table_id]), b = find(pos[e->right.table_id]);
    if (a == b) continue;
    parent[a] = b;
    tree.push_back(*e);
  }
  if (tree.size() + 1 != vertices.size()) return std::nullopt;
  std::sort(tree.begin(), tree.end(), [](auto& a, auto& b) { return EdgeKey::of(a) < EdgeKey::of(b); });
  return tree;
}

double bottleneck(const std::vector<JoinEdge>& edges) {
  double m = 1.0;
  for (auto& e : edges) m = std::min(m, e.confidence);
  return m;
}

/// Greedy fallback for large graphs: attach the nearest terminal by BFS.
JoinPath greedy_connect(const ContextGraph& graph, const std::vector<std::string>& terminals) {
  std::set<std::string> in_tree = {terminals.front()};
  std::vector<std::string> added;
  for (size_t i = 1; i < terminals.size(); ++i) {
    if (in_tree.count(terminals[i])) continue;
    std::map<std::string, std::string> prev;
    std::vector<std::string> frontier(in_tree.begin(), in_tree.end());
    std::set<std::string> seen(in_tree.begin(), in_tree.end());
    bool found = false;
    while (!frontier.empty() && !found) {
      std::vector<std::string> next;
      for (auto& u : frontier) {
        std::vector<std::string> nbrs;
        for (auto& e : graph.joins)
          if (e.touches(u)) nbrs.push_back(e.other(u));
        std::sort(nbrs.begin(), nbrs.end());
        for (auto& v : nbrs) {
          if (seen.count(v)) continue;
          seen.insert(v);
          prev[v] = u;
          if (v == terminals[i]) found = true;
          next.push_back(v);
        }
      }
      frontier = std::move(next);
    }
    if (!found) throw Error("DisconnectedModels", fmt::format("no join path reaches {}", terminals[i]));
    for (std::string v = terminals[i]; !in_tree.count(v); v = prev[v]) {
      in_tree.insert(v);
      if (std::find(terminals.begin(), terminals.end(), v) == terminals.end()) added.push_back(v);
    }
  }
  JoinPath path;
  path.tables = terminals;
  std::sort(added.begin(), added.end());
  path.tables.insert(path.tables.end(), added.begin(), added.end());
  auto tree = spanning_tree(graph, path.tables);
  if (!tree) throw Error("DisconnectedModels", "selected tables are not connected");
  path.edges = std::move(*tree);
  return path;
}

}  // namespace

JoinPath connect_tables(const ContextGraph& graph, const std::vector<std::string>& terminals) {
  JoinPath path;
  if (terminals.empty()) return path;
  std::set<std::string> term_set(terminals.begin(), terminals.end());
  std::vector<std::string> others;
  for (auto& t : graph.tables)
    if (!term_set.count(t.table_id)) others.push_back(t.table_id);
  if (others.size() > 16) return greedy_connect(graph, terminals);

  for (size_t k = 0; k <= others.size(); ++k) {
    std::optional<std::vector<JoinEdge>> best;
    std::vector<std::string> best_added;
    // Combinations of `others` of size k, in lexicographic order.
    std::vector<size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      std::vector<std::string> vertices = terminals;
      std::vector<std::string> added;
      for (size_t i : idx) added.push_back(others[i]);
      vertices.insert(vertices.end(), added.begin(), added.end());
      if (auto tree = spanning_tree(graph, vertices)) {
        if (!best || bottleneck(*tree) > bottleneck(*best)) {
          best = std::move(tree);
          best_added = added;
        }
      }
      // advance combination
      size_t i = k;
      while (i > 0 && idx[i - 1] == others.size() - k + i - 1) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    if (best) {
      path.tables = terminals;
      path.tables.insert(path.tables.end(), best_added.begin(), best_added.end());
      path.edges = std::move(*best);
      return path;
    }
  }
  throw Error("DisconnectedModels",
              fmt::format("no join path connects {}", text::join(terminals, ", ")));
}

TableSelection identify_tables(const std::vector<std::string>& phrases, const ContextGraph& graph,
                               const KeywordIndex& index) {
  TableSelection sel;
  for (auto& tok : content_tokens(phrases)) {
    const auto& hits = index.lookup(tok);
    size_t k = 0;
    for (auto& [_, e] : hits)
      if (e.column_weight > 0) ++k;
    for (auto& [table, e] : hits) {
      double w = e.table_weight;
      if (e.column_weight > 0) w = std::max(w, e.column_weight / static_cast<double>(k));
      sel.weights[table] += w;
    }
  }
  std::vector<std::pair<double, std::string>> ranked;
  for (auto& [table, w] : sel.weights)
    if (w >= 1.0 - 1e-9) ranked.emplace_back(-w, table);
  std::sort(ranked.begin(), ranked.end());
  for (auto& [_, t] : ranked) sel.tables.push_back(t);
  if (sel.tables.empty())
    throw Error("NoTableMatch", "no table matches the question vocabulary");
  sel.path = connect_tables(graph, sel.tables);
  return sel;
}

}  // namespace tursio
