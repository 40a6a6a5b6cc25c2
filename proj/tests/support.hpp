#pragma once

// Helpers shared by the unit tests and the acceptance run: random ULF trees,
// an exhaustive Smatch matcher, and paths to the shipped data.

#include <functional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ulf/core.hpp"

namespace ulf::testing {

inline std::string data_path(const std::string& name) { return std::string(ULF_SOURCE_DIR) + "/data/" + name; }
inline std::string source_path(const std::string& rel) { return std::string(ULF_SOURCE_DIR) + "/" + rel; }

// Random ULF tree of depth at most max_depth. Lists have 2-4 children, plus
// the occasional one-element list wrapping a list (a COMPLEX with only
// :INSTANCE). One-element lists around a bare atom never occur: they collapse
// to the atom in the graph form.
class TreeGen {
 public:
  explicit TreeGen(std::uint64_t seed) : rng_(seed) {}

  UlfTree tree(int max_depth) { return node(0, max_depth); }

  Atom atom() {
    static const std::vector<std::string> ops{"pres", "past", "plur", "k", "to", "that", "adv-a", "mod-n", "not",
                                             "=", "perf", "!", "?", "multi-sent", "n+preds"};
    static const std::vector<std::string> tags{"n", "v", "a", "p", "d", "pro", "adv-e", "aux-s", "cc"};
    static const std::vector<std::string> names{"Tom", "Mary", "New York", "Mr. Smith", "x"};
    int r = pick(100);
    if (r < 25) return Atom::op(ops[static_cast<std::size_t>(pick(static_cast<int>(ops.size())))]);
    if (r < 35) return Atom::name(names[static_cast<std::size_t>(pick(static_cast<int>(names.size())))]);
    if (r < 38) return Atom::name("Kim", "n");
    return Atom::suffixed("w" + std::to_string(pick(12)), tags[static_cast<std::size_t>(pick(static_cast<int>(tags.size())))]);
  }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  UlfTree node(int depth, int max_depth) {
    // depth counts list levels; a tree of only an atom has depth 0
    if (depth >= max_depth || (depth > 0 && pick(100) < 40)) return UlfTree(atom());
    if (depth + 1 < max_depth && pick(100) < 5) {
      std::vector<UlfTree> one;
      one.push_back(list(depth + 1, max_depth));
      return UlfTree(std::move(one));
    }
    return list(depth, max_depth);
  }

  UlfTree list(int depth, int max_depth) {
    std::vector<UlfTree> kids;
    int k = 2 + pick(3);
    for (int i = 0; i < k; ++i) kids.push_back(node(depth + 1, max_depth));
    return UlfTree(std::move(kids));
  }

  std::mt19937_64 rng_;
};

inline int tree_depth(const UlfTree& t) {
  if (t.is_atom()) return 0;
  int d = 0;
  for (const auto& c : t.children()) d = std::max(d, tree_depth(c));
  return d + 1;
}

// Best matched-triple count over every partial injection of candidate
// vertices into gold vertices. Triples are counted directly from the graphs:
// one per vertex label, one per labeled edge.
inline int brute_force_smatch(const UlfGraph& cand, const UlfGraph& gold) {
  const int n = static_cast<int>(cand.size()), m = static_cast<int>(gold.size());
  std::set<std::tuple<std::string, int, int>> gold_edges;
  for (const auto& e : gold.edges) gold_edges.insert({e.label, e.src, e.dst});
  std::vector<int> map(static_cast<std::size_t>(n), -1);
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  int best = 0;
  std::function<void(int)> rec = [&](int v) {
    if (v == n) {
      int s = 0;
      for (int i = 0; i < n; ++i) {
        int j = map[static_cast<std::size_t>(i)];
        if (j >= 0 && cand.vertices[static_cast<std::size_t>(i)].symbol.render() ==
                          gold.vertices[static_cast<std::size_t>(j)].symbol.render())
          ++s;
      }
      for (const auto& e : cand.edges) {
        int a = map[static_cast<std::size_t>(e.src)], b = map[static_cast<std::size_t>(e.dst)];
        if (a >= 0 && b >= 0 && gold_edges.count({e.label, a, b})) ++s;
      }
      best = std::max(best, s);
      return;
    }
    map[static_cast<std::size_t>(v)] = -1;
    rec(v + 1);
    for (int j = 0; j < m; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      used[static_cast<std::size_t>(j)] = true;
      map[static_cast<std::size_t>(v)] = j;
      rec(v + 1);
      used[static_cast<std::size_t>(j)] = false;
    }
    map[static_cast<std::size_t>(v)] = -1;
  };
  rec(0);
  return best;
}

// Small random graph over a tiny label alphabet so that many mappings tie;
// with `forest` some vertices stay unattached.
inline UlfGraph random_small_graph(std::mt19937_64& rng, int n, bool forest) {
  static const char* labels[] = {"a.n", "b.v", "c.d", "a.n", "COMPLEX"};
  static const char* roles[] = {":ARG0", ":ARG1", ":INSTANCE"};
  UlfGraph g;
  for (int i = 0; i < n; ++i) {
    g.add_vertex(Vertex{Atom::parse(labels[rng() % 5]), std::nullopt});
    if (i > 0 && !(forest && rng() % 4 == 0)) g.add_edge(static_cast<int>(rng() % static_cast<unsigned>(i)), i, roles[rng() % 3]);
  }
  g.root = 0;
  return g;
}

}  // namespace ulf::testing
