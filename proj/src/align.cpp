#include "ulf/align.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace ulf {

double olap(std::string_view x, std::string_view y) {
  if (x.empty() || y.empty()) return 0.0;
  // Longest common substring by DP over character pairs, one row at a time.
  std::vector<int> prev(y.size() + 1, 0), cur(y.size() + 1, 0);
  int best = 0;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    for (std::size_t j = 1; j <= y.size(); ++j) {
      cur[j] = x[i - 1] == y[j - 1] ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return 2.0 * best / static_cast<double>(x.size() + y.size());
}

namespace {
double olap_folded(std::string_view x, std::string_view y) {
  return std::max(olap(x, y), olap(to_lower(x), to_lower(y)));
}
}  // namespace

double rl(int index, int n) {
  if (n <= 0 || index < 1 || index > n)
    throw std::out_of_range("rl: index " + std::to_string(index) + " outside 1.." + std::to_string(n));
  return static_cast<double>(index) / n;
}

double sim(const Token& w, int n, const Atom& a, int pos, int m) {
  double lexical = std::max(olap_folded(w.surface, a.stem), olap_folded(w.lemma, a.stem));
  double tag = olap_folded(w.pos, a.extension());
  double loc = 1.0 - std::abs(rl(w.index, n) - rl(pos, m));
  return lexical + 0.5 * (tag + loc);
}

std::vector<int> atom_positions(const UlfGraph& gold) {
  std::vector<int> pos(gold.size(), 0);
  int k = 0;
  for (std::size_t v = 0; v < gold.size(); ++v) {
    const Atom& a = gold.vertices[v].symbol;
    if (a.kind == AtomKind::Operator && a.stem == kComplexLabel) continue;
    pos[v] = ++k;
  }
  return pos;
}

std::vector<int> AlignmentMap::vertices_of(int word) const {
  std::vector<int> out;
  for (auto [w, v] : token_pairs)
    if (w == word) out.push_back(v);
  return out;
}

std::vector<int> AlignmentMap::words_of(int vertex) const {
  std::vector<int> out;
  for (auto [w, v] : token_pairs)
    if (v == vertex) out.push_back(w);
  return out;
}

bool AlignmentMap::word_aligned(int word) const {
  return std::any_of(token_pairs.begin(), token_pairs.end(), [&](auto p) { return p.first == word; });
}

bool AlignmentMap::vertex_aligned(int vertex) const {
  return std::any_of(token_pairs.begin(), token_pairs.end(), [&](auto p) { return p.second == vertex; });
}

namespace {
bool adjacent_in_graph(const UlfGraph& g, int a, int b) {
  return g.parent(a) == b || g.parent(b) == a;
}
}  // namespace

AlignmentMap align(const Sentence& s, const UlfGraph& gold, const std::set<Atom>& never_align) {
  AlignmentMap out;
  const int n = static_cast<int>(s.size());
  auto pos = atom_positions(gold);
  const int m = pos.empty() ? 0 : *std::max_element(pos.begin(), pos.end());

  struct Candidate {
    double score;
    int word;
    int vertex;
  };
  std::vector<Candidate> cands;
  for (const Token& w : s.tokens)
    for (std::size_t v = 0; v < gold.size(); ++v) {
      if (pos[v] == 0) continue;
      const Atom& a = gold.vertices[v].symbol;
      if (never_align.count(a)) continue;
      double score = sim(w, n, a, pos[v], m);
      if (score < kMinSim) continue;
      cands.push_back({score, w.index, static_cast<int>(v)});
    }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
    if (x.score != y.score) return x.score > y.score;
    return std::tie(x.word, x.vertex) < std::tie(y.word, y.vertex);
  });

  for (const auto& c : cands) {
    auto w_atoms = out.vertices_of(c.word);
    bool word_ok = w_atoms.empty() ||
                   std::any_of(w_atoms.begin(), w_atoms.end(), [&](int a) { return adjacent_in_graph(gold, a, c.vertex); });
    auto a_words = out.words_of(c.vertex);
    bool atom_ok = a_words.empty() ||
                   std::any_of(a_words.begin(), a_words.end(), [&](int w) { return std::abs(w - c.word) == 1; });
    if (word_ok && atom_ok) out.token_pairs.emplace(c.word, c.vertex);
  }

  // Span per atom, then merge overlapping spans.
  std::map<int, std::pair<int, int>> atom_span;
  for (auto [w, v] : out.token_pairs) {
    auto [it, fresh] = atom_span.emplace(v, std::make_pair(w, w));
    if (!fresh) {
      it->second.first = std::min(it->second.first, w);
      it->second.second = std::max(it->second.second, w);
    }
  }
  std::vector<SpanAlignment> spans;
  for (auto& [v, span] : atom_span) spans.push_back({span.first, span.second, {v}});
  std::sort(spans.begin(), spans.end(),
            [](const auto& a, const auto& b) { return std::tie(a.first, a.last) < std::tie(b.first, b.last); });
  for (auto& sp : spans) {
    if (!out.span_pairs.empty() && sp.first <= out.span_pairs.back().last) {
      auto& back = out.span_pairs.back();
      back.last = std::max(back.last, sp.last);
      back.vertices.insert(back.vertices.end(), sp.vertices.begin(), sp.vertices.end());
    } else {
      out.span_pairs.push_back(sp);
    }
  }
  for (auto& sp : out.span_pairs) std::sort(sp.vertices.begin(), sp.vertices.end());
  return out;
}

namespace {
bool connected(const UlfGraph& g, const std::vector<int>& vs) {
  if (vs.size() <= 1) return true;
  std::set<int> members(vs.begin(), vs.end()), seen{vs.front()};
  std::vector<int> todo{vs.front()};
  while (!todo.empty()) {
    int u = todo.back();
    todo.pop_back();
    for (int x : members)
      if (!seen.count(x) && adjacent_in_graph(g, u, x)) {
        seen.insert(x);
        todo.push_back(x);
      }
  }
  return seen.size() == members.size();
}
}  // namespace

std::string check_alignment(const AlignmentMap& a, const UlfGraph& gold) {
  std::set<int> words, verts;
  for (auto [w, v] : a.token_pairs) {
    words.insert(w);
    verts.insert(v);
  }
  for (int w : words)
    if (!connected(gold, a.vertices_of(w))) return "vertices aligned to word " + std::to_string(w) + " are not connected";
  for (int v : verts) {
    auto ws = a.words_of(v);
    if (ws.back() - ws.front() + 1 != static_cast<int>(ws.size()))
      return "words aligned to vertex " + std::to_string(v) + " are not contiguous";
  }
  for (std::size_t i = 0; i < a.span_pairs.size(); ++i) {
    if (i && a.span_pairs[i].first <= a.span_pairs[i - 1].last) return "overlapping spans";
    if (!connected(gold, a.span_pairs[i].vertices)) return "span vertex set is not connected";
  }
  return {};
}

}  // namespace ulf
