#pragma once

// Greedy word <-> atom alignment between a sentence and its gold graph.

#include <set>
#include <string_view>
#include <utility>
#include <vector>

#include "ulf/core.hpp"

namespace ulf {

inline constexpr double kMinSim = 1.0;

struct SpanAlignment {
  int first = 0;  // 1-based, inclusive
  int last = 0;
  std::vector<int> vertices;  // ascending

  friend bool operator==(const SpanAlignment&, const SpanAlignment&) = default;
};

struct AlignmentMap {
  std::set<std::pair<int, int>> token_pairs;  // (word index, vertex id)
  std::vector<SpanAlignment> span_pairs;      // ordered by span start

  std::vector<int> vertices_of(int word) const;
  std::vector<int> words_of(int vertex) const;
  bool word_aligned(int word) const;
  bool vertex_aligned(int vertex) const;
};

// 2 * |longest common substring| / (|x| + |y|); 0 when both are empty.
double olap(std::string_view x, std::string_view y);
// Relative location index / n.
double rl(int index, int n);

// Sim(w, a): token/lemma vs stem overlap plus half of (POS vs suffix overlap
// + location agreement). String overlaps take the max of the exact and
// case-folded comparison.
double sim(const Token& word, int sentence_length, const Atom& atom, int atom_position, int atom_count);

// Preorder positions (1-based) of the formula atoms of g; COMPLEX vertices get 0.
std::vector<int> atom_positions(const UlfGraph& gold);

AlignmentMap align(const Sentence& sentence, const UlfGraph& gold, const std::set<Atom>& never_align);

// Checks the connectedness / contiguity invariants; returns an empty string
// when they hold, otherwise a description of the first violation.
std::string check_alignment(const AlignmentMap& a, const UlfGraph& gold);

}  // namespace ulf
