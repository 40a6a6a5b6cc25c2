#pragma once

// EL-Smatch and SemBLEU over ULF graphs (fragmented candidates allowed).

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "ulf/core.hpp"

namespace ulf {

struct TripleSet {
  std::vector<std::string> instances;                        // label of each variable
  std::vector<std::tuple<std::string, int, int>> relations;  // (role, source var, target var)
  std::vector<int> roots;

  std::size_t size() const { return instances.size() + relations.size(); }
};

TripleSet triples(const UlfGraph& g);

// Matched triple count under a candidate->gold variable mapping (-1 = unmapped).
int matched_triples(const TripleSet& cand, const TripleSet& gold, const std::vector<int>& mapping);

struct SmatchCounts {
  int matched = 0;
  int candidate = 0;
  int gold = 0;

  double precision() const;
  double recall() const;
  double f1() const;
};

inline constexpr int kDefaultRestarts = 4;
inline constexpr int kDefaultNgramOrder = 3;

SmatchCounts el_smatch_counts(const UlfGraph& candidate, const UlfGraph& gold, int restarts = kDefaultRestarts,
                              std::uint64_t seed = 0);

struct SmatchScore {
  double f1 = 0, precision = 0, recall = 0;
};

SmatchScore el_smatch(const UlfGraph& candidate, const UlfGraph& gold, int restarts = kDefaultRestarts,
                      std::uint64_t seed = 0);

// Label-path n-grams (node, edge, node, ...) following edge direction.
using NGramBag = std::map<std::string, int>;
std::vector<NGramBag> ngrams(const UlfGraph& g, int k);

struct BleuCounts {
  std::vector<long> clipped;  // per order
  std::vector<long> total;    // candidate n-grams per order
  std::vector<long> reference;
  long cand_len = 0;  // unigram counts
  long ref_len = 0;

  void add(const BleuCounts& other);
  double score() const;
};

BleuCounts sembleu_counts(const UlfGraph& candidate, const UlfGraph& gold, int k = kDefaultNgramOrder);
double sembleu(const UlfGraph& candidate, const UlfGraph& gold, int k = kDefaultNgramOrder);

// Largest connected component (ties: earliest root).
UlfGraph largest_fragment(const UlfGraph& g);

struct EvalConfig {
  bool sembleu = true;
  bool smatch = true;
  int k = kDefaultNgramOrder;
  int restarts = kDefaultRestarts;
  std::uint64_t seed = 0;
  bool largest_fragment = false;
};

struct EvalRow {
  std::string id;
  double sembleu = 0;
  SmatchCounts smatch;
  int fragments = 0;
};

struct EvalReport {
  EvalConfig config;
  std::vector<EvalRow> rows;
  double sembleu = 0;  // pooled
  SmatchCounts smatch;  // pooled
  double mean_fragments = 0;

  std::string to_tsv() const;
  std::string to_json() const;
};

EvalReport corpus_eval(const std::vector<std::string>& ids, const std::vector<UlfGraph>& candidates,
                       const std::vector<UlfGraph>& golds, const EvalConfig& config, int threads = 1);

}  // namespace ulf
