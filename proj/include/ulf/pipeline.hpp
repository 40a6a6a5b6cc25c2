#pragma once

// End-to-end steps shared by the command-line tool and the acceptance run:
// oracle extraction with verification, training, and batch decoding.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ulf/corpus.hpp"
#include "ulf/decode.hpp"
#include "ulf/metrics.hpp"
#include "ulf/oracle.hpp"

namespace ulf {

// Where a trace stops agreeing with the gold graph: the action at `step`
// created or attached something the gold does not have.
struct Divergence {
  std::size_t step = 0;
  std::string action;
  std::string reason;
};

// Replays `trace` alongside the oracle's vertex correspondence and checks
// every step against the gold graph, then the final graph as a whole.
std::optional<Divergence> verify_trace(const AlignedExample& ex, const SymbolSets& symbols,
                                       const std::vector<Action>& trace);

struct OracleResult {
  std::string id;
  std::vector<Action> actions;
  std::string error;  // oracle failure, empty on success
  std::optional<Divergence> divergence;

  bool ok() const { return error.empty() && !divergence; }
};

// Symbol sets come from `training` (pass the same records to use the corpus itself).
SymbolSets symbol_sets_for(const std::vector<CorpusRecord>& training);

std::vector<OracleResult> run_oracle(const std::vector<CorpusRecord>& records, const SymbolSets& symbols,
                                     int threads = 1);

struct TrainedParser {
  PerceptronModel model;  // carries the action vocabulary
  SymbolSets symbols;
  Lexicon lexicon;
};

// Throws CorpusError when a training record has no gold or the oracle fails on it.
TrainedParser train_parser(const std::vector<CorpusRecord>& training, int epochs, std::uint64_t seed);

// Scorer for record i; must stay valid for the whole call.
using ScorerFor = std::function<Scorer&(std::size_t)>;

std::vector<DecodeResult> parse_records(const std::vector<CorpusRecord>& records, const ScorerFor& scorer,
                                        const ActionVocab& vocab, const DecodeOptions& opt, int threads = 1);

EvalReport evaluate(const std::vector<GraphEntry>& candidates, const std::vector<GraphEntry>& golds,
                    const EvalConfig& config, int threads = 1);

}  // namespace ulf
