#include "ulf/pipeline.hpp"

#include <map>

namespace ulf {

namespace {

// Partial vertex labels and edges must match their gold counterparts.
std::string inconsistency(const OracleState& st) {
  const UlfGraph& part = st.config.graph;
  for (std::size_t p = 0; p < part.size(); ++p) {
    int g = st.partial_to_gold[p];
    if (part.vertices[p].symbol != st.gold.vertices[static_cast<std::size_t>(g)].symbol)
      return "vertex " + part.vertices[p].symbol.render() + " stands for gold " +
             st.gold.vertices[static_cast<std::size_t>(g)].symbol.render();
  }
  for (const auto& e : part.edges) {
    int gs = st.partial_to_gold[static_cast<std::size_t>(e.src)], gd = st.partial_to_gold[static_cast<std::size_t>(e.dst)];
    const Edge* ge = st.gold.incoming(gd);
    if (!ge || ge->src != gs || ge->label != e.label)
      return "edge " + part.vertices[static_cast<std::size_t>(e.src)].symbol.render() + " " + e.label + " " +
             part.vertices[static_cast<std::size_t>(e.dst)].symbol.render() + " is not in the gold graph";
  }
  return {};
}

}  // namespace

std::optional<Divergence> verify_trace(const AlignedExample& ex, const SymbolSets& symbols,
                                       const std::vector<Action>& trace) {
  OracleState st = make_oracle_state(ex.sentence, ex.gold, ex.alignment, symbols);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    try {
      if (is_terminal(st.config)) return Divergence{i, trace[i].to_string(), "action after a terminal configuration"};
      advance(st, trace[i]);
    } catch (const std::exception& e) {
      return Divergence{i, trace[i].to_string(), e.what()};
    }
    if (std::string why = inconsistency(st); !why.empty()) return Divergence{i, trace[i].to_string(), why};
  }
  std::string last = trace.empty() ? std::string("<none>") : trace.back().to_string();
  std::size_t end = trace.empty() ? 0 : trace.size() - 1;
  if (!is_terminal(st.config)) return Divergence{end, last, "trace ends before a terminal configuration"};
  Config c = replay(ex.sentence, trace);
  auto frags = extract_result(c);
  if (frags.size() != 1)
    return Divergence{end, last, "replay gives " + std::to_string(frags.size()) + " fragments"};
  if (!frags[0].same_structure(ex.gold)) return Divergence{end, last, "replayed graph differs from the gold graph"};
  return std::nullopt;
}

SymbolSets symbol_sets_for(const std::vector<CorpusRecord>& training) {
  require_gold(training);
  std::vector<AlignedExample> ax;
  ax.reserve(training.size());
  for (const auto& r : training) ax.push_back(align_record(r));
  return build_symbol_sets(ax);
}

std::vector<OracleResult> run_oracle(const std::vector<CorpusRecord>& records, const SymbolSets& symbols,
                                     int threads) {
  require_gold(records);
  std::vector<OracleResult> out(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) {
    OracleResult& r = out[i];
    r.id = records[i].id;
    AlignedExample ex = align_record(records[i]);
    try {
      r.actions = extract(ex.sentence, ex.gold, ex.alignment, symbols);
    } catch (const OracleStuck& e) {
      r.error = e.what();
      r.actions = e.trace;
      return;
    }
    r.divergence = verify_trace(ex, symbols, r.actions);
  });
  return out;
}

TrainedParser train_parser(const std::vector<CorpusRecord>& training, int epochs, std::uint64_t seed) {
  TrainedParser tp;
  tp.symbols = symbol_sets_for(training);
  auto oracle = run_oracle(training, tp.symbols);
  std::vector<TrainingExample> examples;
  std::vector<UlfGraph> golds;
  for (std::size_t i = 0; i < training.size(); ++i) {
    if (!oracle[i].ok())
      throw CorpusError("oracle failed on training record " + training[i].id + ": " +
                        (oracle[i].error.empty() ? oracle[i].divergence->reason : oracle[i].error));
    examples.push_back(TrainingExample{training[i].sentence, training[i].dep, std::move(oracle[i].actions)});
    golds.push_back(training[i].gold_graph());
  }
  tp.model = train_perceptron(examples, vocab_from_oracle(examples), epochs, seed);
  tp.lexicon = lexicon_from_graphs(golds);
  return tp;
}

std::vector<DecodeResult> parse_records(const std::vector<CorpusRecord>& records, const ScorerFor& scorer,
                                        const ActionVocab& vocab, const DecodeOptions& opt, int threads) {
  std::vector<DecodeResult> out(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) {
    out[i] = beam_decode(records[i].sentence, records[i].dep, scorer(i), vocab, opt);
  });
  return out;
}

EvalReport evaluate(const std::vector<GraphEntry>& candidates, const std::vector<GraphEntry>& golds,
                    const EvalConfig& config, int threads) {
  std::map<std::string, const UlfGraph*> by_id;
  for (const auto& c : candidates)
    if (!by_id.emplace(c.id, &c.graph).second) throw CorpusError("duplicate candidate id " + c.id);
  std::vector<std::string> ids;
  std::vector<UlfGraph> cand, gold;
  for (const auto& g : golds) {
    auto it = by_id.find(g.id);
    ids.push_back(g.id);
    gold.push_back(g.graph);
    // A missing parse counts as an empty graph.
    cand.push_back(it == by_id.end() ? UlfGraph{} : *it->second);
  }
  return corpus_eval(ids, cand, gold, config, threads);
}

}  // namespace ulf
