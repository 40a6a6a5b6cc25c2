#pragma once

// Corpus records, JSON-lines ingest, round-robin splits, run configuration,
// and the glue that turns records into aligned training material.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ulf/align.hpp"
#include "ulf/core.hpp"
#include "ulf/decode.hpp"
#include "ulf/oracle.hpp"
#include "ulf/typesys.hpp"

namespace ulf {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CorpusRecord {
  std::string id;
  Sentence sentence;
  DependencyParse dep;          // empty when the record has none
  std::optional<UlfTree> ulf;   // gold formula, absent for parse-only input

  bool has_gold() const { return ulf.has_value(); }
  UlfGraph gold_graph() const;  // throws CorpusError without gold
};

CorpusRecord parse_record(const std::string& json_text);
std::string record_to_json(const CorpusRecord& r);

// Reads records from a stream; `source` names it in error messages.
using CorpusReader = std::function<std::vector<CorpusRecord>(std::istream& in, const std::string& source)>;

std::vector<CorpusRecord> read_jsonl(std::istream& in, const std::string& source);
void register_reader(const std::string& format, CorpusReader reader);
// format "jsonl" is always available.
std::vector<CorpusRecord> ingest(const std::string& path, const std::string& format = "jsonl");
void write_jsonl(std::ostream& out, const std::vector<CorpusRecord>& records);

// Throws CorpusError naming the first record without a gold formula.
void require_gold(const std::vector<CorpusRecord>& records);

struct SplitPattern {
  int chunk = 10;
  std::vector<int> shares{8, 1, 1};  // chunks per round: train, dev, test
};

// Chunk sequence of one round: each part takes one chunk in turn while it
// still has shares left, so 8/1/1 gives T D E T T T T T T T.
std::vector<int> round_order(const SplitPattern& p);

template <typename T>
std::vector<std::vector<T>> split_round_robin(const std::vector<T>& items, const SplitPattern& p = {}) {
  if (p.chunk < 1) throw std::invalid_argument("split_round_robin: chunk must be at least 1");
  std::vector<int> order = round_order(p);
  std::vector<std::vector<T>> parts(p.shares.size());
  if (order.empty()) return parts;
  std::size_t c = 0;
  for (std::size_t i = 0; i < items.size(); i += static_cast<std::size_t>(p.chunk), ++c) {
    auto& dst = parts[static_cast<std::size_t>(order[c % order.size()])];
    for (std::size_t j = i; j < std::min(items.size(), i + static_cast<std::size_t>(p.chunk)); ++j) dst.push_back(items[j]);
  }
  return parts;
}

struct LengthStats {
  std::size_t count = 0;
  double mean = 0;
  double median = 0;
  int min = 0;
  int max = 0;
};

LengthStats length_stats(const std::vector<int>& lengths);
LengthStats sentence_length_stats(const std::vector<CorpusRecord>& records);

// Non-faithful suffix stripper for raw-text demo input (s/es/ed/ing with a
// small exception list). Real runs take lemmas from the corpus.
std::string demo_lemma(std::string_view word);
Sentence demo_sentence(std::string_view text);

struct RunConfig {
  int beam = 3;
  int type_beam = 10;  // beam used when the type constraint is on
  bool types = false;
  bool lexicon = false;
  int cap = kDefaultActionCap;
  int epochs = 10;
  int k = 3;
  int restarts = 4;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string model_path;
  std::string lexicon_path;
  std::string types_path;

  int effective_beam() const { return types ? type_beam : beam; }

  // key = value lines, '#' comments. Unknown keys are errors.
  void set(const std::string& key, const std::string& value);
  void load(const std::string& path);
  void parse_text(std::string_view text, const std::string& source = "<config>");
  std::map<std::string, std::string> entries() const;
};

// ULF_THREADS when set and positive, else `fallback`.
int threads_from_env(int fallback = 1);

// Aligns a gold record. Promote symbols are never aligned.
AlignedExample align_record(const CorpusRecord& r, const std::vector<std::string>& promote = default_promote_symbols());

// Stem -> atoms for every non-operator atom of the given graphs.
Lexicon lexicon_from_graphs(const std::vector<UlfGraph>& graphs);

// Disjoint union; the first fragment's root stays the root.
UlfGraph merge_fragments(const std::vector<UlfGraph>& fragments);

// Graph files: "# ::id <id>" then zero or more penman expressions (one per
// fragment), blocks separated by a blank line.
struct GraphEntry {
  std::string id;
  UlfGraph graph;
};
void write_graph_file(std::ostream& out, const std::vector<GraphEntry>& entries);
std::vector<GraphEntry> read_graph_file(std::istream& in, const std::string& source);

// Runs f(i) for i in [0, n) over `threads` workers; results are written by
// index so output order does not depend on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f);

}  // namespace ulf
