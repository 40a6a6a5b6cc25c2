#pragma once

// Static oracle: derives the action sequence that rebuilds a gold graph.

#include <iosfwd>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ulf/align.hpp"
#include "ulf/core.hpp"
#include "ulf/machine.hpp"

namespace ulf {

// Thrown when no rule applies; `trace` holds the actions emitted so far.
class OracleStuck : public std::runtime_error {
 public:
  OracleStuck(const std::string& what, std::vector<Action> trace)
      : std::runtime_error(what), trace(std::move(trace)) {}
  std::vector<Action> trace;
};

struct SymbolSets {
  std::set<std::string> promote;      // S_p, rendered labels
  std::set<std::string> unalignable;  // S_s
};

const std::vector<std::string>& default_promote_symbols();

struct OracleState {
  Config config;
  UlfGraph gold;  // canonical preorder
  AlignmentMap alignment;
  SymbolSets symbols;
  std::vector<int> gold_to_partial;
  std::vector<int> partial_to_gold;

  // Foremost gold vertex not in the partial graph, skipping vertices that
  // will be created by promotion; -1 when none is left.
  int s_next() const;
  bool promotable(int gold_vertex) const;
  bool generated(int gold_vertex) const { return gold_to_partial[static_cast<std::size_t>(gold_vertex)] >= 0; }
  bool fully_formed(int partial_vertex) const;
};

OracleState make_oracle_state(const Sentence& sentence, const UlfGraph& gold, const AlignmentMap& alignment,
                              const SymbolSets& symbols);

Action next_action(const OracleState& st);
// Applies `a` to the configuration and updates the gold correspondence.
void advance(OracleState& st, const Action& a);

std::vector<Action> extract(const Sentence& sentence, const UlfGraph& gold, const AlignmentMap& alignment,
                            const SymbolSets& symbols, int max_steps = 100000);

struct AlignedExample {
  Sentence sentence;
  UlfGraph gold;
  AlignmentMap alignment;
};

SymbolSets build_symbol_sets(const std::vector<AlignedExample>& training,
                             const std::vector<std::string>& promote = default_promote_symbols());

// Oracle dump: "# id: <id>" header, then one action per line, blank line between entries.
void write_oracle_dump(std::ostream& out, const std::vector<std::pair<std::string, std::vector<Action>>>& entries);
std::vector<std::pair<std::string, std::vector<Action>>> read_oracle_dump(std::istream& in);

}  // namespace ulf
