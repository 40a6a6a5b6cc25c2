#pragma once

// The node-generative cache transition system.
//
// A configuration holds a stack of (cache slot, vertex) pairs, a two-slot
// cache, a cursor over the input words, and the partial graph. Phases and the
// actions allowed in each:
//
//   GEN        WordGen -> WORDGEN, SymGen(s) -> PUSH, SkipWord | MergeBuf -> GEN
//   WORDGEN    Name -> NAMEGEN, Lemma -> LEMMAGEN, Token -> TOKENGEN
//   *GEN       Suffix(e) -> PUSH
//   PUSH       PushIndex(i) -> ARC
//   ARC        Arc(0, d, l) | NoArc -> PROMOTE
//   PROMOTE    PromoteSym(s) -> PROMOTEARC, NoPromote -> POP
//   PROMOTEARC PromoteArc(l) -> ARC
//   POP        Pop -> ARC, NoPop -> GEN
//
// Arcs only join two vertices that have no parent yet, so a vertex never
// gains children once it is attached (parsing is bottom-up).

#include <array>
#include <compare>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ulf/core.hpp"
#include "ulf/typesys.hpp"

namespace ulf {

inline constexpr int kCacheSize = 2;
inline constexpr int kDefaultActionCap = 800;

enum class Phase { Gen, WordGen, NameGen, LemmaGen, TokenGen, Push, Arc, Promote, PromoteArc, Pop };

std::string_view phase_name(Phase p);

// Declaration order is the decoder's tie-break order.
enum class ActionKind {
  PushIndex,
  Arc,
  Suffix,
  SymGen,
  MergeBuf,
  PromoteSym,
  PromoteArc,
  NoArc,
  Pop,
  NoPop,
  SkipWord,
  WordGen,
  Name,
  Lemma,
  Token,
  NoPromote,
};

enum class ArcDir { Left, Right };  // Left: the rightmost cache vertex is the head.

class IllegalAction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Action {
  ActionKind kind = ActionKind::NoArc;
  int index = 0;
  ArcDir dir = ArcDir::Right;
  std::string label;  // Arc, PromoteArc
  std::string value;  // Suffix extension, SymGen / PromoteSym symbol

  static Action push_index(int i) { return {ActionKind::PushIndex, i, ArcDir::Right, {}, {}}; }
  static Action arc(int i, ArcDir d, std::string l) { return {ActionKind::Arc, i, d, std::move(l), {}}; }
  static Action suffix(std::string e) { return {ActionKind::Suffix, 0, ArcDir::Right, {}, std::move(e)}; }
  static Action sym_gen(std::string s) { return {ActionKind::SymGen, 0, ArcDir::Right, {}, std::move(s)}; }
  static Action promote_sym(std::string s) { return {ActionKind::PromoteSym, 0, ArcDir::Right, {}, std::move(s)}; }
  static Action promote_arc(std::string l) { return {ActionKind::PromoteArc, 0, ArcDir::Right, std::move(l), {}}; }
  static Action simple(ActionKind k) { return {k, 0, ArcDir::Right, {}, {}}; }

  // Text form, e.g. "PUSHIDX:1", "ARC:0:left::ARG0", "SUFFIX:n".
  std::string to_string() const;
  static Action parse(std::string_view line);

  friend bool operator==(const Action&, const Action&) = default;
  friend auto operator<=>(const Action&, const Action&) = default;
};

std::vector<Action> parse_action_sequence(std::string_view text);
std::string format_action_sequence(const std::vector<Action>& actions);

struct StackEntry {
  int slot = 0;
  int vertex = -1;  // -1 is the null marker $

  friend bool operator==(const StackEntry&, const StackEntry&) = default;
};

struct Config {
  std::shared_ptr<const Sentence> sentence;
  std::vector<StackEntry> stack;
  std::array<int, kCacheSize> cache{-1, -1};
  int cursor = 0;  // 0-based index of the first unconsumed word
  int merged = 1;  // words fused into the front buffer element
  UlfGraph graph;  // vertices in creation order
  Phase phase = Phase::Gen;
  int pending = -1;   // generated, waiting for PushIndex
  int promoted = -1;  // generated by PromoteSym, waiting for PromoteArc
  std::vector<TypeSet> types;  // per vertex; maintained by the decoder's type constraint
  int steps = 0;
  std::optional<Action> last;

  int words() const { return sentence ? static_cast<int>(sentence->size()) : 0; }
  bool buffer_empty() const { return cursor >= words(); }
  int rightmost() const { return cache[kCacheSize - 1]; }
  // Word indices (1-based) of the front buffer element; empty when exhausted.
  std::vector<int> front_words() const;
  // Stem Suffix would use in the given generation phase.
  std::string front_stem(Phase gen_phase) const;
  bool attached(int v) const { return graph.parent(v) != -1; }

  friend bool operator==(const Config& a, const Config& b) {
    return a.stack == b.stack && a.cache == b.cache && a.cursor == b.cursor && a.merged == b.merged &&
           a.graph == b.graph && a.phase == b.phase && a.pending == b.pending && a.promoted == b.promoted &&
           a.steps == b.steps && a.last == b.last;
  }
};

// Parameter vocabularies for the open-ended actions.
struct ActionVocab {
  std::vector<std::string> suffixes;         // Suffix extensions (may include "")
  std::vector<std::string> symgen;           // SymGen symbols
  std::vector<std::string> promote;          // PromoteSym symbols (S_p)
  std::vector<std::string> labels;           // Arc / PromoteArc roles
};

Config init(const Sentence& sentence);
Config init(std::shared_ptr<const Sentence> sentence);

// Whether `a` may be applied to `c` (vocabulary membership not checked).
bool is_legal(const Config& c, const Action& a);
// All legal actions with parameters drawn from `vocab`, in tie-break order.
std::vector<Action> legal_actions(const Config& c, const ActionVocab& vocab);

Config apply(const Config& c, const Action& a);
void apply_in_place(Config& c, const Action& a);

// GEN with an exhausted buffer and empty stack, entered by NoPop or SkipWord.
bool is_terminal(const Config& c);
std::vector<UlfGraph> extract_result(const Config& c);

// Replays actions from the initial configuration.
Config replay(const Sentence& sentence, const std::vector<Action>& actions);

// Checks the configuration invariants; empty string when they hold.
std::string check_config(const Config& c);

}  // namespace ulf
