#include "ulf/oracle.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace ulf {

const std::vector<std::string>& default_promote_symbols() {
  static const std::vector<std::string> v{"pres", "past", "plur", "k",  "ka", "to", "that",       "tht",
                                          "adv-a", "adv-e", "adv-s", "sub", "rep", "n+preds", "np+preds", "=",
                                          "!",    "?",    "multi-sent", "pasv", "COMPLEX"};
  return v;
}

namespace {

constexpr long kFar = std::numeric_limits<long>::max() / 4;
constexpr long kNearest = -kFar;

std::string describe(const OracleState& st) {
  const Config& c = st.config;
  std::ostringstream o;
  o << "phase=" << phase_name(c.phase) << " cursor=" << c.cursor << " merged=" << c.merged << " cache=[";
  for (int i = 0; i < kCacheSize; ++i) {
    int v = c.cache[static_cast<std::size_t>(i)];
    o << (i ? "," : "") << (v < 0 ? "$" : c.graph.vertices[static_cast<std::size_t>(v)].symbol.render());
  }
  o << "] stack=" << c.stack.size() << " s_next=";
  int s = st.s_next();
  o << (s < 0 ? std::string("none") : st.gold.vertices[static_cast<std::size_t>(s)].symbol.render());
  return o.str();
}

int gold_of(const OracleState& st, int p) { return p < 0 ? -1 : st.partial_to_gold[static_cast<std::size_t>(p)]; }

// Earliest aligned word of a gold vertex, 0 when unaligned.
int first_word(const OracleState& st, int g) {
  auto ws = st.alignment.words_of(g);
  return ws.empty() ? 0 : *std::min_element(ws.begin(), ws.end());
}

std::vector<int> gold_neighbors(const OracleState& st, int g) {
  std::vector<int> out;
  int p = st.gold.parent(g);
  if (p >= 0) out.push_back(p);
  for (const Edge* e : st.gold.outgoing(g)) out.push_back(e->dst);
  return out;
}

// Distance from the front of the buffer to `y`, walking through vertices
// that are unaligned and not yet generated.
long reach(const OracleState& st, int y, int from) {
  const Config& c = st.config;
  if (st.generated(y)) return st.gold_to_partial[static_cast<std::size_t>(y)] == c.pending ? kNearest : kFar;
  int w = first_word(st, y);
  if (w > 0) return std::max(0L, static_cast<long>(w - (c.cursor + 1)));
  long best = kFar;
  for (int z : gold_neighbors(st, y))
    if (z != from) best = std::min(best, reach(st, z, y));
  return best;
}

// Distance of a cache vertex's nearest missing gold edge.
long slot_distance(const OracleState& st, int p) {
  int g = gold_of(st, p);
  const UlfGraph& part = st.config.graph;
  long best = kFar;
  int gp = st.gold.parent(g);
  if (gp >= 0 && part.parent(p) < 0) best = std::min(best, reach(st, gp, g));
  for (const Edge* e : st.gold.outgoing(g)) {
    int y = e->dst;
    if (st.generated(y) && part.parent(st.gold_to_partial[static_cast<std::size_t>(y)]) == p) continue;
    best = std::min(best, reach(st, y, g));
  }
  return best;
}

const Edge* gold_edge(const OracleState& st, int head, int dep) {
  const Edge* e = st.gold.incoming(dep);
  return e && e->src == head ? e : nullptr;
}

// Generation path that produces the gold atom from the front buffer element.
std::optional<Phase> word_path(const OracleState& st, int s) {
  const Config& c = st.config;
  if (c.buffer_empty()) return std::nullopt;
  const Atom& a = st.gold.vertices[static_cast<std::size_t>(s)].symbol;
  if (a.is_name()) {
    if (c.front_stem(Phase::NameGen) == a.stem) return Phase::NameGen;
    return std::nullopt;
  }
  if (c.front_stem(Phase::TokenGen) == a.stem) return Phase::TokenGen;
  if (c.front_stem(Phase::LemmaGen) == a.stem) return Phase::LemmaGen;
  return std::nullopt;
}

bool should_merge(const OracleState& st, int s) {
  const Config& c = st.config;
  if (c.cursor + c.merged >= c.words()) return false;
  const Atom& a = st.gold.vertices[static_cast<std::size_t>(s)].symbol;
  const Token& next = c.sentence->at(c.cursor + c.merged + 1);
  auto prefix_of = [&](const std::string& x) { return a.stem.rfind(x, 0) == 0; };
  if (a.is_name()) return prefix_of(c.front_stem(Phase::NameGen) + " " + next.surface);
  return prefix_of(c.front_stem(Phase::LemmaGen) + "_" + to_lower(next.lemma)) ||
         prefix_of(c.front_stem(Phase::TokenGen) + "_" + to_lower(next.surface));
}

Action gen_action(const OracleState& st) {
  const Config& c = st.config;
  int s = st.s_next();
  if (s < 0) {
    if (!c.buffer_empty()) return Action::simple(ActionKind::SkipWord);
    throw OracleStuck("GEN with nothing left to generate but a non-empty stack: " + describe(st), {});
  }
  const std::string label = st.gold.vertices[static_cast<std::size_t>(s)].symbol.render();
  if (c.buffer_empty()) return Action::sym_gen(label);
  if (word_path(st, s)) return Action::simple(ActionKind::WordGen);  // steps 1-3
  if (should_merge(st, s)) return Action::simple(ActionKind::MergeBuf);  // step 4
  const int front = c.cursor + 1;
  // Step 5: the symbol belongs to a word already passed, or is never aligned.
  auto words = st.alignment.words_of(s);
  bool behind = !words.empty() && std::all_of(words.begin(), words.end(), [&](int w) { return w < front; });
  if (behind || st.symbols.unalignable.count(label)) return Action::sym_gen(label);
  // Step 6: the word belongs to a later symbol or one already built; an
  // unaligned word is also skipped when the symbol aligns further right.
  // Skipping the final word with an empty stack would end the parse.
  if (c.cursor + c.merged >= c.words() && c.stack.empty()) return Action::sym_gen(label);
  auto verts = st.alignment.vertices_of(front);
  for (int v : verts)
    if (v > s || st.generated(v)) return Action::simple(ActionKind::SkipWord);
  if (verts.empty() && !words.empty() && first_word(st, s) > front) return Action::simple(ActionKind::SkipWord);
  return Action::sym_gen(label);  // step 7
}

}  // namespace

bool OracleState::promotable(int g) const {
  const Atom& a = gold.vertices[static_cast<std::size_t>(g)].symbol;
  return symbols.promote.count(a.render()) && !gold.outgoing(g).empty();
}

int OracleState::s_next() const {
  for (int g = 0; g < static_cast<int>(gold.size()); ++g)
    if (!generated(g) && !promotable(g)) return g;
  return -1;
}

bool OracleState::fully_formed(int p) const {
  return gold.descendant_count(gold_of(*this, p)) == config.graph.descendant_count(p);
}

OracleState make_oracle_state(const Sentence& sentence, const UlfGraph& gold, const AlignmentMap& alignment,
                              const SymbolSets& symbols) {
  OracleState st;
  st.config = init(sentence);
  st.gold = gold.canonical();
  if (gold.canonical().vertices.size() != gold.size()) throw GraphError("oracle: gold graph is not a single tree");
  st.gold.validate_tree();
  st.alignment = alignment;
  st.symbols = symbols;
  st.gold_to_partial.assign(st.gold.size(), -1);
  return st;
}

Action next_action(const OracleState& st) {
  const Config& c = st.config;
  Action a;
  switch (c.phase) {
    case Phase::Gen:
      a = gen_action(st);
      break;
    case Phase::WordGen: {
      auto path = word_path(st, st.s_next());
      if (!path) throw OracleStuck("WORDGEN without a matching word: " + describe(st), {});
      a = Action::simple(*path == Phase::NameGen ? ActionKind::Name
                         : *path == Phase::TokenGen ? ActionKind::Token
                                                    : ActionKind::Lemma);
      break;
    }
    case Phase::NameGen:
    case Phase::LemmaGen:
    case Phase::TokenGen:
      a = Action::suffix(st.gold.vertices[static_cast<std::size_t>(st.s_next())].symbol.tag);
      break;
    case Phase::Push: {
      long best = std::numeric_limits<long>::min();
      int slot = 0;
      for (int i = 0; i < kCacheSize; ++i) {
        int p = c.cache[static_cast<std::size_t>(i)];
        long d = p < 0 ? std::numeric_limits<long>::max() : slot_distance(st, p);
        if (d > best) {
          best = d;
          slot = i;
        }
      }
      a = Action::push_index(slot);
      break;
    }
    case Phase::Arc: {
      a = Action::simple(ActionKind::NoArc);
      int p0 = c.cache[0], p1 = c.rightmost();
      if (p0 >= 0 && p1 >= 0) {
        int g0 = gold_of(st, p0), g1 = gold_of(st, p1);
        if (const Edge* e = gold_edge(st, g0, g1); e && c.graph.parent(p1) < 0 && st.fully_formed(p1))
          a = Action::arc(0, ArcDir::Right, e->label);
        else if (const Edge* e2 = gold_edge(st, g1, g0); e2 && c.graph.parent(p0) < 0 && st.fully_formed(p0))
          a = Action::arc(0, ArcDir::Left, e2->label);
      }
      break;
    }
    case Phase::Promote: {
      a = Action::simple(ActionKind::NoPromote);
      int r = c.rightmost();
      if (r >= 0 && !c.attached(r) && st.fully_formed(r)) {
        int gp = st.gold.parent(gold_of(st, r));
        if (gp >= 0 && !st.generated(gp)) {
          std::string label = st.gold.vertices[static_cast<std::size_t>(gp)].symbol.render();
          if (st.symbols.promote.count(label)) a = Action::promote_sym(label);
        }
      }
      break;
    }
    case Phase::PromoteArc: {
      const Edge* e = st.gold.incoming(gold_of(st, c.rightmost()));
      if (!e) throw OracleStuck("PROMOTEARC with no gold parent: " + describe(st), {});
      a = Action::promote_arc(e->label);
      break;
    }
    case Phase::Pop: {
      a = Action::simple(ActionKind::NoPop);
      if (!c.stack.empty()) {
        int r = c.rightmost();
        bool all_generated = std::all_of(st.gold_to_partial.begin(), st.gold_to_partial.end(),
                                         [](int p) { return p >= 0; });
        bool done_root = r >= 0 && gold_of(st, r) == 0 && all_generated && st.fully_formed(r);
        if (r < 0 || (st.fully_formed(r) && c.attached(r)) || done_root) a = Action::simple(ActionKind::Pop);
      }
      break;
    }
  }
  if (!is_legal(c, a)) throw OracleStuck("oracle chose illegal action " + a.to_string() + ": " + describe(st), {});
  return a;
}

void advance(OracleState& st, const Action& a) {
  int created_for = -1;
  if (a.kind == ActionKind::Suffix || a.kind == ActionKind::SymGen) {
    created_for = st.s_next();
  } else if (a.kind == ActionKind::PromoteSym) {
    created_for = st.gold.parent(gold_of(st, st.config.rightmost()));
  }
  std::size_t before = st.config.graph.size();
  apply_in_place(st.config, a);
  if (st.config.graph.size() > before) {
    if (created_for < 0) throw OracleStuck("vertex created without a gold counterpart", {});
    st.partial_to_gold.push_back(created_for);
    st.gold_to_partial[static_cast<std::size_t>(created_for)] = static_cast<int>(before);
  }
}

std::vector<Action> extract(const Sentence& sentence, const UlfGraph& gold, const AlignmentMap& alignment,
                            const SymbolSets& symbols, int max_steps) {
  OracleState st = make_oracle_state(sentence, gold, alignment, symbols);
  std::vector<Action> trace;
  try {
    while (!is_terminal(st.config)) {
      if (static_cast<int>(trace.size()) >= max_steps) throw OracleStuck("oracle exceeded the step limit", {});
      Action a = next_action(st);
      advance(st, a);
      trace.push_back(std::move(a));
    }
    if (std::any_of(st.gold_to_partial.begin(), st.gold_to_partial.end(), [](int p) { return p < 0; }))
      throw OracleStuck("terminal before every gold vertex was built: " + describe(st), {});
  } catch (const OracleStuck& e) {
    throw OracleStuck(e.what(), trace);
  } catch (const IllegalAction& e) {
    throw OracleStuck(e.what(), trace);
  }
  return trace;
}

SymbolSets build_symbol_sets(const std::vector<AlignedExample>& training, const std::vector<std::string>& promote) {
  SymbolSets out;
  out.promote.insert(promote.begin(), promote.end());
  std::set<std::string> aligned, seen;
  for (const auto& ex : training) {
    for (int v = 0; v < static_cast<int>(ex.gold.size()); ++v) {
      std::string label = ex.gold.vertices[static_cast<std::size_t>(v)].symbol.render();
      seen.insert(label);
      if (ex.alignment.vertex_aligned(v)) aligned.insert(label);
    }
  }
  for (const auto& s : seen)
    if (!aligned.count(s) && !out.promote.count(s)) out.unalignable.insert(s);
  return out;
}

void write_oracle_dump(std::ostream& out, const std::vector<std::pair<std::string, std::vector<Action>>>& entries) {
  bool first = true;
  for (const auto& [id, actions] : entries) {
    if (!first) out << '\n';
    first = false;
    out << "# id: " << id << '\n' << format_action_sequence(actions);
  }
}

std::vector<std::pair<std::string, std::vector<Action>>> read_oracle_dump(std::istream& in) {
  std::vector<std::pair<std::string, std::vector<Action>>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# id: ", 0) == 0) {
      out.emplace_back(line.substr(6), std::vector<Action>{});
      continue;
    }
    if (line[0] == '#') continue;
    if (out.empty()) throw ParseError("oracle dump line " + std::to_string(lineno) + ": action before any id header");
    try {
      out.back().second.push_back(Action::parse(line));
    } catch (const ParseError& e) {
      throw ParseError("oracle dump line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ulf
