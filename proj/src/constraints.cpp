#include "ulf/constraints.hpp"

namespace ulf {

namespace {

const TypeSet& types_at(const Config& c, int v) {
  if (v < 0 || v >= static_cast<int>(c.types.size())) throw std::logic_error("type table does not cover vertex");
  return c.types[static_cast<std::size_t>(v)];
}

Atom suffix_atom(const Config& c, const std::string& e) {
  std::string stem = c.front_stem(c.phase);
  if (c.phase == Phase::NameGen) return Atom::name(stem, e);
  return e.empty() ? Atom::op(stem) : Atom::suffixed(stem, e);
}

}  // namespace

std::optional<TypeSet> check_arc(const Config& c, const Action& a, const TypeGrammar& g) {
  (void)g;
  int head, dep;
  if (a.kind == ActionKind::Arc) {
    int other = c.cache[static_cast<std::size_t>(a.index)], right = c.rightmost();
    head = a.dir == ArcDir::Right ? other : right;
    dep = a.dir == ArcDir::Right ? right : other;
  } else if (a.kind == ActionKind::PromoteArc) {
    head = c.promoted;
    dep = c.rightmost();
  } else {
    return TypeSet{};
  }
  TypeSet out = compose_edge(types_at(c, head), types_at(c, dep), a.label);
  if (out.empty()) return std::nullopt;
  return out;
}

void apply_typed(Config& c, const Action& a, const TypeGrammar& g) {
  std::optional<TypeSet> composed;
  if (a.kind == ActionKind::Arc || a.kind == ActionKind::PromoteArc) {
    composed = check_arc(c, a, g);
    if (!composed) throw IllegalAction("type constraint rejects " + a.to_string());
  }
  int head = a.kind == ActionKind::PromoteArc ? c.promoted
             : a.kind == ActionKind::Arc      ? (a.dir == ArcDir::Right ? c.cache[0] : c.rightmost())
                                              : -1;
  std::size_t before = c.graph.size();
  apply_in_place(c, a);
  for (std::size_t v = before; v < c.graph.size(); ++v) c.types.push_back(g.types_of(c.graph.vertices[v].symbol));
  if (composed) c.types[static_cast<std::size_t>(head)] = std::move(*composed);
}

std::vector<Action> lexicon_filter_actions(const Config& c, const std::vector<Action>& legal, const Lexicon& lex) {
  if (c.phase != Phase::NameGen && c.phase != Phase::LemmaGen && c.phase != Phase::TokenGen) return legal;
  std::string stem = c.front_stem(c.phase);
  const std::set<std::string>* allowed = lex.lookup(stem);
  if (!allowed) return legal;
  std::vector<Action> out;
  for (const auto& a : legal)
    if (a.kind != ActionKind::Suffix || allowed->count(suffix_atom(c, a.value).render())) out.push_back(a);
  bool any_suffix = false;
  for (const auto& a : out) any_suffix = any_suffix || a.kind == ActionKind::Suffix;
  return any_suffix ? out : legal;
}

}  // namespace ulf
