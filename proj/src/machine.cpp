#include "ulf/machine.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <sstream>

namespace ulf {

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::Gen: return "GEN";
    case Phase::WordGen: return "WORDGEN";
    case Phase::NameGen: return "NAMEGEN";
    case Phase::LemmaGen: return "LEMMAGEN";
    case Phase::TokenGen: return "TOKENGEN";
    case Phase::Push: return "PUSH";
    case Phase::Arc: return "ARC";
    case Phase::Promote: return "PROMOTE";
    case Phase::PromoteArc: return "PROMOTEARC";
    case Phase::Pop: return "POP";
  }
  return "?";
}

// ---------------------------------------------------------------- action text

namespace {
const std::map<ActionKind, std::string>& simple_names() {
  static const std::map<ActionKind, std::string> m{
      {ActionKind::NoArc, "NOARC"},     {ActionKind::Pop, "POP"},         {ActionKind::NoPop, "NOPOP"},
      {ActionKind::SkipWord, "SKIP"},   {ActionKind::WordGen, "WORDGEN"}, {ActionKind::Name, "NAME"},
      {ActionKind::Lemma, "LEMMA"},     {ActionKind::Token, "TOKEN"},     {ActionKind::MergeBuf, "MERGEBUF"},
      {ActionKind::NoPromote, "NOPROMOTE"}};
  return m;
}
}  // namespace

std::string Action::to_string() const {
  switch (kind) {
    case ActionKind::PushIndex:
      return "PUSHIDX:" + std::to_string(index);
    case ActionKind::Arc:
      return "ARC:" + std::to_string(index) + ":" + (dir == ArcDir::Left ? "left" : "right") + ":" + label;
    case ActionKind::Suffix:
      return "SUFFIX:" + value;
    case ActionKind::SymGen:
      return "SYMGEN:" + value;
    case ActionKind::PromoteSym:
      return "PROMOTE_SYM:" + value;
    case ActionKind::PromoteArc:
      return "PROMOTE_ARC:" + label;
    default:
      return simple_names().at(kind);
  }
}

Action Action::parse(std::string_view line) {
  std::string s(line);
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  auto rest_after = [&](std::string_view prefix) -> std::optional<std::string> {
    if (s.rfind(prefix, 0) == 0) return s.substr(prefix.size());
    return std::nullopt;
  };
  if (auto r = rest_after("PUSHIDX:")) {
    if (*r != "0" && *r != "1") throw ParseError("bad cache index in action: " + s);
    return push_index(std::stoi(*r));
  }
  if (auto r = rest_after("ARC:")) {
    // ARC:<i>:<left|right>:<label>
    auto c1 = r->find(':');
    if (c1 == std::string::npos) throw ParseError("malformed ARC action: " + s);
    auto c2 = r->find(':', c1 + 1);
    if (c2 == std::string::npos) throw ParseError("malformed ARC action: " + s);
    std::string idx = r->substr(0, c1), dir = r->substr(c1 + 1, c2 - c1 - 1), label = r->substr(c2 + 1);
    if (idx != "0" && idx != "1") throw ParseError("bad cache index in action: " + s);
    if (dir != "left" && dir != "right") throw ParseError("bad arc direction in action: " + s);
    if (label.empty() || label[0] != ':') throw ParseError("arc label must start with ':' in action: " + s);
    return arc(std::stoi(idx), dir == "left" ? ArcDir::Left : ArcDir::Right, label);
  }
  if (auto r = rest_after("SUFFIX:")) return suffix(*r);
  if (auto r = rest_after("SYMGEN:")) {
    if (r->empty()) throw ParseError("empty SymGen symbol");
    return sym_gen(Atom::parse(*r).render());
  }
  if (auto r = rest_after("PROMOTE_SYM:")) {
    if (r->empty()) throw ParseError("empty PromoteSym symbol");
    return promote_sym(Atom::parse(*r).render());
  }
  if (auto r = rest_after("PROMOTE_ARC:")) {
    if (r->empty() || (*r)[0] != ':') throw ParseError("promote arc label must start with ':' in action: " + s);
    return promote_arc(*r);
  }
  for (const auto& [k, name] : simple_names())
    if (s == name) return simple(k);
  throw ParseError("unknown action: " + s);
}

std::vector<Action> parse_action_sequence(std::string_view text) {
  std::vector<Action> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(Action::parse(line));
  }
  return out;
}

std::string format_action_sequence(const std::vector<Action>& actions) {
  std::string out;
  for (const auto& a : actions) {
    out += a.to_string();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------- configuration

Config init(std::shared_ptr<const Sentence> sentence) {
  if (!sentence || sentence->tokens.empty()) throw std::invalid_argument("init: empty sentence");
  Config c;
  c.sentence = std::move(sentence);
  return c;
}

Config init(const Sentence& sentence) { return init(std::make_shared<const Sentence>(sentence)); }

std::vector<int> Config::front_words() const {
  std::vector<int> out;
  for (int k = 0; k < merged && cursor + k < words(); ++k) out.push_back(cursor + k + 1);
  return out;
}

std::string Config::front_stem(Phase gen_phase) const {
  std::string out;
  for (int w : front_words()) {
    const Token& t = sentence->at(w);
    if (!out.empty()) out += gen_phase == Phase::NameGen ? " " : "_";
    switch (gen_phase) {
      case Phase::NameGen: out += t.surface; break;
      case Phase::LemmaGen: out += to_lower(t.lemma); break;
      default: out += to_lower(t.surface); break;
    }
  }
  return out;
}

namespace {

bool both_slots_free_for_arc(const Config& c) {
  int a = c.cache[0], b = c.rightmost();
  return a >= 0 && b >= 0 && !c.attached(a) && !c.attached(b);
}

// :INSTANCE hangs only off COMPLEX, and no head takes a role twice.
bool role_fits(const Config& c, int head, const std::string& label) {
  const Atom& h = c.graph.vertices[static_cast<std::size_t>(head)].symbol;
  if (label == kInstanceRole && !(h.kind == AtomKind::Operator && h.stem == kComplexLabel)) return false;
  for (const auto& e : c.graph.edges)
    if (e.src == head && e.label == label) return false;
  return true;
}

int add_vertex(Config& c, Atom sym, std::optional<int> alignment) {
  int v = c.graph.add_vertex(Vertex{std::move(sym), alignment});
  if (c.graph.root < 0) c.graph.root = v;
  return v;
}

}  // namespace

bool is_legal(const Config& c, const Action& a) {
  switch (c.phase) {
    case Phase::Gen:
      switch (a.kind) {
        case ActionKind::WordGen:
        case ActionKind::SkipWord:
          return !c.buffer_empty();
        case ActionKind::MergeBuf:
          return c.cursor + c.merged < c.words();
        case ActionKind::SymGen:
          return !a.value.empty();
        default:
          return false;
      }
    case Phase::WordGen:
      return a.kind == ActionKind::Name || a.kind == ActionKind::Lemma || a.kind == ActionKind::Token;
    case Phase::NameGen:
    case Phase::LemmaGen:
    case Phase::TokenGen:
      return a.kind == ActionKind::Suffix && !c.buffer_empty();
    case Phase::Push:
      return a.kind == ActionKind::PushIndex && c.pending >= 0 && (a.index == 0 || a.index == 1);
    case Phase::Arc:
      if (a.kind == ActionKind::NoArc) return true;
      return a.kind == ActionKind::Arc && a.index == 0 && !a.label.empty() && both_slots_free_for_arc(c) &&
             role_fits(c, a.dir == ArcDir::Left ? c.rightmost() : c.cache[0], a.label);
    case Phase::Promote:
      if (a.kind == ActionKind::NoPromote) return true;
      return a.kind == ActionKind::PromoteSym && !a.value.empty() && c.rightmost() >= 0 && !c.attached(c.rightmost());
    case Phase::PromoteArc:
      return a.kind == ActionKind::PromoteArc && !a.label.empty() && c.promoted >= 0 && c.rightmost() >= 0 &&
             role_fits(c, c.promoted, a.label);
    case Phase::Pop:
      if (a.kind == ActionKind::NoPop) return true;
      return a.kind == ActionKind::Pop && !c.stack.empty();
  }
  return false;
}

std::vector<Action> legal_actions(const Config& c, const ActionVocab& vocab) {
  std::vector<Action> cands;
  switch (c.phase) {
    case Phase::Gen:
      cands.push_back(Action::simple(ActionKind::WordGen));
      for (const auto& s : vocab.symgen) cands.push_back(Action::sym_gen(s));
      cands.push_back(Action::simple(ActionKind::SkipWord));
      cands.push_back(Action::simple(ActionKind::MergeBuf));
      break;
    case Phase::WordGen:
      cands = {Action::simple(ActionKind::Name), Action::simple(ActionKind::Lemma), Action::simple(ActionKind::Token)};
      break;
    case Phase::NameGen:
    case Phase::LemmaGen:
    case Phase::TokenGen:
      for (const auto& e : vocab.suffixes) cands.push_back(Action::suffix(e));
      break;
    case Phase::Push:
      cands = {Action::push_index(0), Action::push_index(1)};
      break;
    case Phase::Arc:
      for (const auto& l : vocab.labels) {
        cands.push_back(Action::arc(0, ArcDir::Left, l));
        cands.push_back(Action::arc(0, ArcDir::Right, l));
      }
      cands.push_back(Action::simple(ActionKind::NoArc));
      break;
    case Phase::Promote:
      for (const auto& s : vocab.promote) cands.push_back(Action::promote_sym(s));
      cands.push_back(Action::simple(ActionKind::NoPromote));
      break;
    case Phase::PromoteArc:
      for (const auto& l : vocab.labels) cands.push_back(Action::promote_arc(l));
      break;
    case Phase::Pop:
      cands = {Action::simple(ActionKind::Pop), Action::simple(ActionKind::NoPop)};
      break;
  }
  std::vector<Action> out;
  for (auto& a : cands)
    if (is_legal(c, a)) out.push_back(std::move(a));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void apply_in_place(Config& c, const Action& a) {
  if (!is_legal(c, a))
    throw IllegalAction("illegal action " + a.to_string() + " in phase " + std::string(phase_name(c.phase)));
  switch (a.kind) {
    case ActionKind::WordGen:
      c.phase = Phase::WordGen;
      break;
    case ActionKind::Name:
      c.phase = Phase::NameGen;
      break;
    case ActionKind::Lemma:
      c.phase = Phase::LemmaGen;
      break;
    case ActionKind::Token:
      c.phase = Phase::TokenGen;
      break;
    case ActionKind::Suffix: {
      std::string stem = c.front_stem(c.phase);
      Atom sym = c.phase == Phase::NameGen ? Atom::name(stem, a.value)
                 : a.value.empty()         ? Atom::op(stem)
                                           : Atom::suffixed(stem, a.value);
      c.pending = add_vertex(c, std::move(sym), c.cursor + 1);
      c.cursor += c.merged;
      c.merged = 1;
      c.phase = Phase::Push;
      break;
    }
    case ActionKind::SymGen:
      c.pending = add_vertex(c, Atom::parse(a.value), std::nullopt);
      c.phase = Phase::Push;
      break;
    case ActionKind::SkipWord:
      c.cursor += c.merged;
      c.merged = 1;
      break;
    case ActionKind::MergeBuf:
      ++c.merged;
      break;
    case ActionKind::PushIndex: {
      // The evicted slot goes to the stack; later slots shift left and the
      // new vertex takes the rightmost position.
      c.stack.push_back(StackEntry{a.index, c.cache[static_cast<std::size_t>(a.index)]});
      for (int i = a.index; i + 1 < kCacheSize; ++i) c.cache[static_cast<std::size_t>(i)] = c.cache[static_cast<std::size_t>(i + 1)];
      c.cache[kCacheSize - 1] = c.pending;
      c.pending = -1;
      c.phase = Phase::Arc;
      break;
    }
    case ActionKind::Arc: {
      int other = c.cache[static_cast<std::size_t>(a.index)], right = c.rightmost();
      int head = a.dir == ArcDir::Right ? other : right;
      int dep = a.dir == ArcDir::Right ? right : other;
      c.graph.add_edge(head, dep, a.label);
      c.phase = Phase::Promote;
      break;
    }
    case ActionKind::NoArc:
      c.phase = Phase::Promote;
      break;
    case ActionKind::PromoteSym:
      c.promoted = add_vertex(c, Atom::parse(a.value), std::nullopt);
      c.phase = Phase::PromoteArc;
      break;
    case ActionKind::PromoteArc:
      c.graph.add_edge(c.promoted, c.rightmost(), a.label);
      c.cache[kCacheSize - 1] = c.promoted;
      c.promoted = -1;
      c.phase = Phase::Arc;
      break;
    case ActionKind::NoPromote:
      c.phase = Phase::Pop;
      break;
    case ActionKind::Pop: {
      StackEntry top = c.stack.back();
      c.stack.pop_back();
      for (int i = kCacheSize - 1; i > top.slot; --i) c.cache[static_cast<std::size_t>(i)] = c.cache[static_cast<std::size_t>(i - 1)];
      c.cache[static_cast<std::size_t>(top.slot)] = top.vertex;
      c.phase = Phase::Arc;
      break;
    }
    case ActionKind::NoPop:
      c.phase = Phase::Gen;
      break;
  }
  // Root tracking: the first root in creation order.
  if (!c.graph.empty()) {
    auto rs = c.graph.roots();
    c.graph.root = rs.empty() ? -1 : rs.front();
  }
  ++c.steps;
  c.last = a;
}

Config apply(const Config& c, const Action& a) {
  Config next = c;
  apply_in_place(next, a);
  return next;
}

bool is_terminal(const Config& c) {
  return c.phase == Phase::Gen && c.buffer_empty() && c.stack.empty() && c.last &&
         (c.last->kind == ActionKind::NoPop || c.last->kind == ActionKind::SkipWord);
}

std::vector<UlfGraph> extract_result(const Config& c) { return c.graph.components(); }

Config replay(const Sentence& sentence, const std::vector<Action>& actions) {
  Config c = init(sentence);
  for (const auto& a : actions) apply_in_place(c, a);
  return c;
}

std::string check_config(const Config& c) {
  const int n = static_cast<int>(c.graph.size());
  std::vector<int> where(static_cast<std::size_t>(n), 0);  // 0 retired, 1 cache, 2 stack, 3 pending/promoted
  auto mark = [&](int v, int place) -> std::string {
    if (v < 0) return {};
    if (v >= n) return "vertex id out of range";
    if (where[static_cast<std::size_t>(v)] != 0) return "vertex " + std::to_string(v) + " held twice";
    where[static_cast<std::size_t>(v)] = place;
    return {};
  };
  for (int v : c.cache)
    if (auto e = mark(v, 1); !e.empty()) return e;
  for (const auto& s : c.stack) {
    if (s.slot < 0 || s.slot >= kCacheSize) return "stack entry with bad slot";
    if (auto e = mark(s.vertex, 2); !e.empty()) return e;
  }
  if (auto e = mark(c.pending, 3); !e.empty()) return e;
  if (auto e = mark(c.promoted, 3); !e.empty()) return e;
  if (!c.graph.is_forest()) return "partial graph is not a forest";
  if (c.cursor < 0 || c.cursor > c.words()) return "cursor out of range";
  if (c.merged < 1) return "bad merge count";
  for (const auto& v : c.graph.vertices)
    if (v.alignment && (*v.alignment < 1 || *v.alignment > c.words())) return "alignment out of range";
  return {};
}

}  // namespace ulf
