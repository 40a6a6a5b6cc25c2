#include "ulf/typesys.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace ulf {

// ---------------------------------------------------------------- SemType

SemType SemType::atomic(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Atomic;
  n->name = std::move(name);
  return SemType(std::move(n));
}

SemType SemType::function(SemType arg, SemType result, bool variadic) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Function;
  n->variadic = variadic;
  n->arg = std::make_shared<const SemType>(std::move(arg));
  n->result = std::make_shared<const SemType>(std::move(result));
  return SemType(std::move(n));
}

SemType SemType::any() {
  static const SemType a(std::make_shared<Node>());
  return a;
}

SemType SemType::var(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Var;
  n->name = std::move(name);
  return SemType(std::move(n));
}

SemType SemType::macro(std::string name, int stage) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Macro;
  n->name = std::move(name);
  n->stage = stage;
  return SemType(std::move(n));
}

std::string SemType::render() const {
  switch (kind()) {
    case Kind::Atomic:
      return name();
    case Kind::Any:
      return "_";
    case Kind::Var:
      return "'" + name();
    case Kind::Macro:
      return "{" + name() + (stage() ? "#" + std::to_string(stage()) : "") + "}";
    case Kind::Function:
      return "(" + arg().render() + (variadic() ? "*" : "") + " -> " + result().render() + ")";
  }
  return "_";
}

bool operator==(const SemType& a, const SemType& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case SemType::Kind::Any:
      return true;
    case SemType::Kind::Atomic:
    case SemType::Kind::Var:
      return a.name() == b.name();
    case SemType::Kind::Macro:
      return a.name() == b.name() && a.stage() == b.stage();
    case SemType::Kind::Function:
      return a.variadic() == b.variadic() && a.arg() == b.arg() && a.result() == b.result();
  }
  return false;
}

std::string render(const TypeSet& ts) {
  std::string out;
  for (std::size_t i = 0; i < ts.size(); ++i) out += (i ? " | " : "") + ts[i].render();
  return out;
}

// ---------------------------------------------------------------- parsing

namespace {

struct TypeLexer {
  std::string_view s;
  std::size_t pos = 0;
  const std::map<std::string, SemType>& abbrev;

  void ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  [[noreturn]] void fail(const std::string& what) {
    throw ParseError("type: " + what + " at offset " + std::to_string(pos) + " in '" + std::string(s) + "'");
  }
  bool eat(std::string_view tok) {
    ws();
    if (s.substr(pos, tok.size()) == tok) {
      pos += tok.size();
      return true;
    }
    return false;
  }
  std::string ident() {
    ws();
    std::size_t start = pos;
    while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_' ||
                              (s[pos] == '-' && (pos + 1 >= s.size() || s[pos + 1] != '>'))))
      ++pos;
    if (pos == start) fail("expected identifier");
    return std::string(s.substr(start, pos - start));
  }

  SemType type() {
    ws();
    if (pos >= s.size()) fail("unexpected end");
    char c = s[pos];
    if (c == '(') {
      ++pos;
      SemType arg = type();
      bool variadic = eat("*");
      if (!eat("->")) fail("expected '->'");
      SemType res = type();
      if (!eat(")")) fail("expected ')'");
      return SemType::function(std::move(arg), std::move(res), variadic);
    }
    if (c == '_' && (pos + 1 >= s.size() || !std::isalnum(static_cast<unsigned char>(s[pos + 1])))) {
      ++pos;
      return SemType::any();
    }
    if (c == '\'') {
      ++pos;
      return SemType::var(ident());
    }
    if (c == '{') {
      ++pos;
      std::string n = ident();
      if (!eat("}")) fail("expected '}'");
      return SemType::macro(std::move(n));
    }
    std::string n = ident();
    if (auto it = abbrev.find(n); it != abbrev.end()) return it->second;
    return SemType::atomic(std::move(n));
  }
};

}  // namespace

SemType parse_type(std::string_view text, const std::map<std::string, SemType>& abbreviations) {
  TypeLexer lx{text, 0, abbreviations};
  SemType t = lx.type();
  lx.ws();
  if (lx.pos != text.size()) lx.fail("trailing input");
  return t;
}

TypeSet parse_type_alternatives(std::string_view text, const std::map<std::string, SemType>& abbreviations) {
  TypeLexer lx{text, 0, abbreviations};
  TypeSet out;
  do {
    out.push_back(lx.type());
  } while (lx.eat("|"));
  lx.ws();
  if (lx.pos != text.size()) lx.fail("trailing input");
  return out;
}

// ---------------------------------------------------------------- unification

namespace {

using Bindings = std::map<std::string, SemType>;

SemType substitute(const SemType& t, const Bindings& b) {
  switch (t.kind()) {
    case SemType::Kind::Var: {
      auto it = b.find(t.name());
      return it == b.end() ? SemType::any() : it->second;
    }
    case SemType::Kind::Function:
      return SemType::function(substitute(t.arg(), b), substitute(t.result(), b), t.variadic());
    default:
      return t;
  }
}

bool unify(const SemType& value, const SemType& slot, Bindings& b) {
  if (value.absorbs() || slot.absorbs()) return true;
  if (slot.kind() == SemType::Kind::Var) {
    if (auto it = b.find(slot.name()); it != b.end()) return unify(value, it->second, b);
    b.emplace(slot.name(), value);
    return true;
  }
  if (value.kind() == SemType::Kind::Var) return true;
  if (value.is_function() && slot.is_function() && value.variadic() == slot.variadic()) {
    Bindings trial = b;
    if (unify(value.arg(), slot.arg(), trial) && unify(value.result(), slot.result(), trial)) {
      b = std::move(trial);
      return true;
    }
  }
  // Either side may be a variadic function taking zero arguments.
  if (value.is_function() && value.variadic() && unify(value.result(), slot, b)) return true;
  if (slot.is_function() && slot.variadic() && unify(value, slot.result(), b)) return true;
  if (value.kind() == SemType::Kind::Atomic && slot.kind() == SemType::Kind::Atomic) return value.name() == slot.name();
  return false;
}

// Operator in first position: a variadic operator keeps accepting arguments.
std::optional<SemType> apply_first(const SemType& f, const SemType& x) {
  if (f.absorbs()) return f.kind() == SemType::Kind::Macro ? SemType::macro(f.name(), f.stage() + 1) : SemType::any();
  if (!f.is_function()) return std::nullopt;
  Bindings b;
  if (unify(x, f.arg(), b)) return f.variadic() ? f : substitute(f.result(), b);
  if (f.variadic()) return apply_first(f.result(), x);
  return std::nullopt;
}

// Operator in second position: the argument is the last one it takes.
std::optional<SemType> apply_second(const SemType& f, const SemType& x) {
  if (f.absorbs()) return f.kind() == SemType::Kind::Macro ? SemType::macro(f.name(), f.stage() + 1) : SemType::any();
  if (!f.is_function()) return std::nullopt;
  if (f.variadic()) return apply_second(f.result(), x);
  Bindings b;
  if (unify(x, f.arg(), b)) return substitute(f.result(), b);
  return std::nullopt;
}

}  // namespace

bool unifies(const SemType& value, const SemType& slot) {
  Bindings b;
  return unify(value, slot, b);
}

std::optional<SemType> compose(const SemType& head, const SemType& dependent) {
  if (head.absorbs() || dependent.absorbs()) {
    const SemType& m = head.kind() == SemType::Kind::Macro ? head : dependent;
    if (m.kind() == SemType::Kind::Macro) return SemType::macro(m.name(), m.stage() + 1);
    return SemType::any();
  }
  if (auto r = apply_first(head, dependent)) return r;
  return apply_second(dependent, head);
}

TypeSet compose(const TypeSet& head, const TypeSet& dependent) {
  TypeSet out;
  for (const auto& h : head)
    for (const auto& d : dependent)
      if (auto r = compose(h, d))
        if (std::find(out.begin(), out.end(), *r) == out.end()) out.push_back(*r);
  return out;
}

TypeSet compose_edge(const TypeSet& head, const TypeSet& dependent, std::string_view role) {
  if (role == kInstanceRole) return dependent;
  return compose(head, dependent);
}

// ---------------------------------------------------------------- grammar

TypeGrammar TypeGrammar::parse(std::string_view text) {
  TypeGrammar g;
  std::map<std::string, SemType> abbrev;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string keyword;
    if (!(ls >> keyword)) continue;
    auto eq = line.find('=', line.find(keyword) + keyword.size());
    // "op = = ..." names the equality operator; skip the symbol's own '='.
    std::string key;
    if (keyword != "name") {
      if (!(ls >> key)) throw ParseError("type grammar line " + std::to_string(lineno) + ": missing symbol");
      eq = line.find('=', line.find(key, line.find(keyword) + keyword.size()) + key.size());
    }
    if (eq == std::string::npos) throw ParseError("type grammar line " + std::to_string(lineno) + ": missing '='");
    std::string rhs = line.substr(eq + 1);
    try {
      if (keyword == "define") {
        abbrev.insert_or_assign(key, parse_type(rhs, abbrev));
      } else if (keyword == "suffix") {
        g.suffixes.insert_or_assign(key, parse_type_alternatives(rhs, abbrev));
      } else if (keyword == "op") {
        g.operators.insert_or_assign(key, parse_type_alternatives(rhs, abbrev));
      } else if (keyword == "name") {
        g.name_type = parse_type_alternatives(rhs, abbrev);
      } else {
        throw ParseError("unknown keyword '" + keyword + "'");
      }
    } catch (const ParseError& e) {
      throw ParseError("type grammar line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return g;
}

TypeGrammar TypeGrammar::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open type grammar " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const TypeGrammar& TypeGrammar::builtin() {
  static const TypeGrammar g = parse(kDefaultTypeGrammar);
  return g;
}

TypeSet TypeGrammar::types_of(const Atom& a) const {
  switch (a.kind) {
    case AtomKind::Name:
      return name_type;
    case AtomKind::Suffixed:
      if (auto it = suffixes.find(a.tag); it != suffixes.end()) return it->second;
      return {SemType::any()};
    case AtomKind::Operator:
      if (auto it = operators.find(a.stem); it != operators.end()) return it->second;
      return {SemType::any()};
  }
  return {SemType::any()};
}

std::set<std::string> TypeGrammar::unknown_suffixes(const std::set<std::string>& tags) const {
  std::set<std::string> out;
  for (const auto& t : tags)
    if (!suffixes.count(t)) out.insert(t);
  return out;
}

SemType type_of(const Atom& a, const TypeGrammar& g) { return g.types_of(a).front(); }

std::vector<int> type_violations(const UlfGraph& g, const TypeGrammar& grammar) {
  std::vector<int> bad;
  std::vector<TypeSet> memo(g.size());
  std::vector<bool> done(g.size(), false);
  // Children before parents: process in reverse preorder from each root.
  std::vector<int> order;
  for (int r : g.roots()) {
    std::vector<int> stack{r};
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      order.push_back(v);
      for (const Edge* e : g.outgoing(v)) stack.push_back(e->dst);
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int v = *it;
    TypeSet t = grammar.types_of(g.vertices[static_cast<std::size_t>(v)].symbol);
    for (const Edge* e : g.outgoing(v)) {
      TypeSet next = compose_edge(t, memo[static_cast<std::size_t>(e->dst)], e->label);
      if (next.empty()) {
        bad.push_back(v);
        next = {SemType::any()};
      }
      t = std::move(next);
    }
    memo[static_cast<std::size_t>(v)] = std::move(t);
    done[static_cast<std::size_t>(v)] = true;
  }
  std::sort(bad.begin(), bad.end());
  bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
  return bad;
}

// ---------------------------------------------------------------- lexicon

void Lexicon::add(std::string_view stem, const Atom& atom) { entries_[to_lower(stem)].insert(atom.render()); }

const std::set<std::string>* Lexicon::lookup(std::string_view stem) const {
  auto it = entries_.find(to_lower(stem));
  return it == entries_.end() ? nullptr : &it->second;
}

Lexicon Lexicon::parse_tsv(std::string_view text) {
  Lexicon lex;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("lexicon line " + std::to_string(lineno) + ": missing tab");
    std::string stem = line.substr(0, tab);
    auto& slot = lex.entries_[to_lower(stem)];
    // Atoms are space-separated; a |name| may itself contain spaces.
    std::string rest = line.substr(tab + 1), a;
    bool in_pipe = false;
    auto flush = [&] {
      if (a.empty()) return;
      try {
        slot.insert(Atom::parse(a).render());
      } catch (const ParseError& e) {
        throw ParseError("lexicon line " + std::to_string(lineno) + ": " + e.what());
      }
      a.clear();
    };
    for (char ch : rest) {
      if (ch == '|') in_pipe = !in_pipe;
      if (!in_pipe && (ch == ' ' || ch == '\t' || ch == '\r')) flush();
      else a += ch;
    }
    if (in_pipe) throw ParseError("lexicon line " + std::to_string(lineno) + ": unterminated pipe");
    flush();
  }
  return lex;
}

Lexicon Lexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_tsv(ss.str());
}

std::string Lexicon::to_tsv() const {
  std::string out;
  for (const auto& [stem, atoms] : entries_) {
    out += stem;
    out += '\t';
    bool first = true;
    for (const auto& a : atoms) {
      if (!first) out += ' ';
      first = false;
      out += a;
    }
    out += '\n';
  }
  return out;
}

std::set<Atom> lexicon_filter(const Token& word, const std::set<Atom>& candidates, const Lexicon& lex) {
  const auto* allowed = lex.lookup(word.surface);
  if (!allowed) allowed = lex.lookup(word.lemma);
  if (!allowed) return candidates;
  std::set<Atom> out;
  for (const auto& c : candidates)
    if (allowed->count(c.render())) out.insert(c);
  return out;
}

}  // namespace ulf
