#include "ulf/core.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <sstream>

namespace ulf {

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Sentence Sentence::from_words(std::string_view text) {
  Sentence s;
  s.raw = std::string(text);
  std::istringstream in{std::string(text)};
  std::string w;
  int i = 1;
  while (in >> w) s.tokens.push_back(Token{w, to_lower(w), "", "", i++});
  return s;
}

// ---------------------------------------------------------------- atoms

Atom Atom::suffixed(std::string stem, std::string tag) {
  return Atom{std::move(stem), AtomKind::Suffixed, std::move(tag)};
}
Atom Atom::name(std::string stem, std::string tag) {
  return Atom{std::move(stem), AtomKind::Name, std::move(tag)};
}
Atom Atom::op(std::string stem) { return Atom{std::move(stem), AtomKind::Operator, {}}; }

Atom Atom::parse(std::string_view s) {
  if (s.empty()) throw ParseError("empty atom");
  if (s.front() == '|') {
    auto close = s.find('|', 1);
    if (close == std::string_view::npos) throw ParseError("unterminated pipe in atom: " + std::string(s));
    std::string stem(s.substr(1, close - 1));
    auto rest = s.substr(close + 1);
    if (rest.empty()) return name(std::move(stem));
    if (rest.size() > 1 && rest.front() == '.') return name(std::move(stem), std::string(rest.substr(1)));
    throw ParseError("trailing characters after name: " + std::string(s));
  }
  auto dot = s.rfind('.');
  if (dot != std::string_view::npos && dot > 0 && dot + 1 < s.size())
    return suffixed(std::string(s.substr(0, dot)), std::string(s.substr(dot + 1)));
  return op(std::string(s));
}

std::string Atom::render() const {
  switch (kind) {
    case AtomKind::Suffixed:
      return stem + "." + tag;
    case AtomKind::Name:
      return tag.empty() ? "|" + stem + "|" : "|" + stem + "|." + tag;
    case AtomKind::Operator:
      return stem;
  }
  return stem;
}

std::string arg_role(int k) { return ":ARG" + std::to_string(k); }

std::optional<int> arg_index(std::string_view role) {
  if (role.size() <= 4 || role.substr(0, 4) != ":ARG") return std::nullopt;
  int k = 0;
  for (char c : role.substr(4)) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    k = k * 10 + (c - '0');
  }
  return k;
}

// ---------------------------------------------------------------- s-expressions

namespace {

struct Lexer {
  std::string_view text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= text.size();
  }
  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }
  // Reads an atom spelling; pipes group everything up to the closing pipe.
  std::string word() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size()) {
      char c = text[pos];
      if (c == '|') {
        auto close = text.find('|', pos + 1);
        if (close == std::string_view::npos) throw ParseError("unterminated pipe at offset " + std::to_string(pos));
        pos = close + 1;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')') break;
      ++pos;
    }
    if (pos == start) throw ParseError("expected atom at offset " + std::to_string(pos));
    return std::string(text.substr(start, pos - start));
  }
};

UlfTree read_tree(Lexer& lx) {
  char c = lx.peek();
  if (c == '\0') throw ParseError("unbalanced parentheses: unexpected end of input");
  if (c == ')') throw ParseError("unbalanced parentheses: unexpected ')' at offset " + std::to_string(lx.pos));
  if (c == '(') {
    ++lx.pos;
    std::vector<UlfTree> kids;
    while (true) {
      char d = lx.peek();
      if (d == '\0') throw ParseError("unbalanced parentheses: missing ')'");
      if (d == ')') {
        ++lx.pos;
        break;
      }
      kids.push_back(read_tree(lx));
    }
    if (kids.empty()) throw ParseError("empty list '()'");
    return UlfTree(std::move(kids));
  }
  return UlfTree(Atom::parse(lx.word()));
}

void write_tree(const UlfTree& t, std::string& out) {
  if (t.is_atom()) {
    out += t.atom().render();
    return;
  }
  out += '(';
  bool first = true;
  for (const auto& k : t.children()) {
    if (!first) out += ' ';
    first = false;
    write_tree(k, out);
  }
  out += ')';
}

}  // namespace

std::size_t UlfTree::atom_count() const {
  if (is_atom()) return 1;
  std::size_t n = 0;
  for (const auto& k : children()) n += k.atom_count();
  return n;
}

std::string UlfTree::to_string() const {
  std::string out;
  write_tree(*this, out);
  return out;
}

UlfTree parse_sexpr(std::string_view text) {
  Lexer lx{text};
  if (lx.done()) throw ParseError("empty input");
  UlfTree t = read_tree(lx);
  if (!lx.done()) throw ParseError("unbalanced parentheses: trailing input at offset " + std::to_string(lx.pos));
  return t;
}

std::vector<UlfTree> parse_sexpr_list(std::string_view text) {
  Lexer lx{text};
  std::vector<UlfTree> out;
  while (!lx.done()) out.push_back(read_tree(lx));
  return out;
}

// ---------------------------------------------------------------- graphs

int UlfGraph::add_vertex(Vertex v) {
  vertices.push_back(std::move(v));
  return static_cast<int>(vertices.size()) - 1;
}

void UlfGraph::add_edge(int src, int dst, std::string label) {
  edges.push_back(Edge{src, dst, std::move(label)});
}

const Edge* UlfGraph::incoming(int v) const {
  for (const auto& e : edges)
    if (e.dst == v) return &e;
  return nullptr;
}

int UlfGraph::parent(int v) const {
  const Edge* e = incoming(v);
  return e ? e->src : -1;
}

namespace {
// :INSTANCE first, then :ARGk by k, then anything else lexicographically.
std::tuple<int, int, std::string> role_key(const std::string& role) {
  if (role == kInstanceRole) return {0, 0, {}};
  if (auto k = arg_index(role)) return {1, *k, {}};
  return {2, 0, role};
}
}  // namespace

std::vector<const Edge*> UlfGraph::outgoing(int v) const {
  std::vector<const Edge*> out;
  for (const auto& e : edges)
    if (e.src == v) out.push_back(&e);
  std::stable_sort(out.begin(), out.end(),
                   [](const Edge* a, const Edge* b) { return role_key(a->label) < role_key(b->label); });
  return out;
}

std::vector<int> UlfGraph::roots() const {
  std::vector<bool> has_parent(vertices.size(), false);
  for (const auto& e : edges) has_parent[static_cast<std::size_t>(e.dst)] = true;
  std::vector<int> out;
  for (std::size_t i = 0; i < vertices.size(); ++i)
    if (!has_parent[i]) out.push_back(static_cast<int>(i));
  return out;
}

int UlfGraph::descendant_count(int v) const {
  int n = 0;
  std::vector<int> todo{v};
  std::vector<bool> seen(vertices.size(), false);
  seen[static_cast<std::size_t>(v)] = true;
  while (!todo.empty()) {
    int u = todo.back();
    todo.pop_back();
    for (const auto& e : edges)
      if (e.src == u && !seen[static_cast<std::size_t>(e.dst)]) {
        seen[static_cast<std::size_t>(e.dst)] = true;
        ++n;
        todo.push_back(e.dst);
      }
  }
  return n;
}

bool UlfGraph::is_forest() const {
  std::vector<int> indeg(vertices.size(), 0);
  for (const auto& e : edges) {
    if (e.src < 0 || e.dst < 0 || e.src >= static_cast<int>(size()) || e.dst >= static_cast<int>(size())) return false;
    if (++indeg[static_cast<std::size_t>(e.dst)] > 1) return false;
  }
  // Every vertex must reach a root walking parents without revisiting.
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    int cur = static_cast<int>(v);
    std::size_t steps = 0;
    while ((cur = parent(cur)) != -1)
      if (++steps > vertices.size()) return false;
  }
  return true;
}

void UlfGraph::validate_tree() const {
  if (vertices.empty()) throw GraphError("empty graph");
  if (!is_forest()) throw GraphError("graph has a cycle or a vertex with multiple parents");
  auto rs = roots();
  if (rs.size() != 1) throw GraphError("graph has " + std::to_string(rs.size()) + " roots");
  if (root != rs.front()) throw GraphError("root designation does not match the unique root");
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    bool complex = vertices[v].symbol.kind == AtomKind::Operator && vertices[v].symbol.stem == kComplexLabel;
    int expected_arg = 0;
    bool saw_instance = false;
    for (const Edge* e : outgoing(static_cast<int>(v))) {
      if (e->label == kInstanceRole) {
        if (!complex) throw GraphError(":INSTANCE edge on a non-COMPLEX vertex");
        if (saw_instance) throw GraphError("COMPLEX vertex with two :INSTANCE edges");
        saw_instance = true;
        continue;
      }
      auto k = arg_index(e->label);
      if (!k) throw GraphError("unknown edge role " + e->label);
      if (*k != expected_arg) throw GraphError("non-consecutive :ARGk labels at vertex " + std::to_string(v));
      ++expected_arg;
    }
    if (complex && !saw_instance) throw GraphError("COMPLEX vertex without :INSTANCE edge");
  }
}

namespace {
void preorder(const UlfGraph& g, int v, std::vector<int>& order) {
  order.push_back(v);
  for (const Edge* e : g.outgoing(v)) preorder(g, e->dst, order);
}

UlfGraph renumber(const UlfGraph& g, const std::vector<int>& order) {
  std::vector<int> index(g.size(), -1);
  UlfGraph out;
  for (int v : order) index[static_cast<std::size_t>(v)] = out.add_vertex(g.vertices[static_cast<std::size_t>(v)]);
  for (int v : order)
    for (const Edge* e : g.outgoing(v))
      out.add_edge(index[static_cast<std::size_t>(e->src)], index[static_cast<std::size_t>(e->dst)], e->label);
  out.root = order.empty() ? -1 : 0;
  return out;
}
}  // namespace

std::vector<UlfGraph> UlfGraph::components() const {
  std::vector<UlfGraph> out;
  for (int r : roots()) {
    std::vector<int> order;
    preorder(*this, r, order);
    out.push_back(renumber(*this, order));
  }
  return out;
}

UlfGraph UlfGraph::canonical() const {
  if (vertices.empty()) return {};
  int r = root >= 0 ? root : roots().at(0);
  std::vector<int> order;
  preorder(*this, r, order);
  return renumber(*this, order);
}

bool UlfGraph::same_structure(const UlfGraph& other) const {
  auto a = components();
  auto b = other.components();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].edges != b[i].edges || a[i].size() != b[i].size()) return false;
    for (std::size_t v = 0; v < a[i].size(); ++v)
      if (!(a[i].vertices[v].symbol == b[i].vertices[v].symbol)) return false;
  }
  return true;
}

// ---------------------------------------------------------------- tree <-> graph

namespace {
// Edges are added as soon as the child vertex exists, so both vertices and
// edges come out in preorder (the same order the penman reader produces).
int build(const UlfTree& t, UlfGraph& g, int parent, const std::string& role) {
  auto add = [&](const Atom& a) {
    int v = g.add_vertex(Vertex{a, std::nullopt});
    if (parent >= 0) g.add_edge(parent, v, role);
    return v;
  };
  if (t.is_atom()) return add(t.atom());
  const auto& kids = t.children();
  int head;
  if (kids.front().is_atom()) {
    head = add(kids.front().atom());
  } else {
    head = add(Atom::op(kComplexLabel));
    build(kids.front(), g, head, kInstanceRole);
  }
  for (std::size_t i = 1; i < kids.size(); ++i) build(kids[i], g, head, arg_role(static_cast<int>(i - 1)));
  return head;
}

UlfTree unbuild(const UlfGraph& g, int v) {
  const Atom& a = g.vertices[static_cast<std::size_t>(v)].symbol;
  auto out = g.outgoing(v);
  bool complex = a.kind == AtomKind::Operator && a.stem == kComplexLabel;
  if (!complex && out.empty()) return UlfTree(a);
  std::vector<UlfTree> kids;
  if (!complex) kids.emplace_back(a);
  for (const Edge* e : out) kids.push_back(unbuild(g, e->dst));
  return UlfTree(std::move(kids));
}
}  // namespace

UlfGraph tree_to_graph(const UlfTree& t) {
  UlfGraph g;
  g.root = build(t, g, -1, {});
  return g;
}

UlfTree graph_to_tree(const UlfGraph& g) {
  g.validate_tree();
  return unbuild(g, g.root);
}

// ---------------------------------------------------------------- penman

namespace {
void write_penman(const UlfGraph& g, int v, std::string& out) {
  out += "(v" + std::to_string(v) + " / " + g.vertices[static_cast<std::size_t>(v)].symbol.render();
  for (const Edge* e : g.outgoing(v)) {
    out += ' ';
    out += e->label;
    out += ' ';
    write_penman(g, e->dst, out);
  }
  out += ')';
}

struct PenmanNode {
  std::string var;
  Atom label;
  std::vector<std::pair<std::string, int>> children;  // role, node index
};

int read_penman(Lexer& lx, std::vector<PenmanNode>& nodes) {
  if (lx.peek() != '(') throw ParseError("penman: expected '(' at offset " + std::to_string(lx.pos));
  ++lx.pos;
  std::string var = lx.word();
  if (lx.peek() != '/') throw ParseError("penman: expected '/' after variable " + var);
  ++lx.pos;
  Atom label = Atom::parse(lx.word());
  int me = static_cast<int>(nodes.size());
  nodes.push_back(PenmanNode{var, std::move(label), {}});
  while (true) {
    char c = lx.peek();
    if (c == ')') {
      ++lx.pos;
      return me;
    }
    if (c == '\0') throw ParseError("penman: missing ')'");
    if (c != ':') throw ParseError("penman: expected role at offset " + std::to_string(lx.pos));
    std::string role = lx.word();
    if (lx.peek() != '(') throw ParseError("penman: re-entrant or constant target for role " + role + " unsupported");
    int child = read_penman(lx, nodes);
    nodes[static_cast<std::size_t>(me)].children.emplace_back(role, child);
  }
}

UlfGraph assemble(const std::vector<PenmanNode>& nodes) {
  // Variables named v0..v(n-1) fix the vertex order; otherwise appearance order.
  std::vector<int> id(nodes.size());
  bool positional = true;
  std::vector<bool> used(nodes.size(), false);
  for (std::size_t i = 0; i < nodes.size() && positional; ++i) {
    const auto& var = nodes[i].var;
    if (var.size() < 2 || var[0] != 'v' ||
        !std::all_of(var.begin() + 1, var.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      positional = false;
      break;
    }
    std::size_t k = std::stoul(var.substr(1));
    if (k >= nodes.size() || used[k]) {
      positional = false;
      break;
    }
    used[k] = true;
    id[i] = static_cast<int>(k);
  }
  if (!positional)
    for (std::size_t i = 0; i < nodes.size(); ++i) id[i] = static_cast<int>(i);
  else {
    std::map<std::string, int> seen;
    for (const auto& n : nodes)
      if (!seen.emplace(n.var, 0).second) throw ParseError("penman: duplicate variable " + n.var);
  }
  UlfGraph g;
  g.vertices.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) g.vertices[static_cast<std::size_t>(id[i])] = Vertex{nodes[i].label, std::nullopt};
  // Edges in order of their child's appearance, which is preorder.
  std::vector<std::pair<int, const std::string*>> up(nodes.size(), {-1, nullptr});
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (const auto& [role, c] : nodes[i].children) up[static_cast<std::size_t>(c)] = {static_cast<int>(i), &role};
  for (std::size_t c = 0; c < nodes.size(); ++c)
    if (up[c].first >= 0) g.add_edge(id[static_cast<std::size_t>(up[c].first)], id[c], *up[c].second);
  g.root = nodes.empty() ? -1 : id[0];
  return g;
}
}  // namespace

std::string emit_penman(const UlfGraph& g) {
  std::string out;
  auto rs = g.roots();
  if (g.root >= 0 && !rs.empty() && rs.front() != g.root) {
    std::erase(rs, g.root);
    rs.insert(rs.begin(), g.root);
  }
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (i) out += '\n';
    write_penman(g, rs[i], out);
  }
  return out;
}

UlfGraph parse_penman(std::string_view text) {
  Lexer lx{text};
  if (lx.done()) throw ParseError("penman: empty input");
  std::vector<PenmanNode> nodes;
  read_penman(lx, nodes);
  if (!lx.done()) throw ParseError("penman: trailing input at offset " + std::to_string(lx.pos));
  return assemble(nodes);
}

std::vector<UlfGraph> parse_penman_list(std::string_view text) {
  Lexer lx{text};
  std::vector<UlfGraph> out;
  while (!lx.done()) {
    std::vector<PenmanNode> nodes;
    read_penman(lx, nodes);
    out.push_back(assemble(nodes));
  }
  return out;
}

}  // namespace ulf
