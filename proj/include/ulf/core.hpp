#pragma once

// ULF symbols, s-expression trees, the edge-labeled graph form, and the
// penman reader/writer.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ulf {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Token {
  std::string surface;
  std::string lemma;
  std::string pos;
  std::string ner;
  int index = 0;  // 1-based
};

struct Sentence {
  std::string raw;
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  const Token& at(int index) const { return tokens.at(static_cast<std::size_t>(index - 1)); }

  // Builds a sentence from whitespace-separated words; lemma = lowercased
  // surface, POS/NER empty.
  static Sentence from_words(std::string_view text);
};

enum class AtomKind { Suffixed, Name, Operator };

// A ULF symbol. Suffixed atoms render as stem.tag, names as |stem| (plus
// .tag when one is present), operators as the bare stem.
struct Atom {
  std::string stem;
  AtomKind kind = AtomKind::Operator;
  std::string tag;

  static Atom parse(std::string_view spelling);
  static Atom suffixed(std::string stem, std::string tag);
  static Atom name(std::string stem, std::string tag = {});
  static Atom op(std::string stem);

  std::string render() const;
  bool is_name() const { return kind == AtomKind::Name; }
  // Suffix extension as used by the aligner and the Suffix action: the tag for
  // suffixed atoms and tagged names, empty otherwise.
  const std::string& extension() const { return tag; }

  friend bool operator==(const Atom&, const Atom&) = default;
  friend auto operator<=>(const Atom& a, const Atom& b) { return a.render() <=> b.render(); }
};

inline const std::string kComplexLabel = "COMPLEX";
inline const std::string kInstanceRole = ":INSTANCE";

std::string arg_role(int k);
// Returns k for ":ARGk", nullopt otherwise.
std::optional<int> arg_index(std::string_view role);

struct UlfTree {
  std::variant<Atom, std::vector<UlfTree>> node;

  UlfTree() = default;
  explicit UlfTree(Atom a) : node(std::move(a)) {}
  explicit UlfTree(std::vector<UlfTree> kids) : node(std::move(kids)) {}

  bool is_atom() const { return std::holds_alternative<Atom>(node); }
  const Atom& atom() const { return std::get<Atom>(node); }
  const std::vector<UlfTree>& children() const { return std::get<std::vector<UlfTree>>(node); }

  std::size_t atom_count() const;
  std::string to_string() const;

  friend bool operator==(const UlfTree&, const UlfTree&) = default;
};

UlfTree parse_sexpr(std::string_view text);

// Splits a text into top-level s-expressions.
std::vector<UlfTree> parse_sexpr_list(std::string_view text);

struct Vertex {
  Atom symbol;
  std::optional<int> alignment;  // 1-based word index

  friend bool operator==(const Vertex&, const Vertex&) = default;
};

struct Edge {
  int src = 0;
  int dst = 0;
  std::string label;

  friend bool operator==(const Edge&, const Edge&) = default;
};

class UlfGraph {
 public:
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;
  int root = -1;

  int add_vertex(Vertex v);
  void add_edge(int src, int dst, std::string label);

  std::size_t size() const { return vertices.size(); }
  bool empty() const { return vertices.empty(); }

  // Parent of v, or -1.
  int parent(int v) const;
  const Edge* incoming(int v) const;
  // Outgoing edges of v in canonical order (:INSTANCE, :ARG0, :ARG1, ...,
  // other roles lexicographically, ties by insertion order).
  std::vector<const Edge*> outgoing(int v) const;
  std::vector<int> roots() const;
  // Number of proper descendants.
  int descendant_count(int v) const;

  // Throws GraphError when the graph is not a single tree with consecutive
  // :ARGk labels and :INSTANCE only on COMPLEX vertices.
  void validate_tree() const;
  bool is_forest() const;

  // Connected components, each renumbered in canonical preorder, ordered by
  // the creation index of their roots.
  std::vector<UlfGraph> components() const;
  // Renumbers vertices into canonical preorder from the root.
  UlfGraph canonical() const;

  // Structural equality ignoring alignments and vertex numbering.
  bool same_structure(const UlfGraph& other) const;

  friend bool operator==(const UlfGraph&, const UlfGraph&) = default;
};

UlfGraph tree_to_graph(const UlfTree& t);
UlfTree graph_to_tree(const UlfGraph& g);

std::string emit_penman(const UlfGraph& g);
UlfGraph parse_penman(std::string_view text);
// Reads every top-level penman expression in text.
std::vector<UlfGraph> parse_penman_list(std::string_view text);

std::string to_lower(std::string_view s);

}  // namespace ulf
