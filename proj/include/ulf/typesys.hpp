#pragma once

// Semantic types for ULF atoms and the function-application composition check.
//
// Type syntax (full grammar in docs/type-grammar.md):
//   type  := NAME | "_" | "'" NAME | "{" NAME "}" | "(" type ["*"] "->" type ")"
// "_" unifies with anything, "'a" is a type variable bound on first use,
// "{name}" is a macro placeholder, and "(A* -> B)" takes zero or more A
// arguments before acting as B.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ulf/core.hpp"

namespace ulf {

class SemType {
 public:
  enum class Kind { Atomic, Function, Any, Var, Macro };

  static SemType atomic(std::string name);
  static SemType function(SemType arg, SemType result, bool variadic = false);
  static SemType any();
  static SemType var(std::string name);
  static SemType macro(std::string name, int stage = 0);

  Kind kind() const { return node_->kind; }
  const std::string& name() const { return node_->name; }
  int stage() const { return node_->stage; }
  bool variadic() const { return node_->variadic; }
  const SemType& arg() const { return *node_->arg; }
  const SemType& result() const { return *node_->result; }

  bool is_function() const { return kind() == Kind::Function; }
  // The placeholder and macros both unify with anything.
  bool absorbs() const { return kind() == Kind::Any || kind() == Kind::Macro; }

  std::string render() const;

  friend bool operator==(const SemType& a, const SemType& b);

 private:
  struct Node {
    Kind kind = Kind::Any;
    std::string name;
    int stage = 0;
    bool variadic = false;
    std::shared_ptr<const SemType> arg, result;
  };
  explicit SemType(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// A vertex may carry several candidate types (grammar alternatives).
using TypeSet = std::vector<SemType>;

SemType parse_type(std::string_view text, const std::map<std::string, SemType>& abbreviations = {});
TypeSet parse_type_alternatives(std::string_view text, const std::map<std::string, SemType>& abbreviations = {});
std::string render(const TypeSet& ts);

// Whether `value` can fill a slot of type `slot`.
bool unifies(const SemType& value, const SemType& slot);

// Function application with the head as operator (first position) or the
// dependent as operator (second position); the first that succeeds wins.
std::optional<SemType> compose(const SemType& head, const SemType& dependent);
// Every successful composition over the alternatives, deduplicated. Empty
// means the two cannot compose.
TypeSet compose(const TypeSet& head, const TypeSet& dependent);
// Result type of an edge: :INSTANCE gives the head the dependent's type,
// any other role composes.
TypeSet compose_edge(const TypeSet& head, const TypeSet& dependent, std::string_view role);

class TypeGrammar {
 public:
  std::map<std::string, TypeSet> suffixes;
  std::map<std::string, TypeSet> operators;
  TypeSet name_type{SemType::atomic("D")};

  static TypeGrammar parse(std::string_view text);
  static TypeGrammar load(const std::string& path);
  // The grammar shipped as data/default.types, compiled in.
  static const TypeGrammar& builtin();

  TypeSet types_of(const Atom& a) const;
  std::set<std::string> unknown_suffixes(const std::set<std::string>& tags) const;
};

// First alternative of the atom's type; unknown suffix -> "_".
SemType type_of(const Atom& a, const TypeGrammar& g);

extern const char* const kDefaultTypeGrammar;

// Composes every internal vertex bottom-up (children in edge order) and
// returns the vertices whose composition failed.
std::vector<int> type_violations(const UlfGraph& g, const TypeGrammar& grammar);

class Lexicon {
 public:
  void add(std::string_view stem, const Atom& atom);
  const std::set<std::string>* lookup(std::string_view stem) const;
  std::size_t size() const { return entries_.size(); }

  static Lexicon parse_tsv(std::string_view text);
  static Lexicon load(const std::string& path);
  std::string to_tsv() const;

 private:
  std::map<std::string, std::set<std::string>> entries_;  // case-folded stem -> renderings
};

// Keeps the candidates listed for the word (case-folded surface, then lemma);
// words missing from the lexicon leave the candidates unchanged.
std::set<Atom> lexicon_filter(const Token& word, const std::set<Atom>& candidates, const Lexicon& lex);

}  // namespace ulf
