#pragma once

// Decoding constraints over machine configurations: type composition on arcs
// and lexicon restriction of word-generated symbols.

#include <optional>

#include "ulf/machine.hpp"
#include "ulf/typesys.hpp"

namespace ulf {

// For Arc and PromoteArc actions: the head's composed types, or nullopt when
// the two sides cannot compose. Other actions pass with no type change.
// Requires c.types to cover every vertex (see apply_typed).
std::optional<TypeSet> check_arc(const Config& c, const Action& a, const TypeGrammar& g);

// Applies `a` and keeps c.types in step: new vertices get their grammar types,
// arcs replace the head's types with the composition. Throws IllegalAction if
// an arc fails to compose.
void apply_typed(Config& c, const Action& a, const TypeGrammar& g);

// Filters Suffix candidates by the lexicon entry for the generated stem;
// keeps all of them when the entry is missing or the intersection is empty.
std::vector<Action> lexicon_filter_actions(const Config& c, const std::vector<Action>& legal, const Lexicon& lex);

}  // namespace ulf
