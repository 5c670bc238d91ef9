#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "stagekit/graph/ir.hpp"

namespace stagekit::graph {

// Generic S-expression tree used by the emitter and the test reader.
struct SExpr {
  bool is_atom = true;
  bool quoted = false;  // atom was a string literal
  std::string text;
  std::vector<SExpr> items;

  static SExpr atom(std::string t) { return {true, false, std::move(t), {}}; }
  static SExpr string(std::string t) { return {true, true, std::move(t), {}}; }
  static SExpr list(std::vector<SExpr> xs) { return {false, false, {}, std::move(xs)}; }
  friend bool operator==(const SExpr&, const SExpr&) = default;
};

// Throws SyntaxError on unbalanced parentheses or bad string literals.
std::vector<SExpr> read_sexpr(std::string_view text);
// Deterministic layout: def/cond/while bodies break onto indented lines.
std::string write_sexpr(const std::vector<SExpr>& forms);

// Functions first (definition order), then the main body. Values used once
// are inlined; others are bound with (let vN ...) and multi-output nodes are
// projected with (get vN k).
std::string to_sexpr(const Graph& g);

// One cluster per subgraph, one DOT node per IR node labelled op@line.
std::string to_dot(const Graph& g);

}  // namespace stagekit::graph
