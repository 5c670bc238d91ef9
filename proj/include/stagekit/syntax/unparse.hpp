#pragma once

#include <string>

#include "stagekit/syntax/ast.hpp"

namespace stagekit::syntax {

// Renders a Module, FunctionDef, statement or expression as MSL source with
// 4-space indentation, one statement per line.
std::string unparse(const Node& node);
std::string unparse_expr(const Node& node);

// Indented kind/field dump, one field per line.
std::string pretty_print(const Node& node);

std::string format_float_literal(double v);

}  // namespace stagekit::syntax
