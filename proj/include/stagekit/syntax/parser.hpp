#pragma once

#include <string>
#include <string_view>

#include "stagekit/syntax/ast.hpp"

namespace stagekit::syntax {

struct ParseOptions {
  // Generated code uses the reserved `ag__` prefix; user code may not.
  bool allow_reserved = false;
};

// Parses MSL source into a Module. Throws Error(SyntaxError | IndentationError).
NodePtr parse_module(std::string_view source, const std::string& file_name,
                     ParseOptions options = {});

// Parses a single expression (used by templates and tests).
NodePtr parse_expression(std::string_view source, const std::string& file_name = "<expr>",
                         ParseOptions options = {});

}  // namespace stagekit::syntax
