#pragma once

#include <map>
#include <set>
#include <string>
#include <variant>

#include "stagekit/syntax/ast.hpp"

namespace stagekit::syntax {

struct Template {
  std::string text;
  std::set<std::string> placeholder_names;
};

// A placeholder binds to an identifier, a single expression node, or a list.
// Lists splice into statement blocks, parameter lists and argument lists.
using Binding = std::variant<std::string, NodePtr, NodeList>;

// Parses the template, substitutes placeholders and re-checks that the result
// unparses and re-parses to an equal tree. `from` supplies origins for nodes
// created from template text.
NodeList template_replace(const Template& tmpl, const std::map<std::string, Binding>& bindings,
                          const Node* from = nullptr);

}  // namespace stagekit::syntax
