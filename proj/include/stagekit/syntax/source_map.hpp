#pragma once

#include "stagekit/syntax/ast.hpp"

namespace stagekit::syntax {

// Span of the user's original line for any parsed or transform-built node.
// Throws InternalError when a node carries no origin.
const SourceSpan& origin_of(const Node& node);

bool has_origin(const Node& node);

}  // namespace stagekit::syntax
