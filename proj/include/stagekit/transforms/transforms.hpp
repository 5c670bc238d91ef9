#pragma once

#include <map>
#include <string>
#include <vector>

#include "stagekit/syntax/ast.hpp"

namespace stagekit::transforms {

enum class Backend { Graph, Sexpr };

// Canonical order: directives, break, continue, return, assert, lists,
// slices, calls, control_flow, ternary, logical, wrappers.
const std::vector<std::string>& default_passes();

struct PassConfig {
  // When false, calls to user functions are left as plain calls and so are
  // inlined by whatever backend runs the caller.
  bool recursive = true;
  // Target the converted code will be staged for. The converted source is the
  // same for both; the runtime picks inlining or staged definitions.
  Backend backend = Backend::Graph;
  std::vector<std::string> passes = default_passes();
};

struct TransformResult {
  syntax::NodePtr module;
  // Every node of `module` mapped to the origin of the user code it came from.
  std::map<syntax::NodeId, syntax::Origin> source_map;
  // "<pass>: <note>" lines, in pass order.
  std::vector<std::string> report;
};

// Converts a clone of `module`; the input is left untouched. Errors carry
// ErrorKind::ConversionError (or DirectiveError / ListPatternError), the
// original source span and the pass name.
TransformResult convert(const syntax::Node& module, const PassConfig& config = {});

// Throws UsageError for an unknown pass name.
void check_pass_name(const std::string& name);

}  // namespace stagekit::transforms
