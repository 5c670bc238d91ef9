#pragma once

// Shared plumbing for the conversion passes.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stagekit/analysis/dataflow.hpp"
#include "stagekit/error.hpp"
#include "stagekit/syntax/ast.hpp"
#include "stagekit/transforms/transforms.hpp"

namespace stagekit::transforms {

using syntax::Kind;
using syntax::Node;
using syntax::NodeList;
using syntax::NodePtr;

struct PassContext {
  const PassConfig& config;
  std::string pass;
  int counter = 1;  // next suffix for generated names
  std::vector<std::string> notes;
  // Dataflow facts for the module as it stands when the current pass starts.
  // Computed on first use and dropped between passes.
  const Node* module = nullptr;
  std::optional<analysis::ModuleAnalysis> cached;

  const analysis::ModuleAnalysis& facts() {
    if (!cached) cached = analysis::analyze(*module);
    return *cached;
  }

  // "ag__brk" -> "ag__brk_7"
  std::string fresh(const std::string& prefix) { return prefix + "_" + std::to_string(counter++); }
  int next() { return counter++; }
  void note(std::string text) { notes.push_back(pass + ": " + std::move(text)); }
  [[noreturn]] void fail(ErrorKind kind, const std::string& message, const Node& at) const;
};

using PassFn = void (*)(Node& module, PassContext& ctx);

void pass_directives(Node& module, PassContext& ctx);
void pass_break(Node& module, PassContext& ctx);
void pass_continue(Node& module, PassContext& ctx);
void pass_return(Node& module, PassContext& ctx);
void pass_assert(Node& module, PassContext& ctx);
void pass_lists(Node& module, PassContext& ctx);
void pass_slices(Node& module, PassContext& ctx);
void pass_calls(Node& module, PassContext& ctx);
void pass_control_flow(Node& module, PassContext& ctx);
void pass_ternary(Node& module, PassContext& ctx);
void pass_logical(Node& module, PassContext& ctx);
void pass_wrappers(Node& module, PassContext& ctx);

// ------------------------------------------------------------- utilities

// Calls f on every statement list under `root` (module body, function bodies,
// branches, loop bodies), innermost lists first.
void for_each_block(Node& root, const std::function<void(NodeList&)>& f);

// Rewrites every expression slot of a statement bottom-up. f may replace the
// node it is given. Nested statement blocks are not entered.
void rewrite_exprs(Node& stmt, const std::function<void(NodePtr&)>& f);

// Bottom-up rewrite of one expression tree.
void rewrite_expr(NodePtr& expr, const std::function<void(NodePtr&)>& f);

// True if a statement in `stmts` (or nested compound statements, but not
// nested loops or functions) is of `kind`.
bool contains_own(const NodeList& stmts, Kind kind);
bool contains_own(const Node& stmt, Kind kind);

bool is_loop(const Node& n);

// `ag__.fn(args...)`
NodePtr intrinsic_call(std::string_view fn, NodeList args, const Node* from);

// Generated helper functions are never wrapped or converted again.
bool is_generated(const std::string& name);

// Sorted simple names of a set, excluding reserved roots.
std::vector<std::string> simple_names(const analysis::NameSet& names);

}  // namespace stagekit::transforms
