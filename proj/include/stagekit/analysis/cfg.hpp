#pragma once

#include <map>
#include <string>
#include <vector>

#include "stagekit/syntax/ast.hpp"

namespace stagekit::analysis {

// Statement-level control-flow graph for one function (or module top level).
// Compound statements appear as their header node: the If/While test, or the
// For iteration step that binds the target.
struct CfgNode {
  const syntax::Node* stmt = nullptr;  // null for entry/exit
  std::vector<int> succ;
  std::vector<int> pred;
  bool dead = false;
};

struct Cfg {
  static constexpr int kEntry = 0;
  static constexpr int kExit = 1;

  const syntax::Node* owner = nullptr;
  std::vector<CfgNode> nodes;
  std::map<syntax::NodeId, int> index;
  // Node that runs after a statement completes normally (next statement,
  // enclosing loop header, or exit).
  std::map<syntax::NodeId, int> follow;

  int node_of(const syntax::Node& stmt) const;
  std::size_t edge_count() const;
  std::string label(int n) const;  // "entry", "exit" or "<line>:<col>"
};

// Accepts a FunctionDef or a Module. Nested FunctionDefs are single nodes.
Cfg build_cfg(const syntax::Node& fn);

}  // namespace stagekit::analysis
