#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stagekit/syntax/span.hpp"

namespace stagekit::syntax {

enum class Kind {
  Module,
  FunctionDef,
  Param,
  Block,
  If,
  While,
  For,
  Break,
  Continue,
  Return,
  Assign,
  AugAssign,
  ExprStmt,
  Assert,
  Call,
  Name,
  Attribute,
  Subscript,
  ListLiteral,
  Tuple,
  IntLit,
  FloatLit,
  BoolLit,
  NoneLit,
  StrLit,
  BinOp,
  BoolOp,
  UnaryOp,
  Compare,
  Ternary,
};

std::string_view kind_name(Kind kind);
bool is_statement(Kind kind);
bool is_expression(Kind kind);

using NodeId = std::uint64_t;

NodeId fresh_node_id();

// Root of a node's origin chain. Parsed nodes point at themselves; nodes built
// by a transform inherit the root of the node they were derived from.
struct Origin {
  NodeId id = 0;
  SourceSpan span;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;
using NodeList = std::vector<NodePtr>;

// Slot layout per kind:
//   Module       body
//   FunctionDef  text=name, kids=Param..., body
//   Param        text=name
//   If           kids[0]=test, body, orelse
//   While        kids[0]=test, body
//   For          kids[0]=target, kids[1]=iterable, body
//   Return       kids = [] or [value]
//   Assign       kids[0]=target, kids[1]=value
//   AugAssign    text=op, kids[0]=target, kids[1]=value
//   ExprStmt     kids[0]
//   Assert       kids[0]=test, optional kids[1]=message
//   Call         kids[0]=callee, kids[1..]=args
//   Name         text=id
//   Attribute    kids[0]=value, text=attr
//   Subscript    kids[0]=value, kids[1]=index
//   ListLiteral, Tuple   kids = elements
//   IntLit/FloatLit/BoolLit/StrLit  ival/fval/bval/text
//   BinOp        text=op, kids[0..1]
//   BoolOp       text="and"|"or", kids[0..1]
//   UnaryOp      text="-"|"not", kids[0]
//   Compare      ops, kids = operands (ops.size() + 1)
//   Ternary      kids[0]=value if true, kids[1]=test, kids[2]=value if false
struct Node {
  Kind kind;
  NodeId id = 0;
  SourceSpan span;
  Origin origin;

  std::string text;
  std::int64_t ival = 0;
  double fval = 0.0;
  bool bval = false;
  std::vector<std::string> ops;

  NodeList kids;
  NodeList body;
  NodeList orelse;

  // Directive annotations: "max_iterations", "parallel_iterations" on loops;
  // "element_type:<symbol>" on functions.
  std::map<std::string, std::string> annotations;

  explicit Node(Kind k) : kind(k), id(fresh_node_id()) {}
};

// Builders for transform-produced nodes. `from` supplies span and origin.
NodePtr make(Kind kind, const Node* from);
NodePtr make_name(std::string id, const Node* from);
NodePtr make_int(std::int64_t v, const Node* from);
NodePtr make_bool(bool v, const Node* from);
NodePtr make_str(std::string v, const Node* from);
NodePtr make_none(const Node* from);
NodePtr make_attr(NodePtr value, std::string attr, const Node* from);
NodePtr make_call(NodePtr callee, NodeList args, const Node* from);
NodePtr make_tuple(NodeList elems, const Node* from);
NodePtr make_assign(NodePtr target, NodePtr value, const Node* from);
NodePtr make_expr_stmt(NodePtr value, const Node* from);
NodePtr make_return(NodePtr value, const Node* from);
NodePtr make_function(std::string name, std::vector<std::string> params, NodeList body,
                      const Node* from);
NodePtr make_unary(std::string op, NodePtr operand, const Node* from);
NodePtr make_boolop(std::string op, NodePtr lhs, NodePtr rhs, const Node* from);
NodePtr make_if(NodePtr test, NodeList body, NodeList orelse, const Node* from);

// `ag__.<fn>` attribute chain used by generated dispatch calls.
NodePtr make_intrinsic(std::string_view fn, const Node* from);

// Deep copy with fresh ids; origins are preserved.
NodePtr clone(const Node& node);
NodeList clone_list(const NodeList& list);

// Structural equality ignoring ids, spans, origins and annotations.
bool tree_equal(const Node& a, const Node& b);
bool tree_equal(const NodeList& a, const NodeList& b);

// Visits node and all descendants (kids, body, orelse) in pre-order.
template <typename F>
void walk(const NodePtr& node, F&& f) {
  if (!node) return;
  f(node);
  for (const auto& k : node->kids) walk(k, f);
  for (const auto& s : node->body) walk(s, f);
  for (const auto& s : node->orelse) walk(s, f);
}

}  // namespace stagekit::syntax
