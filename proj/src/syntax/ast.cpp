#include "stagekit/syntax/ast.hpp"

#include <atomic>

#include "stagekit/error.hpp"
#include "stagekit/syntax/source_map.hpp"

namespace stagekit::syntax {

namespace {
const std::string kNoFile = "<unknown>";
std::atomic<NodeId> next_id{1};
}  // namespace

const std::string& SourceSpan::file_name() const { return file ? *file : kNoFile; }

bool SourceSpan::valid() const {
  return file && start_line >= 1 && start_col >= 1 &&
         (start_line < end_line || (start_line == end_line && start_col <= end_col));
}

std::string SourceSpan::to_string() const {
  return file_name() + ":" + std::to_string(start_line) + ":" + std::to_string(start_col);
}

NodeId fresh_node_id() { return next_id.fetch_add(1, std::memory_order_relaxed); }

std::string_view kind_name(Kind kind) {
  switch (kind) {
    case Kind::Module: return "Module";
    case Kind::FunctionDef: return "FunctionDef";
    case Kind::Param: return "Param";
    case Kind::Block: return "Block";
    case Kind::If: return "If";
    case Kind::While: return "While";
    case Kind::For: return "For";
    case Kind::Break: return "Break";
    case Kind::Continue: return "Continue";
    case Kind::Return: return "Return";
    case Kind::Assign: return "Assign";
    case Kind::AugAssign: return "AugAssign";
    case Kind::ExprStmt: return "ExprStmt";
    case Kind::Assert: return "Assert";
    case Kind::Call: return "Call";
    case Kind::Name: return "Name";
    case Kind::Attribute: return "Attribute";
    case Kind::Subscript: return "Subscript";
    case Kind::ListLiteral: return "ListLiteral";
    case Kind::Tuple: return "Tuple";
    case Kind::IntLit: return "IntLit";
    case Kind::FloatLit: return "FloatLit";
    case Kind::BoolLit: return "BoolLit";
    case Kind::NoneLit: return "NoneLit";
    case Kind::StrLit: return "StrLit";
    case Kind::BinOp: return "BinOp";
    case Kind::BoolOp: return "BoolOp";
    case Kind::UnaryOp: return "UnaryOp";
    case Kind::Compare: return "Compare";
    case Kind::Ternary: return "Ternary";
  }
  return "?";
}

bool is_statement(Kind kind) {
  switch (kind) {
    case Kind::FunctionDef:
    case Kind::If:
    case Kind::While:
    case Kind::For:
    case Kind::Break:
    case Kind::Continue:
    case Kind::Return:
    case Kind::Assign:
    case Kind::AugAssign:
    case Kind::ExprStmt:
    case Kind::Assert:
      return true;
    default:
      return false;
  }
}

bool is_expression(Kind kind) {
  return !is_statement(kind) && kind != Kind::Module && kind != Kind::Param &&
         kind != Kind::Block;
}

NodePtr make(Kind kind, const Node* from) {
  auto n = std::make_shared<Node>(kind);
  if (from) {
    n->span = from->span;
    n->origin = from->origin;
  }
  return n;
}

NodePtr make_name(std::string id, const Node* from) {
  auto n = make(Kind::Name, from);
  n->text = std::move(id);
  return n;
}

NodePtr make_int(std::int64_t v, const Node* from) {
  auto n = make(Kind::IntLit, from);
  n->ival = v;
  return n;
}

NodePtr make_bool(bool v, const Node* from) {
  auto n = make(Kind::BoolLit, from);
  n->bval = v;
  return n;
}

NodePtr make_str(std::string v, const Node* from) {
  auto n = make(Kind::StrLit, from);
  n->text = std::move(v);
  return n;
}

NodePtr make_none(const Node* from) { return make(Kind::NoneLit, from); }

NodePtr make_attr(NodePtr value, std::string attr, const Node* from) {
  auto n = make(Kind::Attribute, from);
  n->kids = {std::move(value)};
  n->text = std::move(attr);
  return n;
}

NodePtr make_call(NodePtr callee, NodeList args, const Node* from) {
  auto n = make(Kind::Call, from);
  n->kids.push_back(std::move(callee));
  for (auto& a : args) n->kids.push_back(std::move(a));
  return n;
}

NodePtr make_tuple(NodeList elems, const Node* from) {
  auto n = make(Kind::Tuple, from);
  n->kids = std::move(elems);
  return n;
}

NodePtr make_assign(NodePtr target, NodePtr value, const Node* from) {
  auto n = make(Kind::Assign, from);
  n->kids = {std::move(target), std::move(value)};
  return n;
}

NodePtr make_expr_stmt(NodePtr value, const Node* from) {
  auto n = make(Kind::ExprStmt, from);
  n->kids = {std::move(value)};
  return n;
}

NodePtr make_return(NodePtr value, const Node* from) {
  auto n = make(Kind::Return, from);
  if (value) n->kids = {std::move(value)};
  return n;
}

NodePtr make_function(std::string name, std::vector<std::string> params, NodeList body,
                      const Node* from) {
  auto n = make(Kind::FunctionDef, from);
  n->text = std::move(name);
  for (auto& p : params) {
    auto param = make(Kind::Param, from);
    param->text = std::move(p);
    n->kids.push_back(std::move(param));
  }
  n->body = std::move(body);
  return n;
}

NodePtr make_unary(std::string op, NodePtr operand, const Node* from) {
  auto n = make(Kind::UnaryOp, from);
  n->text = std::move(op);
  n->kids = {std::move(operand)};
  return n;
}

NodePtr make_boolop(std::string op, NodePtr lhs, NodePtr rhs, const Node* from) {
  auto n = make(Kind::BoolOp, from);
  n->text = std::move(op);
  n->kids = {std::move(lhs), std::move(rhs)};
  return n;
}

NodePtr make_if(NodePtr test, NodeList body, NodeList orelse, const Node* from) {
  auto n = make(Kind::If, from);
  n->kids = {std::move(test)};
  n->body = std::move(body);
  n->orelse = std::move(orelse);
  return n;
}

NodePtr make_intrinsic(std::string_view fn, const Node* from) {
  return make_attr(make_name("ag__", from), std::string(fn), from);
}

NodePtr clone(const Node& node) {
  auto n = std::make_shared<Node>(node.kind);
  NodeId id = n->id;
  *n = node;
  n->id = id;
  n->kids = clone_list(node.kids);
  n->body = clone_list(node.body);
  n->orelse = clone_list(node.orelse);
  return n;
}

NodeList clone_list(const NodeList& list) {
  NodeList out;
  out.reserve(list.size());
  for (const auto& n : list) out.push_back(n ? clone(*n) : nullptr);
  return out;
}

bool tree_equal(const NodeList& a, const NodeList& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i] || !b[i]) {
      if (a[i] != b[i]) return false;
      continue;
    }
    if (!tree_equal(*a[i], *b[i])) return false;
  }
  return true;
}

bool tree_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.text != b.text || a.ops != b.ops) return false;
  switch (a.kind) {
    case Kind::IntLit:
      if (a.ival != b.ival) return false;
      break;
    case Kind::FloatLit:
      if (a.fval != b.fval) return false;
      break;
    case Kind::BoolLit:
      if (a.bval != b.bval) return false;
      break;
    default:
      break;
  }
  return tree_equal(a.kids, b.kids) && tree_equal(a.body, b.body) &&
         tree_equal(a.orelse, b.orelse);
}

bool has_origin(const Node& node) { return node.origin.id != 0; }

const SourceSpan& origin_of(const Node& node) {
  if (!has_origin(node)) {
    throw Error(ErrorKind::InternalError,
                std::string("node without origin: ") + std::string(kind_name(node.kind)));
  }
  return node.origin.span;
}

}  // namespace stagekit::syntax
