#include "stagekit/graph/ir.hpp"

#include <array>

namespace stagekit::graph {

namespace {

struct OpInfo {
  Op op;
  std::string_view name;
};

constexpr std::array kOps{
    OpInfo{Op::Const, "const"},         OpInfo{Op::Param, "param"},
    OpInfo{Op::Add, "add"},             OpInfo{Op::Sub, "sub"},
    OpInfo{Op::Mul, "mul"},             OpInfo{Op::Div, "div"},
    OpInfo{Op::Mod, "mod"},             OpInfo{Op::Neg, "neg"},
    OpInfo{Op::Lt, "lt"},               OpInfo{Op::Gt, "gt"},
    OpInfo{Op::Le, "le"},               OpInfo{Op::Ge, "ge"},
    OpInfo{Op::Eq, "eq"},               OpInfo{Op::Ne, "ne"},
    OpInfo{Op::Not, "not"},             OpInfo{Op::MatMul, "matmul"},
    OpInfo{Op::Transpose, "transpose"}, OpInfo{Op::ReduceMax, "reduce_max"},
    OpInfo{Op::ReduceSum, "reduce_sum"}, OpInfo{Op::Where, "where"},
    OpInfo{Op::Tanh, "tanh"},           OpInfo{Op::Sigmoid, "sigmoid"},
    OpInfo{Op::Shape, "shape"},         OpInfo{Op::Range, "range"},
    OpInfo{Op::Index, "index"},         OpInfo{Op::Cond, "cond"},
    OpInfo{Op::While, "while"},         OpInfo{Op::ListNew, "list_new"},
    OpInfo{Op::ListAppend, "list_append"}, OpInfo{Op::ListPop, "list_pop"},
    OpInfo{Op::ListGet, "list_get"},    OpInfo{Op::ListSet, "list_set"},
    OpInfo{Op::ListStack, "list_stack"}, OpInfo{Op::FuncCall, "call"},
    OpInfo{Op::Print, "print"},         OpInfo{Op::Assert, "assert"},
    OpInfo{Op::SetItem, "set_item"},    OpInfo{Op::Zeros, "zeros"},
    OpInfo{Op::ZerosLike, "zeros_like"}, OpInfo{Op::SumTo, "sum_to"},
    OpInfo{Op::ListLen, "list_len"},    OpInfo{Op::ListUnstack, "list_unstack"},
};

}  // namespace

std::string_view op_name(Op op) {
  for (const auto& info : kOps) {
    if (info.op == op) return info.name;
  }
  return "?";
}

std::optional<Op> op_from_name(std::string_view name) {
  for (const auto& info : kOps) {
    if (info.name == name) return info.op;
  }
  return std::nullopt;
}

bool is_effectful(Op op) { return op == Op::Print || op == Op::Assert; }

bool is_binary(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Mod:
      return true;
    default:
      return is_comparison(op);
  }
}

bool is_comparison(Op op) {
  switch (op) {
    case Op::Lt:
    case Op::Gt:
    case Op::Le:
    case Op::Ge:
    case Op::Eq:
    case Op::Ne:
      return true;
    default:
      return false;
  }
}

std::string TypeSig::str() const {
  if (is_bottom() && !list) return "?";
  std::string s(dtype_name(dtype));
  if (shape) {
    s += "[";
    for (std::size_t k = 0; k < shape->size(); ++k) {
      if (k) s += ",";
      s += std::to_string((*shape)[k]);
    }
    s += "]";
  } else {
    s += "[*]";
  }
  return list ? "list<" + s + ">" : s;
}

std::optional<TypeSig> join(const TypeSig& a, const TypeSig& b) {
  if (a.is_bottom() && !a.list) return b;
  if (b.is_bottom() && !b.list) return a;
  if (a.list != b.list) return std::nullopt;
  TypeSig out;
  out.list = a.list;
  if (a.dtype == b.dtype || b.dtype == DType::Unknown) {
    out.dtype = a.dtype;
  } else if (a.dtype == DType::Unknown) {
    out.dtype = b.dtype;
  } else {
    return std::nullopt;
  }
  if (!a.shape || !b.shape) {
    // Lists of unknown element shape join with anything of the same dtype.
    if (a.list) out.shape = a.shape ? a.shape : b.shape;
    return out;
  }
  if (a.shape->size() != b.shape->size()) {
    if (a.list) return out;  // element rank unknown
    return std::nullopt;
  }
  Shape s(a.shape->size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    s[k] = (*a.shape)[k] == (*b.shape)[k] ? (*a.shape)[k] : -1;
  }
  out.shape = std::move(s);
  return out;
}

bool admits(const TypeSig& sig, DType dtype, const Shape& shape) {
  if (sig.dtype != DType::Unknown && sig.dtype != dtype) return false;
  if (!sig.shape) return true;
  if (sig.shape->size() != shape.size()) return false;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if ((*sig.shape)[k] >= 0 && (*sig.shape)[k] != shape[k]) return false;
  }
  return true;
}

const TypeSig& Subgraph::type_of(ValueRef r) const {
  return nodes[static_cast<std::size_t>(r.node)].out_types[static_cast<std::size_t>(r.index)];
}

std::vector<TypeSig> Subgraph::param_types() const {
  std::vector<TypeSig> out;
  for (int p : params) out.push_back(nodes[static_cast<std::size_t>(p)].out_types[0]);
  return out;
}

std::vector<TypeSig> Subgraph::output_types() const {
  std::vector<TypeSig> out;
  for (const auto& r : outputs) out.push_back(type_of(r));
  return out;
}

std::size_t count_nodes(const Subgraph& g) {
  std::size_t n = g.nodes.size();
  for (const auto& node : g.nodes) {
    for (const auto& sub : node.subgraphs) n += count_nodes(*sub);
  }
  return n;
}

std::size_t count_op(const Subgraph& g, Op op) {
  std::size_t n = 0;
  for (const auto& node : g.nodes) {
    if (node.op == op) ++n;
    for (const auto& sub : node.subgraphs) n += count_op(*sub, op);
  }
  return n;
}

std::size_t Graph::node_count() const {
  std::size_t n = count_nodes(main);
  for (const auto& [name, fn] : functions) n += count_nodes(*fn.body);
  return n;
}

std::size_t Graph::count_op(Op op) const {
  std::size_t n = graph::count_op(main, op);
  for (const auto& [name, fn] : functions) n += graph::count_op(*fn.body, op);
  return n;
}

}  // namespace stagekit::graph
