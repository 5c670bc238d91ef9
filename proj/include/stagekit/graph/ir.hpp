#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stagekit/graph/tensor.hpp"
#include "stagekit/syntax/span.hpp"

namespace stagekit::graph {

enum class Op {
  Const,
  Param,
  Add,
  Sub,
  Mul,
  Div,
  Mod,
  Neg,
  Lt,
  Gt,
  Le,
  Ge,
  Eq,
  Ne,
  Not,
  MatMul,
  Transpose,
  ReduceMax,
  ReduceSum,
  Where,
  Tanh,
  Sigmoid,
  Shape,
  Range,
  Index,
  Cond,
  While,
  ListNew,
  ListAppend,
  ListPop,
  ListGet,
  ListSet,
  ListStack,
  FuncCall,
  Print,
  Assert,
  // Beyond the core set: value-semantics tensor update and the helpers the
  // gradient construction needs.
  SetItem,
  Zeros,
  ZerosLike,
  SumTo,
  ListLen,
  ListUnstack,
};

std::string_view op_name(Op op);  // lowercase, as used in S-expressions
std::optional<Op> op_from_name(std::string_view name);
bool is_effectful(Op op);
bool is_binary(Op op);
bool is_comparison(Op op);

// Static type of a value flowing along an edge. Lists record their element
// type in dtype/shape. A missing shape means unknown rank; -1 is a dynamic dim.
struct TypeSig {
  DType dtype = DType::Unknown;
  std::optional<Shape> shape;
  bool list = false;

  static TypeSig tensor(DType d, Shape s) { return {d, std::move(s), false}; }
  static TypeSig scalar(DType d) { return {d, Shape{}, false}; }
  static TypeSig bottom() { return {}; }

  bool is_bottom() const { return dtype == DType::Unknown && !shape; }
  std::string str() const;  // "f64[2,-1]", "list<f64[]>", "?"
  friend bool operator==(const TypeSig&, const TypeSig&) = default;
};

// Least upper bound used for branch unification and recursive signatures.
// Returns nullopt when the two types cannot be joined.
std::optional<TypeSig> join(const TypeSig& a, const TypeSig& b);
// True if a concrete shape is admitted by a possibly-dynamic signature.
bool admits(const TypeSig& sig, DType dtype, const Shape& shape);

struct ValueRef {
  int node = -1;
  int index = 0;
  friend bool operator==(const ValueRef&, const ValueRef&) = default;
  friend auto operator<=>(const ValueRef&, const ValueRef&) = default;
};

struct Subgraph;

struct Node {
  Op op = Op::Const;
  std::vector<ValueRef> inputs;
  std::vector<TypeSig> out_types;

  // Attributes. Which ones are meaningful depends on op:
  //   Const: value.  Param: name, index.  Transpose: ints (perm).
  //   Zeros: dtype.  While: ints[0] = number of loop vars, max_iterations.
  //   FuncCall: name.  Print: strings (literal pieces), ints (input slot or -1).
  //   Assert: strings[0] message.  ListNew: element type in out_types.
  Tensor value;
  std::string name;
  int index = 0;
  DType dtype = DType::Unknown;
  std::vector<std::int64_t> ints;
  std::vector<std::string> strings;
  std::optional<std::int64_t> max_iterations;
  std::vector<std::shared_ptr<Subgraph>> subgraphs;  // Cond: then, else. While: test, body.

  syntax::SourceSpan origin;
  std::string scope;
};

struct Subgraph {
  std::vector<Node> nodes;
  std::vector<int> params;  // indices of Param nodes, in order
  std::vector<ValueRef> outputs;

  const TypeSig& type_of(ValueRef r) const;
  std::vector<TypeSig> param_types() const;
  std::vector<TypeSig> output_types() const;
};

struct Function {
  std::string name;
  std::string key;  // specialization key
  std::shared_ptr<Subgraph> body;
};

struct Graph {
  Subgraph main;
  std::map<std::string, Function> functions;
  std::vector<std::string> function_order;  // definition order

  std::size_t node_count() const;  // including nested subgraphs and functions
  std::size_t count_op(Op op) const;
};

// Node counts over a subgraph and everything nested in it.
std::size_t count_nodes(const Subgraph& g);
std::size_t count_op(const Subgraph& g, Op op);

}  // namespace stagekit::graph
