#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stagekit/graph/ir.hpp"
#include "stagekit/syntax/ast.hpp"

namespace stagekit::runtime {

struct Value;
struct ListValue;
struct TreeNode;
struct Env;

struct None {
  friend bool operator==(None, None) { return true; }
};

// Reified "may be unassigned" state, carrying the symbol it stands for.
struct Undefined {
  std::string name;
};

// Reference to a node output in the graph under construction. `frame` is the
// id of the trace frame the value was created in.
struct Staged {
  int frame = 0;
  graph::ValueRef ref;
  graph::TypeSig type;
};

// Binary tree. A null root is the empty tree.
struct Tree {
  std::shared_ptr<const TreeNode> root;
};

// A tree fed as four staged arrays: preorder values, child indices (-1 for
// none), and the index of the current node (-1 when empty).
struct StagedTree {
  std::shared_ptr<const std::vector<Value>> parts;  // values, left, right, node
};

struct Closure {
  syntax::NodePtr def;  // FunctionDef
  std::shared_ptr<Env> env;
};

struct Builtin {
  std::string name;  // "print", "m.tanh", "ag__.if_stmt", ...
};

struct Namespace {
  std::string name;  // "m", "ag", "ag__"
};

struct Range {
  std::int64_t start = 0, stop = 0, step = 1;
  std::int64_t size() const;
};

struct LoopOptions {
  std::optional<std::int64_t> max_iterations;
};

struct DTypeValue {
  graph::DType dtype;
};

// Native callable used for internally built thunks.
struct NativeFn {
  std::shared_ptr<const std::function<Value(std::vector<Value>)>> fn;
};

using Tuple = std::shared_ptr<const std::vector<Value>>;
using List = std::shared_ptr<const ListValue>;

struct Value {
  std::variant<None, graph::Tensor, std::string, List, Tuple, Tree, StagedTree, Undefined,
               std::shared_ptr<const Closure>, Builtin, Namespace, Range, LoopOptions, DTypeValue,
               Staged, NativeFn>
      v;

  Value() : v(None{}) {}
  template <typename T>
  Value(T x) : v(std::move(x)) {}  // NOLINT: implicit by design

  template <typename T>
  bool is() const { return std::holds_alternative<T>(v); }
  template <typename T>
  const T& as() const { return std::get<T>(v); }
  template <typename T>
  const T* get() const { return std::get_if<T>(&v); }

  bool is_staged() const;  // Staged or StagedTree
};

struct ListValue {
  std::vector<Value> items;
  std::optional<graph::DType> elem;  // declared element dtype
};

struct TreeNode {
  Value value;
  Tree left, right;
};

Value make_list(std::vector<Value> items, std::optional<graph::DType> elem = std::nullopt);
Value make_tuple(std::vector<Value> items);
Value make_tree(Value value, Tree left, Tree right);
Value int_value(std::int64_t v);
Value float_value(double v);
Value bool_value(bool v);

std::string type_name(const Value& v);
// print() style: strings bare, everything else as its literal form.
std::string format_value(const Value& v);
// Literal form (strings quoted), used inside containers.
std::string repr_value(const Value& v);

// Exact structural equality for concrete values (f64 bit-equal, NaN==NaN).
bool values_equal(const Value& a, const Value& b);

// Lexical environment: reads walk the parent chain, writes bind locally.
struct Env {
  std::shared_ptr<Env> parent;
  std::vector<std::pair<std::string, Value>> vars;

  const Value* find(const std::string& name) const;
  void set(const std::string& name, Value v);
};

// Parses "(5 (3 () ()) ())" style tree literals; leaves are "()".
Tree parse_tree(const std::string& text);
std::string format_tree(const Tree& t);
// Preorder encoding used by the staged tree representation.
struct TreeArrays {
  graph::Tensor values, left, right, node;
};
TreeArrays encode_tree(const Tree& t);

}  // namespace stagekit::runtime
