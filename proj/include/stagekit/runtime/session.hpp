#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "stagekit/graph/execute.hpp"
#include "stagekit/graph/ir.hpp"
#include "stagekit/runtime/value.hpp"
#include "stagekit/syntax/ast.hpp"

namespace stagekit::runtime {

enum class Backend { Graph, Sexpr };

struct SessionOptions {
  Backend backend = Backend::Graph;
  int graph_recursion_limit = 64;  // user-call depth while tracing (graph backend)
  int native_recursion_limit = 256;
};

// One parameter of a traced entry function.
struct ParamSpec {
  enum class Kind { Tensor, Tree, Concrete };
  std::string name;
  Kind kind = Kind::Tensor;
  graph::TypeSig type;  // Tensor
  Value value;          // Concrete

  static ParamSpec tensor(std::string n, graph::TypeSig t) {
    return {std::move(n), Kind::Tensor, std::move(t), {}};
  }
  static ParamSpec tree(std::string n) { return {std::move(n), Kind::Tree, {}, {}}; }
  static ParamSpec concrete(std::string n, Value v) {
    return {std::move(n), Kind::Concrete, {}, std::move(v)};
  }
};

// Feed names for a staged tree parameter.
std::vector<std::string> tree_feed_names(const std::string& param);

// Flattens a result value the way traced outputs are laid out: tuples
// splice, None vanishes, lists of tensors become TensorLists.
std::vector<graph::RtValue> flatten_result(const Value& v);

class Session {
 public:
  explicit Session(SessionOptions options = {});
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const SessionOptions& options() const { return options_; }

  // Executes a module's top-level statements in the global environment.
  void load(const syntax::NodePtr& module);
  const Value* global(const std::string& name) const;

  // Native call of a loaded function.
  Value call_function(const std::string& name, std::vector<Value> args);

  // Traces `entry` with the given parameters into a fresh graph. The graph
  // backend inlines user calls; the sexpr backend stages the entry and every
  // user function reached with staged arguments as re-entrant definitions.
  graph::Graph trace(const std::string& entry, const std::vector<ParamSpec>& params);

  // print() output produced natively (not by graph execution).
  const std::vector<std::string>& log() const { return log_; }
  void clear_log() { log_.clear(); }

  // ---- dispatch surface (used by the interpreter and builtins) ----------
  bool tracing() const { return trace_ != nullptr; }

  Value call(const Value& fn, std::vector<Value> args);
  Value converted_call(const Value& fn, std::vector<Value> args);

  Value binary(graph::Op op, const Value& a, const Value& b);
  Value negate(const Value& a);
  Value not_(const Value& a);
  Value and_(const Value& a, const std::function<Value()>& rhs);
  Value or_(const Value& a, const std::function<Value()>& rhs);
  // Host-level truth test for native control flow; staged values are refused.
  bool truth(const Value& v, const char* what);

  Value if_stmt(const Value& cond, const Value& body, const Value& orelse, const Value& names);
  Value if_exp(const Value& cond, const Value& body, const Value& orelse);
  Value while_stmt(const Value& test, const Value& body, const Value& init, const Value& names,
                   const Value& opts, const Value& captured);
  Value for_stmt(const Value& iter, const Value& body, const Value& init, const Value& names,
                 const Value& opts);
  void assert_stmt(const Value& cond, const Value& msg);
  Value function_scope(const Value& name, const Value& body);

  Value list_new(std::vector<Value> items, std::optional<graph::DType> elem);
  Value list_append(const Value& l, const Value& x);
  Value list_pop(const Value& l);  // returns (list, item)
  Value list_stack(const Value& l);
  Value getitem(const Value& x, const Value& i);
  Value setitem(const Value& x, const Value& i, const Value& v);
  Value attribute(const Value& x, const std::string& name);
  Value len(const Value& x);

  void print(const std::vector<Value>& args);

  // Span stamped on emitted nodes and attached to errors.
  const syntax::SourceSpan& span() const { return span_; }
  void set_span(const syntax::SourceSpan& s) { span_ = s; }

  // Raises UndefinedSymbol for the undefined sentinel.
  static void check_defined(const Value& v);

  // Branch thunks run by if_stmt, natively or for tracing.
  std::size_t branch_calls() const { return branch_calls_; }

 private:
  struct Frame;
  struct TraceContext;
  struct FunctionEntry;
  class Interpreter;
  friend class Interpreter;

  Value call_builtin(const std::string& name, std::vector<Value> args);
  Value call_closure(const Closure& c, std::vector<Value> args);
  Value call_user(const Value& fn, std::vector<Value> args);
  Value stage_call(const std::shared_ptr<const Closure>& fn, std::vector<Value> args);
  Value emit_call(const std::string& name, const std::vector<graph::TypeSig>& outs, bool tuple,
                  const std::vector<Value>& args);
  Value cast(graph::DType to, const Value& v);
  Value m_intrinsic(const std::string& fn, std::vector<Value>& args);
  Value ag_intrinsic(const std::string& fn, std::vector<Value>& args);
  // Elements of a concrete iterable, or nullopt for staged ones.
  std::optional<std::vector<Value>> concrete_items(const Value& v);

  // Tracing helpers.
  graph::ValueRef lift(const Staged& s);
  graph::ValueRef to_node(const Value& v, const std::string& what);
  std::vector<graph::ValueRef> emit(graph::Node node);
  Value emit1(graph::Op op, const std::vector<Value>& inputs);
  Value staged_of(graph::ValueRef ref);
  graph::TypeSig static_type(const Value& v, const std::string& what);
  bool stageable(const Value& v) const;

  void push_frame(graph::Subgraph* sg, bool function);
  Frame pop_frame();
  void repush(Frame f);
  std::vector<graph::ValueRef> merge_captures(std::vector<Frame*> frames,
                                              std::vector<graph::Subgraph*> graphs,
                                              std::size_t leading);

  std::vector<Value> unpack_state(const Value& v, std::size_t n, const std::string& what);
  Value pack_state(std::vector<Value> vals);
  std::vector<std::string> names_of(const Value& names);

  std::vector<Value> stage_cond(const Value& pred, const std::function<std::vector<Value>()>& then,
                                const std::function<std::vector<Value>()>& els,
                                const std::vector<std::string>& names);
  std::vector<Value> stage_loop(
      std::vector<Value> init, const std::vector<std::string>& names,
      const std::function<Value(const std::vector<Value>&)>& test,
      const std::function<std::vector<Value>(const std::vector<Value>&)>& body,
      const LoopOptions& opts);
  Value staged_tree_field(const StagedTree& t, const std::string& name);

  SessionOptions options_;
  std::shared_ptr<Env> globals_;
  std::vector<std::string> log_;
  std::unique_ptr<TraceContext> trace_;
  syntax::SourceSpan span_;
  std::vector<std::string> scopes_;
  int user_depth_ = 0;
  std::size_t branch_calls_ = 0;
};

// Reads a feed literal: "f64[2,3]:1,2,3,4,5,6", "f64:16.0", "i64:3",
// "bool:true", "tree:(5 () ())". Throws UsageError.
Value parse_feed(const std::string& text);

}  // namespace stagekit::runtime
