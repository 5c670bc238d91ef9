#pragma once

// Private runtime structures shared by the session implementation files.

#include <map>
#include <string>
#include <vector>

#include "stagekit/error.hpp"
#include "stagekit/runtime/session.hpp"

namespace stagekit::runtime {

struct Session::Frame {
  int id = 0;
  graph::Subgraph* sg = nullptr;
  bool function = false;  // staged function bodies may not capture
  std::vector<graph::ValueRef> cap_outer;  // refs in the enclosing frame
  std::vector<graph::ValueRef> cap_local;  // matching Param refs here
};

struct Session::FunctionEntry {
  std::string name;
  bool done = false;
  std::vector<graph::TypeSig> outputs;  // assumed while in progress
  bool tuple = false;
  bool used = false;  // a recursive call site relied on `outputs`
};

struct Session::TraceContext {
  graph::Graph graph;
  std::vector<Frame> frames;
  int next_id = 1;
  std::map<std::string, FunctionEntry> functions;  // specialization key -> entry
  std::vector<std::string> key_order;
  std::map<std::string, int> name_uses;
};

// Throws ErrorKind::TypeError.
[[noreturn]] void type_error(const std::string& message);

// Concrete scalar helpers.
bool is_bool_scalar(const Value& v);
bool is_int_scalar(const Value& v);
std::int64_t to_index(const Value& v, const char* what);

class Session::Interpreter {
 public:
  enum class Flow { Normal, Break, Continue, Return };
  struct Status {
    Flow flow = Flow::Normal;
    Value value;
  };

  explicit Interpreter(Session& s) : s_(s) {}

  Status exec_block(const syntax::NodeList& stmts, const std::shared_ptr<Env>& env);
  Value eval(const syntax::Node& e, const std::shared_ptr<Env>& env);

 private:
  Status exec(const syntax::Node& st, const std::shared_ptr<Env>& env);
  void assign(const syntax::Node& target, Value v, const std::shared_ptr<Env>& env);
  Value eval_inner(const syntax::Node& e, const std::shared_ptr<Env>& env);
  Value eval_call(const syntax::Node& e, const std::shared_ptr<Env>& env);
  Value eval_compare(const syntax::Node& e, const std::shared_ptr<Env>& env);

  Session& s_;
};

}  // namespace stagekit::runtime
