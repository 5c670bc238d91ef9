// Tree-walking evaluator for original and converted MSL.

#include "internal.hpp"
#include "stagekit/syntax/source_map.hpp"

namespace stagekit::runtime {

using graph::DType;
using graph::Op;
using graph::Tensor;
using syntax::Kind;
using syntax::Node;

namespace {

const syntax::SourceSpan& where(const Node& n) {
  return syntax::has_origin(n) ? n.origin.span : n.span;
}

// Restores the session's current span on scope exit.
class SpanScope {
 public:
  SpanScope(Session& s, const Node& n) : s_(s), saved_(s.span()) {
    const auto& sp = where(n);
    if (sp.valid()) s_.set_span(sp);
  }
  ~SpanScope() { s_.set_span(saved_); }
  SpanScope(const SpanScope&) = delete;
  SpanScope& operator=(const SpanScope&) = delete;

 private:
  Session& s_;
  syntax::SourceSpan saved_;
};

Op binop(const std::string& op) {
  if (op == "+") return Op::Add;
  if (op == "-") return Op::Sub;
  if (op == "*") return Op::Mul;
  if (op == "/") return Op::Div;
  if (op == "%") return Op::Mod;
  if (op == "<") return Op::Lt;
  if (op == ">") return Op::Gt;
  if (op == "<=") return Op::Le;
  if (op == ">=") return Op::Ge;
  if (op == "==") return Op::Eq;
  if (op == "!=") return Op::Ne;
  throw Error(ErrorKind::InternalError, "unknown operator '" + op + "'");
}

}  // namespace

// ---------------------------------------------------------------- session

Session::Session(SessionOptions options) : options_(options), globals_(std::make_shared<Env>()) {
  for (const char* b : {"print", "range", "len"}) globals_->set(b, Builtin{b});
  globals_->set("float", DTypeValue{DType::F64});
  globals_->set("int", DTypeValue{DType::I64});
  globals_->set("bool", DTypeValue{DType::Bool});
  for (const char* ns : {"m", "ag", "ag__"}) globals_->set(ns, Namespace{ns});
}

Session::~Session() = default;

void Session::load(const syntax::NodePtr& module) {
  Interpreter in(*this);
  auto st = in.exec_block(module->body, globals_);
  if (st.flow != Interpreter::Flow::Normal) {
    throw Error(ErrorKind::SyntaxError, "control statement outside of a function");
  }
}

const Value* Session::global(const std::string& name) const { return globals_->find(name); }

Value Session::call_function(const std::string& name, std::vector<Value> args) {
  const Value* fn = global(name);
  if (!fn) throw Error(ErrorKind::UnknownCallee, "no function named '" + name + "'");
  user_depth_ = 0;
  scopes_.clear();
  Value r = call_user(*fn, std::move(args));
  check_defined(r);
  if (const auto* t = r.get<Tuple>()) {
    for (const auto& x : **t) check_defined(x);
  }
  return r;
}

Value Session::call_closure(const Closure& c, std::vector<Value> args) {
  const Node& def = *c.def;
  if (args.size() != def.kids.size()) {
    type_error(def.text + "() takes " + std::to_string(def.kids.size()) + " arguments but " +
               std::to_string(args.size()) + " were given");
  }
  auto env = std::make_shared<Env>();
  env->parent = c.env;
  for (std::size_t k = 0; k < args.size(); ++k) env->set(def.kids[k]->text, std::move(args[k]));
  Interpreter in(*this);
  auto st = in.exec_block(def.body, env);
  return st.flow == Interpreter::Flow::Return ? st.value : Value(None{});
}

// ------------------------------------------------------------ statements

Session::Interpreter::Status Session::Interpreter::exec_block(const syntax::NodeList& stmts,
                                                             const std::shared_ptr<Env>& env) {
  for (const auto& st : stmts) {
    if (st->kind == Kind::FunctionDef) {
      env->set(st->text, std::make_shared<const Closure>(Closure{st, env}));
      continue;
    }
    Status s = exec(*st, env);
    if (s.flow != Flow::Normal) return s;
  }
  return {};
}

Session::Interpreter::Status Session::Interpreter::exec(const Node& st,
                                                        const std::shared_ptr<Env>& env) {
  SpanScope scope(s_, st);
  try {
    switch (st.kind) {
      case Kind::Return:
        return {Flow::Return, st.kids.empty() ? Value(None{}) : eval(*st.kids[0], env)};
      case Kind::Break:
        return {Flow::Break, {}};
      case Kind::Continue:
        return {Flow::Continue, {}};
      case Kind::ExprStmt:
        eval(*st.kids[0], env);
        return {};
      case Kind::Assign:
        assign(*st.kids[0], eval(*st.kids[1], env), env);
        return {};
      case Kind::AugAssign: {
        Value cur = eval(*st.kids[0], env);
        Value rhs = eval(*st.kids[1], env);
        assign(*st.kids[0], s_.binary(binop(st.text), cur, rhs), env);
        return {};
      }
      case Kind::Assert: {
        Value c = eval(*st.kids[0], env);
        Value msg = st.kids.size() > 1 ? eval(*st.kids[1], env) : Value(None{});
        s_.assert_stmt(c, msg);
        return {};
      }
      case Kind::If: {
        const bool c = s_.truth(eval(*st.kids[0], env), "if condition");
        return exec_block(c ? st.body : st.orelse, env);
      }
      case Kind::While: {
        while (s_.truth(eval(*st.kids[0], env), "while condition")) {
          Status r = exec_block(st.body, env);
          if (r.flow == Flow::Break) break;
          if (r.flow == Flow::Return) return r;
        }
        return {};
      }
      case Kind::For: {
        Value it = eval(*st.kids[1], env);
        auto items = s_.concrete_items(it);
        if (!items) {
          throw Error(ErrorKind::StagedCoercion,
                      "for loop over a staged value in unconverted code");
        }
        for (const auto& item : *items) {
          assign(*st.kids[0], item, env);
          Status r = exec_block(st.body, env);
          if (r.flow == Flow::Break) break;
          if (r.flow == Flow::Return) return r;
        }
        return {};
      }
      default:
        throw Error(ErrorKind::InternalError,
                    "cannot execute " + std::string(syntax::kind_name(st.kind)));
    }
  } catch (Error& e) {
    e.with_span(where(st));
    throw;
  }
}

void Session::Interpreter::assign(const Node& target, Value v, const std::shared_ptr<Env>& env) {
  switch (target.kind) {
    case Kind::Name:
      env->set(target.text, std::move(v));
      return;
    case Kind::Tuple: {
      Session::check_defined(v);
      const std::vector<Value>* items = nullptr;
      if (const auto* t = v.get<Tuple>()) items = t->get();
      if (const auto* l = v.get<List>()) items = &(*l)->items;
      if (!items) type_error("cannot unpack " + type_name(v));
      if (items->size() != target.kids.size()) {
        type_error("expected " + std::to_string(target.kids.size()) + " values to unpack, got " +
                   std::to_string(items->size()));
      }
      const std::vector<Value> copy = *items;
      for (std::size_t k = 0; k < copy.size(); ++k) assign(*target.kids[k], copy[k], env);
      return;
    }
    case Kind::Subscript: {
      // Value semantics: rebuild the container and rebind its name.
      Value base = eval(*target.kids[0], env);
      Value index = eval(*target.kids[1], env);
      assign(*target.kids[0], s_.setitem(base, index, v), env);
      return;
    }
    default:
      type_error("cannot assign to " + std::string(syntax::kind_name(target.kind)));
  }
}

// ----------------------------------------------------------- expressions

Value Session::Interpreter::eval(const Node& e, const std::shared_ptr<Env>& env) {
  SpanScope scope(s_, e);
  try {
    return eval_inner(e, env);
  } catch (Error& err) {
    err.with_span(where(e));
    throw;
  }
}

Value Session::Interpreter::eval_inner(const Node& e, const std::shared_ptr<Env>& env) {
  switch (e.kind) {
    case Kind::IntLit:
      return int_value(e.ival);
    case Kind::FloatLit:
      return float_value(e.fval);
    case Kind::BoolLit:
      return bool_value(e.bval);
    case Kind::NoneLit:
      return None{};
    case Kind::StrLit:
      return e.text;
    case Kind::Name: {
      const Value* v = env->find(e.text);
      if (!v) throw Error(ErrorKind::UndefinedSymbol, "name '" + e.text + "' is not defined");
      return *v;
    }
    case Kind::Attribute:
      return s_.attribute(eval(*e.kids[0], env), e.text);
    case Kind::Subscript:
      return s_.getitem(eval(*e.kids[0], env), eval(*e.kids[1], env));
    case Kind::ListLiteral:
    case Kind::Tuple: {
      std::vector<Value> items;
      for (const auto& k : e.kids) items.push_back(eval(*k, env));
      return e.kind == Kind::Tuple ? make_tuple(std::move(items)) : make_list(std::move(items));
    }
    case Kind::BinOp: {
      Value a = eval(*e.kids[0], env);
      Value b = eval(*e.kids[1], env);
      return s_.binary(binop(e.text), a, b);
    }
    case Kind::UnaryOp: {
      Value a = eval(*e.kids[0], env);
      if (e.text == "-") return s_.negate(a);
      return bool_value(!s_.truth(a, "not operand"));
    }
    case Kind::BoolOp: {
      Value a = eval(*e.kids[0], env);
      const bool lhs = s_.truth(a, e.text == "and" ? "and operand" : "or operand");
      if (lhs == (e.text == "or")) return a;
      Value b = eval(*e.kids[1], env);
      Session::check_defined(b);
      if (!b.is_staged() && !is_bool_scalar(b)) {
        type_error(e.text + " expects bools, got " + type_name(b));
      }
      return b;
    }
    case Kind::Compare:
      return eval_compare(e, env);
    case Kind::Ternary: {
      const bool c = s_.truth(eval(*e.kids[1], env), "conditional expression");
      return eval(*e.kids[c ? 0 : 2], env);
    }
    case Kind::Call:
      return eval_call(e, env);
    default:
      throw Error(ErrorKind::InternalError,
                  "cannot evaluate " + std::string(syntax::kind_name(e.kind)));
  }
}

Value Session::Interpreter::eval_compare(const Node& e, const std::shared_ptr<Env>& env) {
  Value lhs = eval(*e.kids[0], env);
  Value result;
  for (std::size_t k = 0; k < e.ops.size(); ++k) {
    Value rhs = eval(*e.kids[k + 1], env);
    result = s_.binary(binop(e.ops[k]), lhs, rhs);
    if (k + 1 < e.ops.size() && !s_.truth(result, "chained comparison")) return result;
    lhs = std::move(rhs);
  }
  return result;
}

Value Session::Interpreter::eval_call(const Node& e, const std::shared_ptr<Env>& env) {
  const Node& callee = *e.kids[0];
  // l.append(x) / l.pop() in unconverted code: rebind the list.
  if (callee.kind == Kind::Attribute && (callee.text == "append" || callee.text == "pop")) {
    const Node& base = *callee.kids[0];
    Value lst = eval(base, env);
    const auto* st = lst.get<Staged>();
    if (lst.is<List>() || (st && st->type.list)) {
      std::vector<Value> args;
      for (std::size_t k = 1; k < e.kids.size(); ++k) args.push_back(eval(*e.kids[k], env));
      if (callee.text == "append") {
        if (args.size() != 1) type_error("append() takes exactly one argument");
        assign(base, s_.list_append(lst, args[0]), env);
        return None{};
      }
      if (!args.empty()) type_error("pop() with an index is not supported");
      Value pair = s_.list_pop(lst);
      const auto& items = *pair.as<Tuple>();
      assign(base, items[0], env);
      return items[1];
    }
  }
  Value fn = eval(callee, env);
  std::vector<Value> args;
  args.reserve(e.kids.size() - 1);
  for (std::size_t k = 1; k < e.kids.size(); ++k) args.push_back(eval(*e.kids[k], env));
  return s_.call_user(fn, std::move(args));
}

}  // namespace stagekit::runtime
