// Control-flow dispatch, calls and staged function specialization.

#include <algorithm>

#include "internal.hpp"
#include "stagekit/graph/builder.hpp"

namespace stagekit::runtime {

using graph::DType;
using graph::Node;
using graph::Op;
using graph::Subgraph;
using graph::Tensor;
using graph::TypeSig;
using graph::ValueRef;

namespace {

constexpr int kMaxSignatureRounds = 8;

std::string name_at(const std::vector<std::string>& names, std::size_t j) {
  return j < names.size() ? "'" + names[j] + "'" : "output " + std::to_string(j);
}

void check_predicate(const Value& v, const char* what) {
  const auto* s = v.get<Staged>();
  if (!s) {
    if (v.is<StagedTree>()) type_error(std::string(what) + " must be a bool, got a staged tree");
    return;
  }
  const TypeSig& t = s->type;
  const bool ok = !t.list && (t.dtype == DType::Bool || t.dtype == DType::Unknown) &&
                  (!t.shape || t.shape->empty());
  if (!ok) type_error(std::string(what) + " must be a bool scalar, got " + t.str());
}

}  // namespace

std::vector<std::string> Session::names_of(const Value& names) {
  std::vector<std::string> out;
  if (names.is<None>()) return out;
  const auto* t = names.get<Tuple>();
  if (!t) type_error("symbol names must be a tuple of strings");
  for (const auto& n : **t) {
    const auto* s = n.get<std::string>();
    if (!s) type_error("symbol names must be a tuple of strings");
    out.push_back(*s);
  }
  return out;
}

std::vector<Value> Session::unpack_state(const Value& v, std::size_t n, const std::string& what) {
  if (n == 1) return {v};
  const auto* t = v.get<Tuple>();
  if (!t || (*t)->size() != n) {
    throw Error(ErrorKind::InternalError, what + " returned " + type_name(v) + ", expected " +
                                              std::to_string(n) + " values");
  }
  return **t;
}

namespace {

// Loop state always arrives as a tuple, even for a single variable.
std::vector<Value> init_state(const Value& init, std::size_t n) {
  const auto* t = init.get<Tuple>();
  if (!t || (*t)->size() != n) {
    throw Error(ErrorKind::InternalError, "loop state is " + type_name(init) + ", expected a tuple of " +
                                              std::to_string(n));
  }
  return **t;
}

}  // namespace

Value Session::pack_state(std::vector<Value> vals) {
  if (vals.size() == 1) return vals[0];
  return make_tuple(std::move(vals));
}

// --------------------------------------------------------------- branches

std::vector<Value> Session::stage_cond(const Value& pred,
                                       const std::function<std::vector<Value>()>& then,
                                       const std::function<std::vector<Value>()>& els,
                                       const std::vector<std::string>& names) {
  const ValueRef pred_ref = to_node(pred, "a condition");
  auto run = [&](const std::shared_ptr<Subgraph>& g,
                 const std::function<std::vector<Value>()>& fn, std::vector<Value>& out) {
    push_frame(g.get(), false);
    try {
      out = fn();
    } catch (...) {
      pop_frame();
      throw;
    }
    return pop_frame();
  };
  auto tg = std::make_shared<Subgraph>();
  auto eg = std::make_shared<Subgraph>();
  std::vector<Value> tv, ev;
  Frame tf = run(tg, then, tv);
  Frame ef = run(eg, els, ev);
  if (tv.size() != ev.size()) {
    throw Error(ErrorKind::BranchMismatch, "branches produce " + std::to_string(tv.size()) +
                                               " and " + std::to_string(ev.size()) + " values");
  }

  const std::size_t n = tv.size();
  std::vector<bool> staged(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    const Value& a = tv[j];
    const Value& b = ev[j];
    if (!a.is_staged() && !b.is_staged() && values_equal(a, b)) continue;
    if (const auto* u = a.is<Undefined>() ? a.get<Undefined>() : b.get<Undefined>()) {
      throw Error(ErrorKind::UndefinedBranchOutput,
                  "'" + u->name + "' is assigned in only one branch of a staged conditional");
    }
    if (!stageable(a) || !stageable(b)) {
      throw Error(ErrorKind::BranchMismatch, name_at(names, j) + " is " + type_name(a) +
                                                 " in one branch and " + type_name(b) +
                                                 " in the other");
    }
    staged[j] = true;
  }

  auto outputs = [&](Frame& f, const std::shared_ptr<Subgraph>& g, const std::vector<Value>& vals) {
    repush(std::move(f));
    std::vector<ValueRef> refs;
    try {
      for (std::size_t j = 0; j < n; ++j) {
        if (staged[j]) refs.push_back(to_node(vals[j], "a branch output"));
      }
    } catch (...) {
      f = pop_frame();
      throw;
    }
    f = pop_frame();
    g->outputs = refs;
  };
  outputs(tf, tg, tv);
  outputs(ef, eg, ev);

  Node cond;
  cond.op = Op::Cond;
  std::size_t k = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (!staged[j]) continue;
    const TypeSig& a = tg->type_of(tg->outputs[k]);
    const TypeSig& b = eg->type_of(eg->outputs[k]);
    auto t = graph::join(a, b);
    if (!t) {
      throw Error(ErrorKind::BranchMismatch, name_at(names, j) + " is " + a.str() +
                                                 " in one branch and " + b.str() +
                                                 " in the other");
    }
    cond.out_types.push_back(*t);
    ++k;
  }
  const auto caps = merge_captures({&tf, &ef}, {tg.get(), eg.get()}, 0);
  cond.inputs.push_back(pred_ref);
  cond.inputs.insert(cond.inputs.end(), caps.begin(), caps.end());
  cond.subgraphs = {tg, eg};
  const auto refs = emit(std::move(cond));

  std::vector<Value> result;
  k = 0;
  for (std::size_t j = 0; j < n; ++j) result.push_back(staged[j] ? staged_of(refs[k++]) : tv[j]);
  return result;
}

Value Session::if_stmt(const Value& cond, const Value& body, const Value& orelse,
                       const Value& names) {
  const auto syms = names_of(names);
  const std::size_t n = syms.size();
  check_defined(cond);
  if (!cond.is_staged()) {
    const bool c = truth(cond, "if condition");
    ++branch_calls_;
    return call(c ? body : orelse, {});
  }
  check_predicate(cond, "if condition");
  auto thunk = [&](const Value& fn) {
    return [&, fn]() {
      ++branch_calls_;
      return n == 0 ? std::vector<Value>{} : unpack_state(call(fn, {}), n, "branch");
    };
  };
  return pack_state(stage_cond(cond, thunk(body), thunk(orelse), syms));
}

Value Session::if_exp(const Value& cond, const Value& body, const Value& orelse) {
  check_defined(cond);
  if (!cond.is_staged()) return call(truth(cond, "conditional expression") ? body : orelse, {});
  check_predicate(cond, "conditional expression");
  auto outs = stage_cond(
      cond, [&] { return std::vector<Value>{call(body, {})}; },
      [&] { return std::vector<Value>{call(orelse, {})}; }, {"value"});
  return outs[0];
}

Value Session::and_(const Value& a, const std::function<Value()>& rhs) {
  check_defined(a);
  auto checked = [&]() {
    Value b = rhs();
    check_defined(b);
    if (!b.is_staged() && !is_bool_scalar(b)) type_error("and expects bools, got " + type_name(b));
    return b;
  };
  if (!a.is_staged()) {
    if (!truth(a, "and operand")) return a;
    return checked();
  }
  check_predicate(a, "and operand");
  return stage_cond(a, [&] { return std::vector<Value>{checked()}; },
                    [&] { return std::vector<Value>{a}; }, {"and"})[0];
}

Value Session::or_(const Value& a, const std::function<Value()>& rhs) {
  check_defined(a);
  auto checked = [&]() {
    Value b = rhs();
    check_defined(b);
    if (!b.is_staged() && !is_bool_scalar(b)) type_error("or expects bools, got " + type_name(b));
    return b;
  };
  if (!a.is_staged()) {
    if (truth(a, "or operand")) return a;
    return checked();
  }
  check_predicate(a, "or operand");
  return stage_cond(a, [&] { return std::vector<Value>{a}; },
                    [&] { return std::vector<Value>{checked()}; }, {"or"})[0];
}

void Session::assert_stmt(const Value& cond, const Value& msg) {
  check_defined(cond);
  const std::string text = msg.is<None>() ? "assertion failed" : format_value(msg);
  if (cond.is_staged()) {
    check_predicate(cond, "assert condition");
    Node n;
    n.op = Op::Assert;
    n.inputs = {to_node(cond, "assert condition")};
    n.strings = {text};
    emit(std::move(n));
    return;
  }
  if (!truth(cond, "assert condition")) throw Error(ErrorKind::AssertionFailed, text);
}

Value Session::function_scope(const Value& name, const Value& body) {
  const auto* s = name.get<std::string>();
  const std::string scope = s ? *s : "fn";
  scopes_.push_back(scope);
  try {
    Value r = call(body, {});
    scopes_.pop_back();
    return r;
  } catch (Error& e) {
    scopes_.pop_back();
    if (tracing()) e.add_frame("while staging '" + scope + "'");
    throw;
  }
}

// ------------------------------------------------------------------- loops

std::vector<Value> Session::stage_loop(
    std::vector<Value> init, const std::vector<std::string>& names,
    const std::function<Value(const std::vector<Value>&)>& test,
    const std::function<std::vector<Value>(const std::vector<Value>&)>& body,
    const LoopOptions& opts) {
  const std::size_t n = init.size();
  std::vector<int> slot(n, -1);  // loop-variable position, or -1 if invariant
  std::vector<ValueRef> init_refs;
  std::vector<TypeSig> types;
  for (std::size_t j = 0; j < n; ++j) {
    if (init[j].is<Undefined>() || !stageable(init[j])) continue;
    slot[j] = static_cast<int>(init_refs.size());
    init_refs.push_back(to_node(init[j], "a loop variable"));
    types.push_back(trace_->frames.back().sg->type_of(init_refs.back()));
  }
  const std::size_t nv = init_refs.size();

  auto open = [&](const std::shared_ptr<Subgraph>& g) {
    push_frame(g.get(), false);
    graph::Builder b(*g);
    b.set_origin(span_, {});
    std::vector<Value> vals = init;
    for (std::size_t j = 0; j < n; ++j) {
      if (slot[j] < 0) continue;
      const TypeSig& t = types[static_cast<std::size_t>(slot[j])];
      const std::string pname = j < names.size() ? names[j] : "v" + std::to_string(j);
      vals[j] = Staged{trace_->frames.back().id, b.param(pname, t), t};
    }
    return vals;
  };

  auto tg = std::make_shared<Subgraph>();
  std::vector<Value> tvals = open(tg);
  Frame tf;
  try {
    Value t = test(tvals);
    check_defined(t);
    if (t.is<Staged>()) {
      check_predicate(t, "loop test");
    } else if (!is_bool_scalar(t)) {
      throw Error(ErrorKind::NonBooleanTest, "loop test must be a bool, got " + type_name(t));
    }
    tg->outputs = {to_node(t, "a loop test")};
  } catch (...) {
    pop_frame();
    throw;
  }
  tf = pop_frame();

  auto bg = std::make_shared<Subgraph>();
  std::vector<Value> bvals = open(bg);
  std::vector<TypeSig> out_types = types;
  Frame bf;
  try {
    std::vector<Value> outs = body(bvals);
    for (std::size_t j = 0; j < n; ++j) {
      const Value& o = outs[j];
      if (slot[j] < 0) {
        if (values_equal(o, init[j])) continue;
        if (const auto* u = init[j].get<Undefined>()) {
          throw Error(ErrorKind::UndefinedSymbol,
                      "'" + u->name + "' must be defined before a staged loop that assigns it");
        }
        throw Error(ErrorKind::LoopVariantType, name_at(names, j) + " changes from " +
                                                    type_name(init[j]) + " to " + type_name(o) +
                                                    " inside a staged loop");
      }
      check_defined(o);
      if (!stageable(o)) {
        throw Error(ErrorKind::LoopVariantType, name_at(names, j) + " changes from " +
                                                    types[static_cast<std::size_t>(slot[j])].str() +
                                                    " to " + type_name(o) + " inside a staged loop");
      }
      const ValueRef r = to_node(o, "a loop variable");
      bg->outputs.push_back(r);
      const TypeSig& before = types[static_cast<std::size_t>(slot[j])];
      const TypeSig& after = bg->type_of(r);
      auto joined = graph::join(before, after);
      if (!joined) {
        throw Error(ErrorKind::LoopVariantType, name_at(names, j) + " changes from " + before.str() +
                                                    " to " + after.str() + " inside a staged loop");
      }
      out_types[static_cast<std::size_t>(slot[j])] = *joined;
    }
  } catch (...) {
    pop_frame();
    throw;
  }
  bf = pop_frame();

  const auto caps = merge_captures({&tf, &bf}, {tg.get(), bg.get()}, nv);
  Node w;
  w.op = Op::While;
  w.inputs = init_refs;
  w.inputs.insert(w.inputs.end(), caps.begin(), caps.end());
  w.ints = {static_cast<std::int64_t>(nv)};
  w.max_iterations = opts.max_iterations;
  w.subgraphs = {tg, bg};
  w.out_types = out_types;
  const auto refs = emit(std::move(w));

  std::vector<Value> result = init;
  for (std::size_t j = 0; j < n; ++j) {
    if (slot[j] >= 0) result[j] = staged_of(refs[static_cast<std::size_t>(slot[j])]);
  }
  return result;
}

namespace {

LoopOptions options_of(const Value& v) {
  if (const auto* o = v.get<LoopOptions>()) return *o;
  if (v.is<None>()) return {};
  type_error("loop options must come from ag__.loop_options");
}

void check_limit(const LoopOptions& o, std::int64_t iterations) {
  if (o.max_iterations && iterations >= *o.max_iterations) {
    throw Error(ErrorKind::IterationLimitExceeded,
                "loop exceeded " + std::to_string(*o.max_iterations) + " iterations");
  }
}

}  // namespace

Value Session::while_stmt(const Value& test, const Value& body, const Value& init,
                          const Value& names, const Value& opts, const Value& captured) {
  const auto syms = names_of(names);
  const std::size_t n = syms.size();
  const LoopOptions o = options_of(opts);
  std::vector<Value> state = init_state(init, n);
  auto run_test = [&](const std::vector<Value>& s) { return call(test, s); };
  auto run_body = [&](const std::vector<Value>& s) {
    return n == 0 ? std::vector<Value>{} : unpack_state(call(body, s), n, "loop body");
  };

  bool staged = false;
  for (const auto& v : state) staged = staged || v.is_staged();
  if (const auto* caps = captured.get<Tuple>()) {
    for (const auto& v : **caps) staged = staged || v.is_staged();
  }
  if (staged) return pack_state(stage_loop(state, syms, run_test, run_body, o));

  for (std::int64_t it = 0;; ++it) {
    Value t = run_test(state);
    check_defined(t);
    if (t.is_staged()) {
      // The test became data dependent mid-loop: stage the remaining iterations.
      return pack_state(stage_loop(state, syms, run_test, run_body, o));
    }
    if (!is_bool_scalar(t)) {
      throw Error(ErrorKind::NonBooleanTest, "loop test must be a bool, got " + type_name(t));
    }
    if (t.as<Tensor>().i[0] == 0) break;
    check_limit(o, it);
    state = run_body(state);
  }
  return n == 0 ? Value(make_tuple({})) : pack_state(state);
}

Value Session::for_stmt(const Value& iter, const Value& body, const Value& init,
                        const Value& names, const Value& opts) {
  const auto syms = names_of(names);
  const std::size_t n = syms.size();
  const LoopOptions o = options_of(opts);
  std::vector<Value> state = init_state(init, n);
  auto run_body = [&](const Value& item, const std::vector<Value>& s) {
    std::vector<Value> args{item};
    args.insert(args.end(), s.begin(), s.end());
    Value r = call(body, std::move(args));
    return n == 0 ? std::vector<Value>{} : unpack_state(r, n, "loop body");
  };

  if (auto items = concrete_items(iter)) {
    std::int64_t it = 0;
    for (const auto& item : *items) {
      check_limit(o, it++);
      state = run_body(item, state);
    }
    return n == 0 ? Value(make_tuple({})) : pack_state(state);
  }

  // Staged iterable: a While over an index.
  const Value count = len(iter);
  std::vector<Value> init2{int_value(0)};
  init2.insert(init2.end(), state.begin(), state.end());
  std::vector<std::string> names2{"ag__index"};
  names2.insert(names2.end(), syms.begin(), syms.end());
  auto test = [&](const std::vector<Value>& s) { return binary(Op::Lt, s[0], count); };
  auto step = [&](const std::vector<Value>& s) {
    Value item = getitem(iter, s[0]);
    std::vector<Value> out{binary(Op::Add, s[0], int_value(1))};
    auto rest = run_body(item, std::vector<Value>(s.begin() + 1, s.end()));
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
  };
  auto res = stage_loop(init2, names2, test, step, o);
  res.erase(res.begin());
  return n == 0 ? Value(make_tuple({})) : pack_state(std::move(res));
}

// ------------------------------------------------------------------- calls

Value Session::call(const Value& fn, std::vector<Value> args) {
  if (const auto* c = fn.get<std::shared_ptr<const Closure>>()) return call_closure(**c, std::move(args));
  if (const auto* b = fn.get<Builtin>()) return call_builtin(b->name, std::move(args));
  if (const auto* f = fn.get<NativeFn>()) return (*f->fn)(std::move(args));
  if (const auto* d = fn.get<DTypeValue>()) {
    if (args.size() != 1) type_error(std::string(graph::dtype_name(d->dtype)) + "() takes 1 argument");
    return cast(d->dtype, args[0]);
  }
  check_defined(fn);
  throw Error(ErrorKind::UnknownCallee, "'" + type_name(fn) + "' object is not callable");
}

Value Session::call_user(const Value& fn, std::vector<Value> args) {
  const auto* c = fn.get<std::shared_ptr<const Closure>>();
  if (!c) return call(fn, std::move(args));
  const bool inlining = tracing() && options_.backend == Backend::Graph;
  const int limit = inlining ? options_.graph_recursion_limit : options_.native_recursion_limit;
  if (user_depth_ >= limit) {
    throw Error(ErrorKind::RecursionDepthExceeded,
                "call depth exceeded " + std::to_string(limit) + " in '" + (*c)->def->text + "'" +
                    (inlining ? "; the graph backend inlines calls and cannot stage recursion" : ""));
  }
  ++user_depth_;
  struct Guard {
    int& d;
    ~Guard() { --d; }
  } guard{user_depth_};
  return call_closure(**c, std::move(args));
}

Value Session::converted_call(const Value& fn, std::vector<Value> args) {
  check_defined(fn);
  for (const auto& a : args) check_defined(a);
  const auto* c = fn.get<std::shared_ptr<const Closure>>();
  if (c && tracing() && options_.backend == Backend::Sexpr) {
    bool staged = false;
    for (const auto& a : args) staged = staged || a.is_staged();
    if (staged) return stage_call(*c, std::move(args));
  }
  return call_user(fn, std::move(args));
}

Value Session::emit_call(const std::string& name, const std::vector<TypeSig>& outs, bool tuple,
                         const std::vector<Value>& args) {
  Node n;
  n.op = Op::FuncCall;
  n.name = name;
  for (const auto& a : args) {
    if (const auto* t = a.get<StagedTree>()) {
      for (const auto& p : *t->parts) n.inputs.push_back(to_node(p, "a call argument"));
    } else if (stageable(a)) {
      n.inputs.push_back(to_node(a, "a call argument"));
    }
  }
  n.out_types = outs;
  const auto refs = emit(std::move(n));
  std::vector<Value> vals;
  for (const auto& r : refs) vals.push_back(staged_of(r));
  if (vals.empty()) return None{};
  if (vals.size() == 1 && !tuple) return vals[0];
  return make_tuple(std::move(vals));
}

Value Session::stage_call(const std::shared_ptr<const Closure>& fn, std::vector<Value> args) {
  const std::string base = fn->def->text;
  std::string key = base + "(";
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (k) key += ", ";
    const Value& a = args[k];
    if (a.is<StagedTree>()) {
      key += "tree";
    } else if (stageable(a)) {
      key += static_type(a, "a call argument").str();
    } else {
      key += "=" + repr_value(a);
    }
  }
  key += ")";

  TraceContext& tc = *trace_;
  if (auto it = tc.functions.find(key); it != tc.functions.end()) {
    if (!it->second.done) it->second.used = true;
    const FunctionEntry e = it->second;
    return emit_call(e.name, e.outputs, e.tuple, args);
  }

  const int uses = tc.name_uses[base]++;
  const std::string name = uses == 0 ? base : base + "_" + std::to_string(uses);
  tc.functions[key] = FunctionEntry{name, false, {TypeSig::bottom()}, false};
  tc.key_order.push_back(key);

  // Kleene iteration from the bottom signature until the body's outputs
  // agree with what recursive call sites assumed.
  for (int round = 0; round < kMaxSignatureRounds; ++round) {
    const std::size_t keys_before = tc.key_order.size();
    const std::size_t fns_before = tc.graph.function_order.size();
    const auto names_before = tc.name_uses;
    tc.functions[key].used = false;

    auto sg = std::make_shared<Subgraph>();
    push_frame(sg.get(), true);
    std::vector<ValueRef> out_refs;
    bool tuple = false;
    try {
      graph::Builder b(*sg);
      b.set_origin(span_, {});
      const int id = trace_->frames.back().id;
      const auto& params = fn->def->kids;
      std::vector<Value> inner;
      for (std::size_t k = 0; k < args.size(); ++k) {
        const std::string pname = k < params.size() ? params[k]->text : "p" + std::to_string(k);
        const Value& a = args[k];
        if (const auto* t = a.get<StagedTree>()) {
          const auto fields = tree_feed_names(pname);
          std::vector<Value> parts;
          for (std::size_t f = 0; f < 4; ++f) {
            const TypeSig ty = static_type((*t->parts)[f], "a tree field");
            parts.push_back(Staged{id, b.param(fields[f], ty), ty});
          }
          inner.push_back(StagedTree{std::make_shared<const std::vector<Value>>(std::move(parts))});
        } else if (stageable(a)) {
          const TypeSig ty = static_type(a, "a call argument");
          inner.push_back(Staged{id, b.param(pname, ty), ty});
        } else {
          inner.push_back(a);
        }
      }
      Value r = call_user(fn, std::move(inner));
      tuple = r.is<Tuple>();
      std::vector<Value> outs;
      if (tuple) {
        outs = *r.as<Tuple>();
      } else if (!r.is<None>()) {
        outs = {r};
      }
      for (const auto& v : outs) out_refs.push_back(to_node(v, "a function result"));
    } catch (...) {
      pop_frame();
      tc.functions.erase(key);
      throw;
    }
    pop_frame();
    sg->outputs = out_refs;

    FunctionEntry& entry = tc.functions[key];
    const auto found = sg->output_types();
    if (!entry.used || (found == entry.outputs && tuple == entry.tuple)) {
      entry.outputs = found;
      entry.tuple = tuple;
      entry.done = true;
      tc.graph.functions[name] = graph::Function{name, key, sg};
      tc.graph.function_order.push_back(name);
      return emit_call(name, entry.outputs, entry.tuple, args);
    }

    // Widen the assumption and discard everything staged under the old one.
    std::vector<TypeSig> next = found;
    if (found.size() == entry.outputs.size()) {
      for (std::size_t k = 0; k < found.size(); ++k) {
        auto j = graph::join(entry.outputs[k], found[k]);
        if (!j) {
          throw Error(ErrorKind::SignatureMismatch,
                      "recursive function '" + base + "' returns " + found[k].str() +
                          " where its recursive calls assumed " + entry.outputs[k].str());
        }
        next[k] = *j;
      }
    }
    entry.outputs = next;
    entry.tuple = tuple;
    for (std::size_t k = keys_before; k < tc.key_order.size(); ++k) tc.functions.erase(tc.key_order[k]);
    tc.key_order.resize(keys_before);
    for (std::size_t k = fns_before; k < tc.graph.function_order.size(); ++k) {
      tc.graph.functions.erase(tc.graph.function_order[k]);
    }
    tc.graph.function_order.resize(fns_before);
    tc.name_uses = names_before;
  }
  tc.functions.erase(key);
  throw Error(ErrorKind::SignatureMismatch,
              "could not infer a stable signature for recursive function '" + base + "'");
}

// ---------------------------------------------------------- ag__ namespace

Value Session::ag_intrinsic(const std::string& fn, std::vector<Value>& a) {
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (a.size() < lo || a.size() > hi) {
      type_error("ag__." + fn + "() got " + std::to_string(a.size()) + " arguments");
    }
  };
  auto thunk = [&](const Value& f) { return [this, f]() { return call(f, {}); }; };
  if (fn == "converted_call") {
    need(1, SIZE_MAX);
    std::vector<Value> rest(a.begin() + 1, a.end());
    return converted_call(a[0], std::move(rest));
  }
  if (fn == "if_stmt") {
    need(4, 4);
    return if_stmt(a[0], a[1], a[2], a[3]);
  }
  if (fn == "if_exp") {
    need(3, 3);
    return if_exp(a[0], a[1], a[2]);
  }
  if (fn == "while_stmt") {
    need(5, 6);
    return while_stmt(a[0], a[1], a[2], a[3], a[4], a.size() == 6 ? a[5] : Value());
  }
  if (fn == "for_stmt") {
    need(5, 5);
    return for_stmt(a[0], a[1], a[2], a[3], a[4]);
  }
  if (fn == "and_") {
    need(2, 2);
    return and_(a[0], thunk(a[1]));
  }
  if (fn == "or_") {
    need(2, 2);
    return or_(a[0], thunk(a[1]));
  }
  if (fn == "not_") {
    need(1, 1);
    return not_(a[0]);
  }
  static const std::pair<const char*, Op> kCompare[] = {
      {"eq_", Op::Eq}, {"ne_", Op::Ne}, {"lt_", Op::Lt}, {"gt_", Op::Gt}, {"le_", Op::Le}, {"ge_", Op::Ge}};
  for (const auto& [cname, op] : kCompare) {
    if (fn == cname) {
      need(2, 2);
      return binary(op, a[0], a[1]);
    }
  }
  if (fn == "assert_stmt") {
    need(1, 2);
    assert_stmt(a[0], a.size() == 2 ? a[1] : Value());
    return None{};
  }
  if (fn == "function_scope") {
    need(2, 2);
    return function_scope(a[0], a[1]);
  }
  if (fn == "list_new") return list_new(a, std::nullopt);
  if (fn == "typed_list") {
    need(1, SIZE_MAX);
    const auto* s = a[0].get<std::string>();
    const DType d = s ? graph::parse_dtype(*s) : DType::Unknown;
    if (d == DType::Unknown) type_error("typed_list expects a dtype name");
    return list_new(std::vector<Value>(a.begin() + 1, a.end()), d);
  }
  if (fn == "list_append") {
    need(2, 2);
    return list_append(a[0], a[1]);
  }
  if (fn == "list_pop") {
    need(1, 1);
    return list_pop(a[0]);
  }
  if (fn == "list_stack") {
    need(1, 1);
    return list_stack(a[0]);
  }
  if (fn == "getitem") {
    need(2, 2);
    return getitem(a[0], a[1]);
  }
  if (fn == "setitem") {
    need(3, 3);
    return setitem(a[0], a[1], a[2]);
  }
  if (fn == "loop_options") {
    need(1, 1);
    const std::int64_t m = to_index(a[0], "max_iterations");
    if (m < 0) type_error("max_iterations must be non-negative");
    return LoopOptions{m};
  }
  if (fn == "Undefined") {
    need(1, 1);
    const auto* s = a[0].get<std::string>();
    if (!s) type_error("Undefined expects a symbol name");
    return Undefined{*s};
  }
  throw Error(ErrorKind::UnknownCallee, "unknown intrinsic 'ag__." + fn + "'");
}

}  // namespace stagekit::runtime
