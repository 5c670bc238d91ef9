// Trace frames, capture lifting and the entry points that build graphs.

#include <algorithm>
#include <sstream>

#include "internal.hpp"
#include "stagekit/graph/builder.hpp"
#include "stagekit/graph/kernels.hpp"

namespace stagekit::runtime {

using graph::DType;
using graph::Node;
using graph::Op;
using graph::Subgraph;
using graph::Tensor;
using graph::TypeSig;
using graph::ValueRef;

void type_error(const std::string& message) { throw Error(ErrorKind::TypeError, message); }

bool is_bool_scalar(const Value& v) {
  const auto* t = v.get<Tensor>();
  return t && t->is_scalar() && t->dtype == DType::Bool;
}

bool is_int_scalar(const Value& v) {
  const auto* t = v.get<Tensor>();
  return t && t->is_scalar() && t->dtype == DType::I64;
}

std::int64_t to_index(const Value& v, const char* what) {
  Session::check_defined(v);
  if (!is_int_scalar(v)) type_error(std::string(what) + " must be an int, got " + type_name(v));
  return v.as<Tensor>().i[0];
}

void Session::check_defined(const Value& v) {
  if (const auto* u = v.get<Undefined>()) {
    throw Error(ErrorKind::UndefinedSymbol, "'" + u->name + "' is used before it is defined");
  }
}

std::vector<std::string> tree_feed_names(const std::string& param) {
  return {param + ".values", param + ".left", param + ".right", param + ".node"};
}

// ------------------------------------------------------------------ frames

void Session::push_frame(Subgraph* sg, bool function) {
  Frame f;
  f.id = trace_->next_id++;
  f.sg = sg;
  f.function = function;
  trace_->frames.push_back(std::move(f));
}

Session::Frame Session::pop_frame() {
  Frame f = std::move(trace_->frames.back());
  trace_->frames.pop_back();
  return f;
}

void Session::repush(Frame f) { trace_->frames.push_back(std::move(f)); }

ValueRef Session::lift(const Staged& s) {
  if (!trace_) fail(ErrorKind::StagedCoercion, "staged value used outside of a trace");
  auto& frames = trace_->frames;
  int at = -1;
  for (int k = static_cast<int>(frames.size()) - 1; k >= 0; --k) {
    if (frames[static_cast<std::size_t>(k)].id == s.frame) {
      at = k;
      break;
    }
  }
  if (at < 0) {
    fail(ErrorKind::StagedCoercion,
         "staged value escaped the control-flow body that produced it");
  }
  ValueRef ref = s.ref;
  for (auto k = static_cast<std::size_t>(at) + 1; k < frames.size(); ++k) {
    Frame& f = frames[k];
    if (f.function) {
      fail(ErrorKind::StagedCoercion,
           "a staged function body cannot capture a staged value from its caller");
    }
    auto it = std::find(f.cap_outer.begin(), f.cap_outer.end(), ref);
    if (it != f.cap_outer.end()) {
      ref = f.cap_local[static_cast<std::size_t>(it - f.cap_outer.begin())];
      continue;
    }
    Node p;
    p.op = Op::Param;
    p.name = "cap" + std::to_string(f.cap_outer.size());
    p.index = -1;  // fixed by merge_captures
    p.out_types = {s.type};
    p.origin = span_;
    const int id = static_cast<int>(f.sg->nodes.size());
    f.sg->nodes.push_back(std::move(p));
    f.cap_outer.push_back(ref);
    f.cap_local.push_back({id, 0});
    ref = {id, 0};
  }
  return ref;
}

std::vector<ValueRef> Session::merge_captures(std::vector<Frame*> frames,
                                              std::vector<Subgraph*> graphs,
                                              std::size_t leading) {
  std::vector<ValueRef> merged;
  for (const Frame* f : frames) {
    for (const auto& r : f->cap_outer) {
      if (std::find(merged.begin(), merged.end(), r) == merged.end()) merged.push_back(r);
    }
  }
  const Subgraph& outer = *trace_->frames.back().sg;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    Frame& f = *frames[k];
    Subgraph& g = *graphs[k];
    std::vector<int> params(g.params.begin(),
                            g.params.begin() + static_cast<std::ptrdiff_t>(leading));
    for (const auto& m : merged) {
      auto it = std::find(f.cap_outer.begin(), f.cap_outer.end(), m);
      if (it != f.cap_outer.end()) {
        params.push_back(f.cap_local[static_cast<std::size_t>(it - f.cap_outer.begin())].node);
        continue;
      }
      Node p;
      p.op = Op::Param;
      p.name = "cap" + std::to_string(params.size() - leading);
      p.out_types = {outer.type_of(m)};
      p.origin = span_;
      params.push_back(static_cast<int>(g.nodes.size()));
      g.nodes.push_back(std::move(p));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      g.nodes[static_cast<std::size_t>(params[i])].index = static_cast<int>(i);
    }
    g.params = std::move(params);
  }
  return merged;
}

// ---------------------------------------------------------------- emission

std::vector<ValueRef> Session::emit(Node node) {
  graph::Builder b(*trace_->frames.back().sg);
  std::string scope;
  for (const auto& s : scopes_) scope += (scope.empty() ? "" : "/") + s;
  b.set_origin(span_, std::move(scope));
  return b.add(std::move(node));
}

Value Session::staged_of(ValueRef ref) {
  const Frame& f = trace_->frames.back();
  return Staged{f.id, ref, f.sg->type_of(ref)};
}

Value Session::emit1(Op op, const std::vector<Value>& inputs) {
  Node n;
  n.op = op;
  for (const auto& v : inputs) n.inputs.push_back(to_node(v, std::string(graph::op_name(op))));
  return staged_of(emit(std::move(n))[0]);
}

namespace {

TypeSig element_type(const std::vector<TypeSig>& items, std::optional<DType> declared) {
  TypeSig elem = TypeSig::bottom();
  for (const auto& t : items) {
    if (t.list) type_error("lists of lists cannot be staged");
    auto j = graph::join(elem, t);
    if (!j) type_error("list elements have different types: " + elem.str() + " and " + t.str());
    elem = *j;
  }
  if (declared) {
    if (elem.is_bottom()) {
      elem = {*declared, std::nullopt, false};
    } else if (elem.dtype != *declared) {
      type_error("list declared as " + std::string(graph::dtype_name(*declared)) + " holds " +
                 elem.str());
    }
  }
  if (elem.is_bottom()) {
    throw Error(ErrorKind::ElementTypeUnset,
                "cannot stage an empty list without an element type; declare it with "
                "ag.set_element_type");
  }
  elem.list = true;
  return elem;
}

}  // namespace

bool Session::stageable(const Value& v) const {
  if (v.is<Staged>() || v.is<Tensor>()) return true;
  if (const auto* l = v.get<List>()) {
    for (const auto& x : (*l)->items) {
      if (!x.is<Staged>() && !x.is<Tensor>()) return false;
    }
    return true;
  }
  return false;
}

TypeSig Session::static_type(const Value& v, const std::string& what) {
  if (const auto* s = v.get<Staged>()) return s->type;
  if (const auto* t = v.get<Tensor>()) return TypeSig::tensor(t->dtype, t->shape);
  if (const auto* l = v.get<List>()) {
    std::vector<TypeSig> items;
    for (const auto& x : (*l)->items) items.push_back(static_type(x, what));
    return element_type(items, (*l)->elem);
  }
  check_defined(v);
  type_error("cannot stage a " + type_name(v) + " value as " + what);
}

ValueRef Session::to_node(const Value& v, const std::string& what) {
  if (const auto* s = v.get<Staged>()) return lift(*s);
  if (const auto* t = v.get<Tensor>()) {
    Node n;
    n.op = Op::Const;
    n.value = *t;
    return emit(std::move(n))[0];
  }
  if (const auto* l = v.get<List>()) {
    Node n;
    n.op = Op::ListNew;
    std::vector<TypeSig> types;
    for (const auto& x : (*l)->items) {
      if (x.is<List>()) type_error("lists of lists cannot be staged");
      n.inputs.push_back(to_node(x, what));
      types.push_back(trace_->frames.back().sg->type_of(n.inputs.back()));
    }
    n.out_types = {element_type(types, (*l)->elem)};
    return emit(std::move(n))[0];
  }
  check_defined(v);
  type_error("cannot stage a " + type_name(v) + " value as " + what);
}

// ----------------------------------------------------------------- entry

namespace {

void collect_outputs(const Value& v, std::vector<Value>& out) {
  if (v.is<None>()) return;
  if (const auto* t = v.get<Tuple>()) {
    for (const auto& x : **t) collect_outputs(x, out);
    return;
  }
  out.push_back(v);
}

}  // namespace

graph::Graph Session::trace(const std::string& entry, const std::vector<ParamSpec>& params) {
  if (trace_) fail(ErrorKind::InternalError, "nested trace");
  const Value* fn = global(entry);
  if (!fn) fail(ErrorKind::UnknownCallee, "no function named '" + entry + "'");

  trace_ = std::make_unique<TraceContext>();
  struct Reset {
    Session& s;
    ~Reset() {
      s.trace_.reset();
      s.scopes_.clear();
      s.user_depth_ = 0;
    }
  } reset{*this};

  graph::Graph& g = trace_->graph;
  push_frame(&g.main, false);
  const int main_id = trace_->frames.back().id;
  graph::Builder b(g.main);
  std::vector<Value> args;
  bool any_staged = false;
  for (const auto& p : params) {
    switch (p.kind) {
      case ParamSpec::Kind::Tensor:
        args.push_back(Staged{main_id, b.param(p.name, p.type), p.type});
        any_staged = true;
        break;
      case ParamSpec::Kind::Tree: {
        const auto names = tree_feed_names(p.name);
        const TypeSig types[4] = {TypeSig::tensor(DType::F64, {-1}),
                                  TypeSig::tensor(DType::I64, {-1}),
                                  TypeSig::tensor(DType::I64, {-1}), TypeSig::scalar(DType::I64)};
        std::vector<Value> parts;
        for (int k = 0; k < 4; ++k) {
          parts.push_back(Staged{main_id, b.param(names[static_cast<std::size_t>(k)], types[k]),
                                 types[k]});
        }
        args.push_back(StagedTree{std::make_shared<const std::vector<Value>>(std::move(parts))});
        any_staged = true;
        break;
      }
      case ParamSpec::Kind::Concrete:
        args.push_back(p.value);
        break;
    }
  }

  Value result;
  const auto* closure = fn->get<std::shared_ptr<const Closure>>();
  if (options_.backend == Backend::Sexpr && closure && any_staged) {
    result = stage_call(*closure, std::move(args));
  } else {
    result = converted_call(*fn, std::move(args));
  }
  std::vector<Value> outs;
  collect_outputs(result, outs);
  for (const auto& v : outs) g.main.outputs.push_back(to_node(v, "a traced output"));

  graph::Graph out = std::move(g);
  graph::validate(out);
  return out;
}

std::vector<graph::RtValue> flatten_result(const Value& v) {
  std::vector<Value> outs;
  collect_outputs(v, outs);
  std::vector<graph::RtValue> rt;
  for (const auto& x : outs) {
    if (const auto* t = x.get<Tensor>()) {
      rt.emplace_back(*t);
      continue;
    }
    if (const auto* l = x.get<List>()) {
      auto tl = std::make_shared<graph::TensorList>();
      std::vector<TypeSig> types;
      for (const auto& item : (*l)->items) {
        const auto* t = item.get<Tensor>();
        if (!t) type_error("cannot return a list holding " + type_name(item));
        tl->items.push_back(*t);
        types.push_back(TypeSig::tensor(t->dtype, t->shape));
      }
      TypeSig elem = element_type(types, (*l)->elem);
      elem.list = false;
      tl->elem = elem;
      rt.emplace_back(std::move(tl));
      continue;
    }
    Session::check_defined(x);
    type_error("cannot return a " + type_name(x) + " value from an entry function");
  }
  return rt;
}

// ------------------------------------------------------------------ feeds

Value parse_feed(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorKind::UsageError, "feed value '" + text + "' needs a type prefix");
  }
  const std::string head = text.substr(0, colon);
  const std::string body = text.substr(colon + 1);
  if (head == "tree") return parse_tree(body);
  if (head == "str") return body;

  std::string dname = head;
  graph::Shape shape;
  bool has_shape = false;
  if (auto lb = head.find('['); lb != std::string::npos) {
    if (head.back() != ']') throw Error(ErrorKind::UsageError, "bad feed shape in '" + head + "'");
    dname = head.substr(0, lb);
    std::stringstream dims(head.substr(lb + 1, head.size() - lb - 2));
    std::string d;
    while (std::getline(dims, d, ',')) {
      try {
        std::size_t used = 0;
        const long long n = std::stoll(d, &used);
        if (used != d.size() || n < 0) throw std::invalid_argument(d);
        shape.push_back(n);
      } catch (const std::logic_error&) {
        throw Error(ErrorKind::UsageError, "bad feed dimension '" + d + "'");
      }
    }
    has_shape = true;
  }
  const DType dtype = graph::parse_dtype(dname);
  if (dtype == DType::Unknown) throw Error(ErrorKind::UsageError, "unknown feed dtype '" + dname + "'");

  std::vector<std::string> items;
  if (!body.empty()) {
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) items.push_back(item);
  }
  if (!has_shape && items.size() != 1) {
    throw Error(ErrorKind::UsageError, "scalar feed needs exactly one value: '" + text + "'");
  }
  Tensor t = Tensor::zeros(dtype, shape);
  if (static_cast<std::int64_t>(items.size()) != graph::num_elements(shape)) {
    throw Error(ErrorKind::UsageError, "feed '" + text + "' has " + std::to_string(items.size()) +
                                           " values for shape " + graph::shape_str(shape));
  }
  for (std::size_t k = 0; k < items.size(); ++k) {
    const std::string& s = items[k];
    try {
      std::size_t used = 0;
      if (dtype == DType::F64) {
        t.f[k] = std::stod(s, &used);
      } else if (dtype == DType::I64) {
        t.i[k] = std::stoll(s, &used);
      } else if (s == "true" || s == "True" || s == "1") {
        t.i[k] = 1;
        used = s.size();
      } else if (s == "false" || s == "False" || s == "0") {
        t.i[k] = 0;
        used = s.size();
      }
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::UsageError, "bad feed value '" + s + "' for " + dname);
    }
  }
  return t;
}

}  // namespace stagekit::runtime
