// Data operations: arithmetic, lists, subscripts, attributes and builtins.

#include <cmath>

#include "internal.hpp"
#include "stagekit/graph/kernels.hpp"

namespace stagekit::runtime {

namespace kernels = graph::kernels;
using graph::DType;
using graph::Node;
using graph::Op;
using graph::Tensor;
using graph::TypeSig;

namespace {

const Staged* staged_list(const Value& v) {
  const auto* s = v.get<Staged>();
  return s && s->type.list ? s : nullptr;
}

const Staged* staged_tensor(const Value& v) {
  const auto* s = v.get<Staged>();
  return s && !s->type.list ? s : nullptr;
}

bool any_staged(const std::vector<Value>& vs) {
  for (const auto& v : vs) {
    if (v.is_staged()) return true;
  }
  return false;
}

const Tensor& tensor_arg(const Value& v, const std::string& fn) {
  Session::check_defined(v);
  const auto* t = v.get<Tensor>();
  if (!t) type_error(fn + " expects a number or tensor, got " + type_name(v));
  return *t;
}

void expect_args(const std::string& fn, const std::vector<Value>& args, std::size_t lo,
                 std::size_t hi) {
  if (args.size() < lo || args.size() > hi) {
    std::string want = lo == hi ? std::to_string(lo) : std::to_string(lo) + " to " + std::to_string(hi);
    type_error(fn + "() takes " + want + " arguments, got " + std::to_string(args.size()));
  }
}

// Nested Python-style lists of numbers into a dense tensor.
void flatten_constant(const Value& v, std::size_t depth, graph::Shape& shape,
                      std::vector<const Tensor*>& leaves) {
  if (const auto* l = v.get<List>()) {
    const auto n = static_cast<std::int64_t>((*l)->items.size());
    if (depth == shape.size()) {
      shape.push_back(n);
    } else if (shape[depth] != n) {
      throw Error(ErrorKind::ShapeMismatch, "ragged nested list in m.constant");
    }
    for (const auto& x : (*l)->items) flatten_constant(x, depth + 1, shape, leaves);
    return;
  }
  const auto* t = v.get<Tensor>();
  if (!t || !t->is_scalar()) type_error("m.constant expects numbers or nested lists of numbers");
  if (depth != shape.size()) throw Error(ErrorKind::ShapeMismatch, "ragged nested list in m.constant");
  leaves.push_back(t);
}

Tensor constant_of(const Value& v) {
  if (const auto* t = v.get<Tensor>()) return *t;
  graph::Shape shape;
  std::vector<const Tensor*> leaves;
  flatten_constant(v, 0, shape, leaves);
  DType d = DType::Bool;
  for (const auto* t : leaves) {
    if (t->dtype == DType::F64) d = DType::F64;
    if (t->dtype == DType::I64 && d == DType::Bool) d = DType::I64;
  }
  if (leaves.empty()) d = DType::F64;
  for (const auto* t : leaves) {
    if ((t->dtype == DType::Bool) != (d == DType::Bool)) {
      type_error("m.constant cannot mix bools and numbers");
    }
  }
  Tensor out = Tensor::zeros(d, shape);
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    if (d == DType::F64) {
      out.f[k] = leaves[k]->as_f64(0);
    } else {
      out.i[k] = leaves[k]->i[0];
    }
  }
  return out;
}

DType dtype_arg(const Value& v, const std::string& fn) {
  if (const auto* d = v.get<DTypeValue>()) return d->dtype;
  if (const auto* s = v.get<std::string>()) {
    const DType d = graph::parse_dtype(*s);
    if (d != DType::Unknown) return d;
  }
  type_error(fn + " expects a dtype (float, int or bool), got " + repr_value(v));
}

}  // namespace

// -------------------------------------------------------------- arithmetic

Value Session::binary(Op op, const Value& a, const Value& b) {
  check_defined(a);
  check_defined(b);
  if (a.is_staged() || b.is_staged()) {
    if (a.is<StagedTree>() || b.is<StagedTree>()) {
      type_error("unsupported operand types for " + std::string(graph::op_name(op)) + ": " +
                 type_name(a) + " and " + type_name(b));
    }
    return emit1(op, {a, b});
  }
  const auto* ta = a.get<Tensor>();
  const auto* tb = b.get<Tensor>();
  if (ta && tb) return kernels::binary(op, *ta, *tb);
  if (op == Op::Eq) return bool_value(values_equal(a, b));
  if (op == Op::Ne) return bool_value(!values_equal(a, b));
  type_error("unsupported operand types for " + std::string(graph::op_name(op)) + ": " +
             type_name(a) + " and " + type_name(b));
}

Value Session::negate(const Value& a) {
  check_defined(a);
  if (a.is<Staged>()) return emit1(Op::Neg, {a});
  return kernels::neg(tensor_arg(a, "unary -"));
}

Value Session::not_(const Value& a) {
  check_defined(a);
  if (const auto* s = staged_tensor(a)) {
    if (s->type.dtype != DType::Bool && s->type.dtype != DType::Unknown) {
      type_error("not expects a bool, got " + type_name(a));
    }
    return emit1(Op::Not, {a});
  }
  const auto* t = a.get<Tensor>();
  if (!t || t->dtype != DType::Bool) type_error("not expects a bool, got " + type_name(a));
  return kernels::logical_not(*t);
}

bool Session::truth(const Value& v, const char* what) {
  check_defined(v);
  if (v.is_staged()) {
    throw Error(ErrorKind::StagedCoercion,
                std::string(what) + " depends on a staged value and cannot be decided while "
                                    "tracing unconverted code");
  }
  if (!is_bool_scalar(v)) type_error(std::string(what) + " must be a bool, got " + type_name(v));
  return v.as<Tensor>().i[0] != 0;
}

// ------------------------------------------------------------------- lists

Value Session::list_new(std::vector<Value> items, std::optional<DType> elem) {
  if (elem) {
    for (const auto& x : items) {
      const auto* t = x.get<Tensor>();
      if (t && t->dtype != *elem) {
        type_error("list of " + std::string(graph::dtype_name(*elem)) + " cannot hold " +
                   type_name(x));
      }
    }
  }
  return make_list(std::move(items), elem);
}

Value Session::list_append(const Value& l, const Value& x) {
  check_defined(l);
  check_defined(x);
  if (const auto* cl = l.get<List>()) {
    const ListValue& src = **cl;
    if (src.elem) {
      const auto* t = x.get<Tensor>();
      if (t && t->dtype != *src.elem) {
        type_error("list of " + std::string(graph::dtype_name(*src.elem)) + " cannot hold " +
                   type_name(x));
      }
    }
    std::vector<Value> items = src.items;
    items.push_back(x);
    return make_list(std::move(items), src.elem);
  }
  if (staged_list(l)) return emit1(Op::ListAppend, {l, x});
  type_error("append expects a list, got " + type_name(l));
}

Value Session::list_pop(const Value& l) {
  check_defined(l);
  if (const auto* cl = l.get<List>()) {
    const ListValue& src = **cl;
    if (src.items.empty()) throw Error(ErrorKind::EmptyPop, "pop from empty list");
    std::vector<Value> items(src.items.begin(), src.items.end() - 1);
    Value last = src.items.back();
    return make_tuple({make_list(std::move(items), src.elem), std::move(last)});
  }
  if (staged_list(l)) {
    Node n;
    n.op = Op::ListPop;
    n.inputs = {to_node(l, "pop")};
    auto refs = emit(std::move(n));
    return make_tuple({staged_of(refs[0]), staged_of(refs[1])});
  }
  type_error("pop expects a list, got " + type_name(l));
}

Value Session::list_stack(const Value& l) {
  check_defined(l);
  if (const auto* cl = l.get<List>()) {
    const ListValue& src = **cl;
    bool staged = false;
    std::vector<Tensor> items;
    std::vector<TypeSig> types;
    for (const auto& x : src.items) {
      check_defined(x);
      if (x.is<Staged>()) {
        staged = true;
        continue;
      }
      const auto* t = x.get<Tensor>();
      if (!t) type_error("cannot stack a list holding " + type_name(x));
      items.push_back(*t);
    }
    if (staged) return emit1(Op::ListStack, {l});
    TypeSig elem = static_type(l, "stack");
    elem.list = false;
    if (items.empty() && !elem.shape) elem.shape = graph::Shape{};
    return kernels::stack(items, elem);
  }
  if (staged_list(l)) return emit1(Op::ListStack, {l});
  type_error("stack expects a list, got " + type_name(l));
}

// -------------------------------------------------------------- subscripts

Value Session::getitem(const Value& x, const Value& i) {
  check_defined(x);
  check_defined(i);
  if (const auto* si = i.get<Staged>()) {
    if (si->type.list || (si->type.dtype != DType::I64 && si->type.dtype != DType::Unknown)) {
      type_error("indices must be ints, got " + type_name(i));
    }
  } else if (!is_int_scalar(i)) {
    type_error("indices must be ints, got " + type_name(i));
  }
  if (const auto* s = x.get<Staged>()) return emit1(s->type.list ? Op::ListGet : Op::Index, {x, i});
  if (i.is<Staged>()) {
    if (x.is<Tensor>()) return emit1(Op::Index, {x, i});
    if (x.is<List>() && stageable(x)) return emit1(Op::ListGet, {x, i});
    type_error("a " + type_name(x) + " cannot be indexed by a staged value");
  }
  const std::int64_t k = i.as<Tensor>().i[0];
  if (const auto* l = x.get<List>()) {
    const auto& items = (*l)->items;
    return items[static_cast<std::size_t>(
        kernels::normalize_index(k, static_cast<std::int64_t>(items.size())))];
  }
  if (const auto* t = x.get<Tuple>()) {
    return (**t)[static_cast<std::size_t>(
        kernels::normalize_index(k, static_cast<std::int64_t>((*t)->size())))];
  }
  if (const auto* t = x.get<Tensor>()) return kernels::index(*t, k);
  if (const auto* r = x.get<Range>()) {
    const std::int64_t j = kernels::normalize_index(k, r->size());
    return int_value(r->start + j * r->step);
  }
  type_error("'" + type_name(x) + "' object is not subscriptable");
}

Value Session::setitem(const Value& x, const Value& i, const Value& v) {
  check_defined(x);
  check_defined(i);
  check_defined(v);
  if (!i.is<Staged>() && !is_int_scalar(i)) type_error("indices must be ints, got " + type_name(i));
  if (const auto* s = x.get<Staged>()) return emit1(s->type.list ? Op::ListSet : Op::SetItem, {x, i, v});
  if (const auto* l = x.get<List>()) {
    if (i.is<Staged>()) {
      if (!stageable(x)) type_error("a list of " + type_name(v) + " cannot be indexed by a staged value");
      return emit1(Op::ListSet, {x, i, v});
    }
    std::vector<Value> items = (*l)->items;
    const auto k = kernels::normalize_index(i.as<Tensor>().i[0], static_cast<std::int64_t>(items.size()));
    items[static_cast<std::size_t>(k)] = v;
    return make_list(std::move(items), (*l)->elem);
  }
  if (const auto* t = x.get<Tensor>()) {
    if (i.is<Staged>() || v.is<Staged>()) return emit1(Op::SetItem, {x, i, v});
    return kernels::set_item(*t, i.as<Tensor>().i[0], tensor_arg(v, "setitem"));
  }
  type_error("'" + type_name(x) + "' object does not support item assignment");
}

Value Session::staged_tree_field(const StagedTree& t, const std::string& name) {
  const auto& p = *t.parts;
  if (name == "is_empty") return binary(Op::Lt, p[3], int_value(0));
  if (name == "value") return getitem(p[0], p[3]);
  if (name == "left" || name == "right") {
    Value child = getitem(p[name == "left" ? 1 : 2], p[3]);
    return StagedTree{std::make_shared<const std::vector<Value>>(
        std::vector<Value>{p[0], p[1], p[2], child})};
  }
  type_error("tree has no attribute '" + name + "'");
}

Value Session::attribute(const Value& x, const std::string& name) {
  check_defined(x);
  if (const auto* ns = x.get<Namespace>()) return Builtin{ns->name + "." + name};
  if (const auto* t = x.get<Tree>()) {
    if (name == "is_empty") return bool_value(!t->root);
    if (name == "value" || name == "left" || name == "right") {
      if (!t->root) throw Error(ErrorKind::IndexOutOfRange, "empty tree has no " + name);
      if (name == "value") return t->root->value;
      return name == "left" ? Value(t->root->left) : Value(t->root->right);
    }
    type_error("tree has no attribute '" + name + "'");
  }
  if (const auto* t = x.get<StagedTree>()) return staged_tree_field(*t, name);
  type_error("'" + type_name(x) + "' object has no attribute '" + name + "'");
}

Value Session::len(const Value& x) {
  check_defined(x);
  if (const auto* l = x.get<List>()) return int_value(static_cast<std::int64_t>((*l)->items.size()));
  if (const auto* t = x.get<Tuple>()) return int_value(static_cast<std::int64_t>((*t)->size()));
  if (const auto* r = x.get<Range>()) return int_value(r->size());
  if (const auto* s = x.get<std::string>()) return int_value(static_cast<std::int64_t>(s->size()));
  if (const auto* t = x.get<Tensor>()) {
    if (t->is_scalar()) type_error("len() of a scalar");
    return int_value(t->shape[0]);
  }
  if (const auto* s = x.get<Staged>()) {
    if (s->type.list) return emit1(Op::ListLen, {x});
    if (s->type.shape && s->type.shape->empty()) type_error("len() of a scalar");
    return getitem(emit1(Op::Shape, {x}), int_value(0));
  }
  type_error("object of type '" + type_name(x) + "' has no len()");
}

void Session::print(const std::vector<Value>& args) {
  for (const auto& a : args) check_defined(a);
  if (tracing()) {
    Node n;
    n.op = Op::Print;
    for (const auto& a : args) {
      bool staged = a.is_staged();
      if (const auto* l = a.get<List>()) {
        for (const auto& x : (*l)->items) staged = staged || x.is_staged();
      }
      if (staged) {
        n.ints.push_back(static_cast<std::int64_t>(n.inputs.size()));
        n.strings.emplace_back();
        n.inputs.push_back(to_node(a, "a print argument"));
      } else {
        n.ints.push_back(-1);
        n.strings.push_back(format_value(a));
      }
    }
    emit(std::move(n));
    return;
  }
  std::string line;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (k) line += " ";
    line += format_value(args[k]);
  }
  log_.push_back(std::move(line));
}

Value Session::cast(DType to, const Value& v) {
  check_defined(v);
  if (const auto* s = v.get<Staged>()) {
    if (s->type.dtype == to && !s->type.list) return v;
    type_error("cannot convert a staged " + s->type.str() + " to " +
               std::string(graph::dtype_name(to)));
  }
  if (const auto* t = v.get<Tensor>()) {
    if (to == DType::Bool && t->dtype != DType::Bool) {
      type_error("bool() expects a bool; truthiness of numbers is not supported");
    }
    if (t->dtype == DType::Bool && to != DType::Bool) {
      type_error("cannot convert a bool to a number");
    }
    if (to == DType::I64 && t->dtype == DType::F64) {
      for (double x : t->f) {
        if (!std::isfinite(x)) type_error("cannot convert a non-finite float to int");
      }
    }
    return t->cast(to);
  }
  type_error("cannot convert " + type_name(v) + " to " + std::string(graph::dtype_name(to)));
}

// ---------------------------------------------------------------- builtins

std::optional<std::vector<Value>> Session::concrete_items(const Value& v) {
  check_defined(v);
  if (const auto* r = v.get<Range>()) {
    std::vector<Value> out;
    const std::int64_t n = r->size();
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) out.push_back(int_value(r->start + k * r->step));
    return out;
  }
  if (const auto* l = v.get<List>()) return (*l)->items;
  if (const auto* t = v.get<Tuple>()) return **t;
  if (const auto* t = v.get<Tensor>()) {
    if (t->is_scalar()) throw Error(ErrorKind::NotIterable, "'" + type_name(v) + "' object is not iterable");
    std::vector<Value> out;
    for (std::int64_t k = 0; k < t->shape[0]; ++k) out.push_back(kernels::index(*t, k));
    return out;
  }
  if (const auto* s = v.get<Staged>()) {
    if (!s->type.list && s->type.shape && s->type.shape->empty()) {
      throw Error(ErrorKind::NotIterable, "a staged scalar is not iterable");
    }
    return std::nullopt;
  }
  throw Error(ErrorKind::NotIterable, "'" + type_name(v) + "' object is not iterable");
}

Value Session::m_intrinsic(const std::string& fn, std::vector<Value>& args) {
  const std::string full = "m." + fn;
  for (const auto& a : args) check_defined(a);
  auto unary = [&](Op op, Tensor (*k)(const Tensor&)) -> Value {
    expect_args(full, args, 1, 1);
    if (args[0].is<Staged>()) return emit1(op, args);
    return k(tensor_arg(args[0], full));
  };
  if (fn == "tanh") return unary(Op::Tanh, kernels::tanh);
  if (fn == "sigmoid") return unary(Op::Sigmoid, kernels::sigmoid);
  if (fn == "reduce_sum") return unary(Op::ReduceSum, kernels::reduce_sum);
  if (fn == "reduce_max") return unary(Op::ReduceMax, kernels::reduce_max);
  if (fn == "shape") return unary(Op::Shape, kernels::shape_of);
  if (fn == "matmul") {
    expect_args(full, args, 2, 2);
    if (any_staged(args)) return emit1(Op::MatMul, args);
    return kernels::matmul(tensor_arg(args[0], full), tensor_arg(args[1], full));
  }
  if (fn == "where") {
    expect_args(full, args, 3, 3);
    if (any_staged(args)) return emit1(Op::Where, args);
    return kernels::where(tensor_arg(args[0], full), tensor_arg(args[1], full),
                          tensor_arg(args[2], full));
  }
  if (fn == "transpose") {
    expect_args(full, args, 1, 2);
    std::vector<std::int64_t> perm;
    if (args.size() == 2) {
      auto items = concrete_items(args[1]);
      if (!items) type_error("m.transpose expects a concrete permutation");
      for (const auto& p : *items) perm.push_back(to_index(p, "permutation entry"));
    }
    if (args[0].is<Staged>()) {
      Node n;
      n.op = Op::Transpose;
      n.ints = perm;
      n.inputs = {to_node(args[0], full)};
      return staged_of(emit(std::move(n))[0]);
    }
    return kernels::transpose(tensor_arg(args[0], full), perm);
  }
  if (fn == "constant") {
    expect_args(full, args, 1, 2);
    Value v = args[0];
    if (v.is<Staged>()) {
      return args.size() == 2 ? cast(dtype_arg(args[1], full), v) : v;
    }
    Tensor t = constant_of(v);
    if (args.size() == 2) return cast(dtype_arg(args[1], full), t);
    return t;
  }
  if (fn == "zeros") {
    expect_args(full, args, 1, 2);
    const DType d = args.size() == 2 ? dtype_arg(args[1], full) : DType::F64;
    Value shape = args[0];
    if (shape.is<Tuple>() || shape.is<List>()) {
      auto items = *concrete_items(shape);
      bool staged = false;
      graph::Shape dims;
      for (const auto& x : items) {
        if (x.is<Staged>()) {
          staged = true;
        } else {
          dims.push_back(to_index(x, "m.zeros dimension"));
        }
      }
      if (!staged) return Tensor::zeros(d, dims);
      shape = list_stack(make_list(items, DType::I64));
    } else if (is_int_scalar(shape)) {
      return Tensor::zeros(d, {shape.as<Tensor>().i[0]});
    }
    if (shape.is<Tensor>()) return kernels::zeros(d, shape.as<Tensor>());
    Node n;
    n.op = Op::Zeros;
    n.dtype = d;
    n.inputs = {to_node(shape, full)};
    return staged_of(emit(std::move(n))[0]);
  }
  if (fn == "range") {
    expect_args(full, args, 1, 3);
    Value r = call_builtin("range", args);
    if (const auto* cr = r.get<Range>()) return kernels::range(cr->start, cr->stop, cr->step);
    return r;
  }
  throw Error(ErrorKind::UnknownCallee, "unknown intrinsic '" + full + "'");
}

Value Session::call_builtin(const std::string& name, std::vector<Value> args) {
  if (name == "print") {
    print(args);
    return None{};
  }
  if (name == "len") {
    expect_args(name, args, 1, 1);
    return len(args[0]);
  }
  if (name == "range") {
    expect_args(name, args, 1, 3);
    for (const auto& a : args) check_defined(a);
    if (any_staged(args)) {
      std::vector<Value> in = args.size() == 1 ? std::vector<Value>{int_value(0), args[0]} : args;
      if (in.size() == 2) in.push_back(int_value(1));
      for (const auto& a : in) {
        if (!a.is<Staged>()) to_index(a, "range() argument");
      }
      return emit1(Op::Range, in);
    }
    Range r;
    if (args.size() == 1) {
      r.stop = to_index(args[0], "range() argument");
    } else {
      r.start = to_index(args[0], "range() argument");
      r.stop = to_index(args[1], "range() argument");
      if (args.size() == 3) r.step = to_index(args[2], "range() argument");
    }
    if (r.step == 0) type_error("range() step must not be zero");
    return r;
  }
  if (name.rfind("m.", 0) == 0) return m_intrinsic(name.substr(2), args);
  if (name.rfind("ag__.", 0) == 0) return ag_intrinsic(name.substr(5), args);
  if (name == "ag.set_loop_options" || name == "ag.set_element_type") return None{};
  if (name == "ag.stack") {
    expect_args(name, args, 1, 1);
    return list_stack(args[0]);
  }
  throw Error(ErrorKind::UnknownCallee, "unknown function '" + name + "'");
}

}  // namespace stagekit::runtime
