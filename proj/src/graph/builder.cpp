#include "stagekit/graph/builder.hpp"

#include "stagekit/error.hpp"
#include "stagekit/graph/kernels.hpp"

namespace stagekit::graph {

namespace {

[[noreturn]] void bad(const Node& n, const std::string& why) {
  throw Error(ErrorKind::DtypeMismatch, std::string(op_name(n.op)) + ": " + why);
}

void expect_arity(const Node& n, const std::vector<TypeSig>& in, std::size_t k) {
  if (in.size() != k) {
    throw Error(ErrorKind::ValidationError, std::string(op_name(n.op)) + " expects " +
                                                std::to_string(k) + " inputs, got " +
                                                std::to_string(in.size()));
  }
}

void expect_tensor(const Node& n, const TypeSig& t) {
  if (t.list) bad(n, "expected a tensor, got a list");
}

void expect_list(const Node& n, const TypeSig& t) {
  if (!t.list) bad(n, "expected a list, got " + t.str());
}

void expect_index(const Node& n, const TypeSig& t) {
  if (t.list || (t.dtype != DType::I64 && t.dtype != DType::Unknown)) {
    bad(n, "index must be an i64 scalar, got " + t.str());
  }
  if (t.shape && !t.shape->empty()) bad(n, "index must be a scalar, got " + t.str());
}

std::optional<Shape> broadcast(const std::optional<Shape>& a, const std::optional<Shape>& b) {
  if (!a || !b) return std::nullopt;
  return kernels::broadcast_shapes(*a, *b);
}

TypeSig element_of(const TypeSig& list) { return {list.dtype, list.shape, false}; }

}  // namespace

std::vector<TypeSig> infer_types(const Node& n, const std::vector<TypeSig>& in) {
  // Elementwise ops are strict in the bottom type, which keeps the first
  // round of recursive signature inference from inventing shapes.
  if (is_binary(n.op) || is_comparison(n.op) || n.op == Op::Neg || n.op == Op::Not || n.op == Op::Tanh ||
      n.op == Op::Sigmoid) {
    for (const auto& t : in) {
      if (t.is_bottom() && !t.list) return {TypeSig::bottom()};
    }
  }
  switch (n.op) {
    case Op::Const:
      return {TypeSig::tensor(n.value.dtype, n.value.shape)};
    case Op::Param:
    case Op::Cond:
    case Op::While:
    case Op::FuncCall:
    case Op::ListNew:
      return n.out_types;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Mod:
    case Op::Lt:
    case Op::Gt:
    case Op::Le:
    case Op::Ge:
    case Op::Eq:
    case Op::Ne: {
      expect_arity(n, in, 2);
      expect_tensor(n, in[0]);
      expect_tensor(n, in[1]);
      DType d = kernels::binary_dtype(n.op, in[0].dtype, in[1].dtype);
      return {{d, broadcast(in[0].shape, in[1].shape), false}};
    }
    case Op::Neg:
      expect_arity(n, in, 1);
      expect_tensor(n, in[0]);
      if (in[0].dtype == DType::Bool) bad(n, "cannot negate a bool");
      return {in[0]};
    case Op::Not:
      expect_arity(n, in, 1);
      expect_tensor(n, in[0]);
      if (in[0].dtype != DType::Bool && in[0].dtype != DType::Unknown) bad(n, "expected bool");
      return {{DType::Bool, in[0].shape, false}};
    case Op::Tanh:
    case Op::Sigmoid:
      expect_arity(n, in, 1);
      expect_tensor(n, in[0]);
      if (in[0].dtype == DType::Bool) bad(n, "expected a number");
      return {{DType::F64, in[0].shape, false}};
    case Op::MatMul: {
      expect_arity(n, in, 2);
      DType d = kernels::binary_dtype(Op::Mul, in[0].dtype, in[1].dtype);
      const auto& a = in[0].shape;
      const auto& b = in[1].shape;
      if (a && a->size() != 2) throw Error(ErrorKind::ShapeMismatch, "matmul expects rank 2");
      if (b && b->size() != 2) throw Error(ErrorKind::ShapeMismatch, "matmul expects rank 2");
      if (a && b && (*a)[1] >= 0 && (*b)[0] >= 0 && (*a)[1] != (*b)[0]) {
        throw Error(ErrorKind::ShapeMismatch, "matmul inner dims differ: " + shape_str(*a) +
                                                  " x " + shape_str(*b));
      }
      Shape s{a ? (*a)[0] : -1, b ? (*b)[1] : -1};
      return {TypeSig::tensor(d, s)};
    }
    case Op::Transpose: {
      expect_arity(n, in, 1);
      expect_tensor(n, in[0]);
      if (!in[0].shape) return {in[0]};
      const Shape& s = *in[0].shape;
      std::vector<std::int64_t> perm = n.ints;
      if (perm.empty()) {
        for (std::size_t k = s.size(); k-- > 0;) perm.push_back(static_cast<std::int64_t>(k));
      }
      if (perm.size() != s.size()) throw Error(ErrorKind::ShapeMismatch, "transpose rank mismatch");
      Shape out;
      for (auto p : perm) {
        if (p < 0 || p >= static_cast<std::int64_t>(s.size())) {
          throw Error(ErrorKind::ShapeMismatch, "invalid transpose permutation");
        }
        out.push_back(s[static_cast<std::size_t>(p)]);
      }
      return {TypeSig::tensor(in[0].dtype, out)};
    }
    case Op::ReduceMax:
    case Op::ReduceSum:
      expect_arity(n, in, 1);
      expect_tensor(n, in[0]);
      if (in[0].dtype == DType::Bool) bad(n, "expected a number");
      return {TypeSig::scalar(in[0].dtype)};
    case Op::Where: {
      expect_arity(n, in, 3);
      if (in[0].dtype != DType::Bool && in[0].dtype != DType::Unknown) bad(n, "cond must be bool");
      DType d;
      if (in[1].dtype == DType::Bool && in[2].dtype == DType::Bool) {
        d = DType::Bool;
      } else {
        d = kernels::binary_dtype(Op::Add, in[1].dtype, in[2].dtype);
      }
      auto ab = broadcast(in[1].shape, in[2].shape);
      if (!ab || !in[0].shape) return {{d, std::nullopt, false}};
      Shape c = *in[0].shape;
      if (c.size() == 1 && ab->size() > 1 && (c[0] == (*ab)[0] || c[0] < 0 || (*ab)[0] < 0)) {
        Shape rows(ab->size(), 1);
        rows[0] = c[0];
        c = rows;
      }
      return {TypeSig::tensor(d, kernels::broadcast_shapes(c, *ab))};
    }
    case Op::Shape: {
      expect_arity(n, in, 1);
      std::int64_t rank = in[0].shape ? static_cast<std::int64_t>(in[0].shape->size()) : -1;
      return {TypeSig::tensor(DType::I64, {rank})};
    }
    case Op::Range:
      expect_arity(n, in, 3);
      for (const auto& t : in) expect_index(n, t);
      return {TypeSig::tensor(DType::I64, {-1})};
    case Op::Index: {
      expect_arity(n, in, 2);
      expect_tensor(n, in[0]);
      expect_index(n, in[1]);
      if (!in[0].shape) return {{in[0].dtype, std::nullopt, false}};
      if (in[0].shape->empty()) bad(n, "cannot index a scalar");
      return {TypeSig::tensor(in[0].dtype, Shape(in[0].shape->begin() + 1, in[0].shape->end()))};
    }
    case Op::SetItem:
      expect_arity(n, in, 3);
      expect_tensor(n, in[0]);
      expect_index(n, in[1]);
      if (in[0].dtype != in[2].dtype &&
          !(in[0].dtype == DType::F64 && in[2].dtype == DType::I64) &&
          in[2].dtype != DType::Unknown && in[0].dtype != DType::Unknown) {
        bad(n, "cannot store " + in[2].str() + " into " + in[0].str());
      }
      return {in[0]};
    case Op::ListAppend: {
      expect_arity(n, in, 2);
      expect_list(n, in[0]);
      auto j = join(element_of(in[0]), in[1]);
      if (!j || j->list) bad(n, "element " + in[1].str() + " does not fit " + in[0].str());
      TypeSig out = *j;
      out.list = true;
      return {out};
    }
    case Op::ListPop:
      expect_arity(n, in, 1);
      expect_list(n, in[0]);
      return {in[0], element_of(in[0])};
    case Op::ListGet:
      expect_arity(n, in, 2);
      expect_list(n, in[0]);
      expect_index(n, in[1]);
      return {element_of(in[0])};
    case Op::ListSet:
      expect_arity(n, in, 3);
      expect_list(n, in[0]);
      expect_index(n, in[1]);
      if (!join(element_of(in[0]), in[2])) bad(n, "element does not fit list");
      return {in[0]};
    case Op::ListStack: {
      expect_arity(n, in, 1);
      expect_list(n, in[0]);
      if (!in[0].shape) return {{in[0].dtype, std::nullopt, false}};
      Shape s{-1};
      s.insert(s.end(), in[0].shape->begin(), in[0].shape->end());
      return {TypeSig::tensor(in[0].dtype, s)};
    }
    case Op::ListLen:
      expect_arity(n, in, 1);
      expect_list(n, in[0]);
      return {TypeSig::scalar(DType::I64)};
    case Op::ListUnstack: {
      expect_arity(n, in, 1);
      expect_tensor(n, in[0]);
      TypeSig out{in[0].dtype, std::nullopt, true};
      if (in[0].shape) {
        if (in[0].shape->empty()) bad(n, "cannot unstack a scalar");
        out.shape = Shape(in[0].shape->begin() + 1, in[0].shape->end());
      }
      return {out};
    }
    case Op::Zeros: {
      expect_arity(n, in, 1);
      if (in[0].dtype != DType::I64) bad(n, "shape must be i64");
      std::optional<Shape> s;
      if (in[0].shape && in[0].shape->size() == 1 && (*in[0].shape)[0] >= 0) {
        s = Shape(static_cast<std::size_t>((*in[0].shape)[0]), -1);
      }
      return {{n.dtype, s, false}};
    }
    case Op::ZerosLike:
      expect_arity(n, in, 1);
      return {in[0]};
    case Op::SumTo:
      expect_arity(n, in, 2);
      return {{in[0].dtype, in[1].shape, false}};
    case Op::Print:
      return {};
    case Op::Assert:
      expect_arity(n, in, 1);
      if (in[0].dtype != DType::Bool && in[0].dtype != DType::Unknown) {
        bad(n, "assert condition must be bool");
      }
      return {};
  }
  throw Error(ErrorKind::InternalError, "unhandled op in type inference");
}

void Builder::set_origin(const syntax::SourceSpan& span, std::string scope) {
  origin_ = span;
  scope_ = std::move(scope);
}

ValueRef Builder::param(std::string name, TypeSig type) {
  Node n;
  n.op = Op::Param;
  n.name = std::move(name);
  n.index = static_cast<int>(g_->params.size());
  n.out_types = {std::move(type)};
  auto refs = add(std::move(n));
  g_->params.push_back(refs[0].node);
  return refs[0];
}

ValueRef Builder::constant(Tensor value) {
  Node n;
  n.op = Op::Const;
  n.value = std::move(value);
  return add(std::move(n))[0];
}

ValueRef Builder::op(Op op, std::vector<ValueRef> inputs) {
  Node n;
  n.op = op;
  n.inputs = std::move(inputs);
  auto refs = add(std::move(n));
  return refs.at(0);
}

std::vector<ValueRef> Builder::add(Node node) {
  std::vector<TypeSig> in;
  in.reserve(node.inputs.size());
  for (const auto& r : node.inputs) in.push_back(g_->type_of(r));
  node.out_types = infer_types(node, in);
  if (!node.origin.valid()) node.origin = origin_;
  if (node.scope.empty()) node.scope = scope_;
  const int id = static_cast<int>(g_->nodes.size());
  const std::size_t outs = node.out_types.size();
  g_->nodes.push_back(std::move(node));
  std::vector<ValueRef> refs;
  for (std::size_t k = 0; k < outs; ++k) refs.push_back({id, static_cast<int>(k)});
  return refs;
}

}  // namespace stagekit::graph
