#pragma once

#include <string>
#include <vector>

#include "stagekit/graph/ir.hpp"

namespace stagekit::graph {

// Static output types of a node from its input types. Cond, While, FuncCall
// and ListNew keep the out_types the caller supplied. Throws DtypeMismatch or
// ShapeMismatch (trace-time shape errors for static dims).
std::vector<TypeSig> infer_types(const Node& node, const std::vector<TypeSig>& inputs);

// Appends nodes to a subgraph, inferring types as it goes.
class Builder {
 public:
  explicit Builder(Subgraph& g) : g_(&g) {}

  Subgraph& graph() { return *g_; }

  // Span and scope stamped on every node added from now on.
  void set_origin(const syntax::SourceSpan& span, std::string scope);

  ValueRef param(std::string name, TypeSig type);
  ValueRef constant(Tensor value);
  ValueRef op(Op op, std::vector<ValueRef> inputs);
  // Generic append; returns one ref per output.
  std::vector<ValueRef> add(Node node);

  const TypeSig& type_of(ValueRef r) const { return g_->type_of(r); }

 private:
  Subgraph* g_;
  syntax::SourceSpan origin_;
  std::string scope_;
};

}  // namespace stagekit::graph
