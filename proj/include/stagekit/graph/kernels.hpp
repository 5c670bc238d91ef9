#pragma once

#include <vector>

#include "stagekit/graph/ir.hpp"
#include "stagekit/graph/tensor.hpp"

// Dense kernels shared by the native interpreter and the graph executor, so
// both produce bit-identical results for the same operation order.
namespace stagekit::graph::kernels {

// Trailing-dimension alignment with size-1 stretch. Dynamic dims (-1) are
// accepted for static inference. Throws ShapeMismatch.
Shape broadcast_shapes(const Shape& a, const Shape& b);

// Result dtype of a binary op, or DtypeMismatch.
DType binary_dtype(Op op, DType a, DType b);

Tensor binary(Op op, const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& x);
Tensor logical_not(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x, std::vector<std::int64_t> perm);
Tensor reduce_sum(const Tensor& x);
Tensor reduce_max(const Tensor& x);
// Rank-1 cond with as many entries as a has rows selects whole rows;
// otherwise the three operands broadcast.
Tensor where(const Tensor& cond, const Tensor& a, const Tensor& b);
Tensor shape_of(const Tensor& x);
Tensor range(std::int64_t start, std::int64_t limit, std::int64_t delta);
Tensor index(const Tensor& x, std::int64_t i);
Tensor set_item(const Tensor& x, std::int64_t i, const Tensor& v);
Tensor zeros(DType d, const Tensor& shape);
Tensor sum_to(const Tensor& x, const Shape& shape);
Tensor stack(const std::vector<Tensor>& items, const TypeSig& elem);
std::vector<Tensor> unstack(const Tensor& x);

// Normalizes a possibly negative index against `size`; IndexOutOfRange.
std::int64_t normalize_index(std::int64_t i, std::int64_t size);

}  // namespace stagekit::graph::kernels
