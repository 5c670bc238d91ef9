#pragma once

#include <string>
#include <vector>

#include "stagekit/graph/ir.hpp"

namespace stagekit::graph {

// Extends `g` with a reverse sweep computing d(output)/d(p) for every main
// parameter named in `wrt`. The result's main outputs are [output, grads...].
// Cond differentiates through a gradient Cond on the same predicate; FuncCall
// through a `<name>_grad` function that recomputes the forward body and then
// reverses it (recursion allowed). Throws NonDifferentiable,
// WhileNotDifferentiable, or UsageError for bad arguments.
Graph gradient(const Graph& g, ValueRef output, const std::vector<std::string>& wrt);

}  // namespace stagekit::graph
