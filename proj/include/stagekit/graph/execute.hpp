#pragma once

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "stagekit/graph/ir.hpp"

namespace stagekit::graph {

struct TensorList {
  std::vector<Tensor> items;
  TypeSig elem;
};

// Execution-time value: a tensor or an immutable list of tensors.
using RtValue = std::variant<Tensor, std::shared_ptr<const TensorList>>;

std::string format_rt(const RtValue& v);

struct ExecResult {
  std::vector<RtValue> outputs;
  std::vector<std::string> log;  // Print lines, in execution order
};

// Throws ValidationError with one line per violation.
void validate(const Graph& g);

// Feeds are keyed by main-graph parameter name. Kernel errors keep their kind
// and gain the failing node's origin span; structural problems (missing or
// mistyped feeds) raise RuntimeGraphError.
ExecResult execute(const Graph& g, const std::map<std::string, RtValue>& feeds);

}  // namespace stagekit::graph
