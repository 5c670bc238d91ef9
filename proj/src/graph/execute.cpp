#include "stagekit/graph/execute.hpp"

#include <sstream>

#include "stagekit/error.hpp"
#include "stagekit/graph/builder.hpp"
#include "stagekit/graph/kernels.hpp"

namespace stagekit::graph {

std::string format_rt(const RtValue& v) {
  if (const auto* t = std::get_if<Tensor>(&v)) return format_tensor(*t);
  const auto& list = *std::get<std::shared_ptr<const TensorList>>(v);
  std::string out = "[";
  for (std::size_t k = 0; k < list.items.size(); ++k) {
    if (k) out += ", ";
    out += format_tensor(list.items[k]);
  }
  return out + "]";
}

namespace {

// ---------------------------------------------------------------- validate

class Validator {
 public:
  explicit Validator(const Graph& g) : g_(g) {}

  void run() {
    check(g_.main, "main");
    for (const auto& [name, fn] : g_.functions) check(*fn.body, "fn " + name);
    if (!problems_.empty()) {
      std::string msg;
      for (const auto& p : problems_) msg += "\n  " + p;
      throw Error(ErrorKind::ValidationError, "invalid graph:" + msg);
    }
  }

 private:
  void problem(const std::string& where, std::size_t k, const std::string& what) {
    problems_.push_back(where + " node " + std::to_string(k) + ": " + what);
  }

  bool ref_ok(const Subgraph& sg, ValueRef r, std::size_t before) {
    if (r.node < 0 || static_cast<std::size_t>(r.node) >= before) return false;
    const auto& src = sg.nodes[static_cast<std::size_t>(r.node)];
    return r.index >= 0 && static_cast<std::size_t>(r.index) < src.out_types.size();
  }

  void check_signature(const std::string& where, std::size_t k, const Subgraph& sub,
                       std::size_t params, const std::vector<TypeSig>& outs) {
    if (sub.params.size() != params) {
      problem(where, k, "subgraph expects " + std::to_string(sub.params.size()) +
                            " params, node supplies " + std::to_string(params));
    }
    if (sub.outputs.size() != outs.size()) {
      problem(where, k, "subgraph returns " + std::to_string(sub.outputs.size()) +
                            " values, expected " + std::to_string(outs.size()));
      return;
    }
    for (std::size_t j = 0; j < outs.size(); ++j) {
      if (!join(sub.type_of(sub.outputs[j]), outs[j])) {
        problem(where, k, "subgraph output " + std::to_string(j) + " has type " +
                              sub.type_of(sub.outputs[j]).str() + ", expected " + outs[j].str());
      }
    }
  }

  void check(const Subgraph& sg, const std::string& where) {
    for (std::size_t p = 0; p < sg.params.size(); ++p) {
      auto idx = static_cast<std::size_t>(sg.params[p]);
      if (idx >= sg.nodes.size() || sg.nodes[idx].op != Op::Param) {
        problem(where, idx, "param list entry is not a Param node");
      }
    }
    for (std::size_t k = 0; k < sg.nodes.size(); ++k) {
      const Node& n = sg.nodes[k];
      bool inputs_ok = true;
      for (const auto& r : n.inputs) {
        if (!ref_ok(sg, r, k)) {
          problem(where, k, "input refers to a later or missing value");
          inputs_ok = false;
        }
      }
      if (!inputs_ok) continue;
      std::vector<TypeSig> in;
      for (const auto& r : n.inputs) in.push_back(sg.type_of(r));
      try {
        auto inferred = infer_types(n, in);
        if (inferred.size() != n.out_types.size()) {
          problem(where, k, std::string(op_name(n.op)) + " has wrong number of outputs");
        } else {
          for (std::size_t j = 0; j < inferred.size(); ++j) {
            if (!join(inferred[j], n.out_types[j])) {
              problem(where, k, std::string(op_name(n.op)) + " output type " +
                                    n.out_types[j].str() + " disagrees with " +
                                    inferred[j].str());
            }
          }
        }
      } catch (const Error& e) {
        problem(where, k, e.message());
      }
      switch (n.op) {
        case Op::Cond:
          if (n.subgraphs.size() != 2 || n.inputs.empty()) {
            problem(where, k, "cond needs a predicate and two branches");
            break;
          }
          if (in[0].dtype != DType::Bool) problem(where, k, "cond predicate is not bool");
          for (const auto& sub : n.subgraphs) {
            check_signature(where, k, *sub, n.inputs.size() - 1, n.out_types);
            check(*sub, where + "/cond");
          }
          break;
        case Op::While: {
          if (n.subgraphs.size() != 2 || n.ints.empty()) {
            problem(where, k, "while needs test and body subgraphs");
            break;
          }
          auto nv = static_cast<std::size_t>(n.ints[0]);
          if (nv > n.inputs.size() || n.out_types.size() != nv) {
            problem(where, k, "while loop-variable count is inconsistent");
            break;
          }
          std::vector<TypeSig> vars(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(nv));
          check_signature(where, k, *n.subgraphs[0], n.inputs.size(),
                          {TypeSig::scalar(DType::Bool)});
          check_signature(where, k, *n.subgraphs[1], n.inputs.size(), vars);
          check(*n.subgraphs[0], where + "/test");
          check(*n.subgraphs[1], where + "/body");
          break;
        }
        case Op::FuncCall: {
          auto it = g_.functions.find(n.name);
          if (it == g_.functions.end()) {
            problem(where, k, "call to undefined function " + n.name);
            break;
          }
          check_signature(where, k, *it->second.body, n.inputs.size(), n.out_types);
          break;
        }
        default:
          break;
      }
    }
    for (const auto& r : sg.outputs) {
      if (!ref_ok(sg, r, sg.nodes.size())) problem(where, sg.nodes.size(), "bad output ref");
    }
  }

  const Graph& g_;
  std::vector<std::string> problems_;
};

// ----------------------------------------------------------------- execute

const Tensor& tensor(const RtValue& v) {
  if (const auto* t = std::get_if<Tensor>(&v)) return *t;
  throw Error(ErrorKind::RuntimeGraphError, "expected a tensor, got a list");
}

const TensorList& list(const RtValue& v) {
  if (const auto* l = std::get_if<std::shared_ptr<const TensorList>>(&v)) return **l;
  throw Error(ErrorKind::RuntimeGraphError, "expected a list, got a tensor");
}

RtValue make_list(std::vector<Tensor> items, TypeSig elem) {
  auto l = std::make_shared<TensorList>();
  l->items = std::move(items);
  l->elem = std::move(elem);
  return std::shared_ptr<const TensorList>(std::move(l));
}

bool truth(const RtValue& v, const char* what) {
  const Tensor& t = tensor(v);
  if (t.dtype != DType::Bool || !t.is_scalar()) {
    throw Error(ErrorKind::NonBooleanTest, std::string(what) + " must be a bool scalar");
  }
  return t.i[0] != 0;
}

RtValue zeros_like(const RtValue& v) {
  if (const auto* t = std::get_if<Tensor>(&v)) return Tensor::zeros(t->dtype, t->shape);
  const auto& l = list(v);
  std::vector<Tensor> items;
  for (const auto& t : l.items) items.push_back(Tensor::zeros(t.dtype, t.shape));
  return make_list(std::move(items), l.elem);
}

class Executor {
 public:
  Executor(const Graph& g, std::vector<std::string>& log) : g_(g), log_(log) {}

  std::vector<RtValue> run(const Subgraph& sg, const std::vector<RtValue>& args) {
    std::vector<std::vector<RtValue>> vals(sg.nodes.size());
    auto in = [&](const Node& n, std::size_t k) -> const RtValue& {
      const auto& r = n.inputs[k];
      return vals[static_cast<std::size_t>(r.node)][static_cast<std::size_t>(r.index)];
    };
    for (std::size_t k = 0; k < sg.nodes.size(); ++k) {
      const Node& n = sg.nodes[k];
      try {
        vals[k] = eval(n, args, [&](std::size_t j) -> const RtValue& { return in(n, j); });
      } catch (Error& e) {
        e.with_span(n.origin);
        throw;
      }
    }
    std::vector<RtValue> out;
    for (const auto& r : sg.outputs) {
      out.push_back(vals[static_cast<std::size_t>(r.node)][static_cast<std::size_t>(r.index)]);
    }
    return out;
  }

 private:
  template <typename In>
  std::vector<RtValue> eval(const Node& n, const std::vector<RtValue>& args, In&& in) {
    switch (n.op) {
      case Op::Const:
        return {n.value};
      case Op::Param:
        return {args.at(static_cast<std::size_t>(n.index))};
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
      case Op::Ne:
        return {kernels::binary(n.op, tensor(in(0)), tensor(in(1)))};
      case Op::Neg:
        return {kernels::neg(tensor(in(0)))};
      case Op::Not:
        return {kernels::logical_not(tensor(in(0)))};
      case Op::Tanh:
        return {kernels::tanh(tensor(in(0)))};
      case Op::Sigmoid:
        return {kernels::sigmoid(tensor(in(0)))};
      case Op::MatMul:
        return {kernels::matmul(tensor(in(0)), tensor(in(1)))};
      case Op::Transpose:
        return {kernels::transpose(tensor(in(0)), n.ints)};
      case Op::ReduceMax:
        return {kernels::reduce_max(tensor(in(0)))};
      case Op::ReduceSum:
        return {kernels::reduce_sum(tensor(in(0)))};
      case Op::Where:
        return {kernels::where(tensor(in(0)), tensor(in(1)), tensor(in(2)))};
      case Op::Shape:
        return {kernels::shape_of(tensor(in(0)))};
      case Op::Range:
        return {kernels::range(tensor(in(0)).i64(), tensor(in(1)).i64(), tensor(in(2)).i64())};
      case Op::Index:
        return {kernels::index(tensor(in(0)), tensor(in(1)).i64())};
      case Op::SetItem:
        return {kernels::set_item(tensor(in(0)), tensor(in(1)).i64(), tensor(in(2)))};
      case Op::Zeros:
        return {kernels::zeros(n.dtype, tensor(in(0)))};
      case Op::ZerosLike:
        return {zeros_like(in(0))};
      case Op::SumTo:
        return {kernels::sum_to(tensor(in(0)), tensor(in(1)).shape)};
      case Op::Cond: {
        bool p = truth(in(0), "cond predicate");
        std::vector<RtValue> caps;
        for (std::size_t j = 1; j < n.inputs.size(); ++j) caps.push_back(in(j));
        return run(*n.subgraphs[p ? 0 : 1], caps);
      }
      case Op::While: {
        const auto nv = static_cast<std::size_t>(n.ints[0]);
        std::vector<RtValue> state;
        for (std::size_t j = 0; j < n.inputs.size(); ++j) state.push_back(in(j));
        std::int64_t iterations = 0;
        while (truth(run(*n.subgraphs[0], state)[0], "loop test")) {
          if (n.max_iterations && iterations >= *n.max_iterations) {
            throw Error(ErrorKind::IterationLimitExceeded,
                        "loop exceeded " + std::to_string(*n.max_iterations) + " iterations");
          }
          auto next = run(*n.subgraphs[1], state);
          for (std::size_t j = 0; j < nv; ++j) state[j] = std::move(next[j]);
          ++iterations;
        }
        state.resize(nv);
        return state;
      }
      case Op::FuncCall: {
        auto it = g_.functions.find(n.name);
        if (it == g_.functions.end()) {
          throw Error(ErrorKind::RuntimeGraphError, "undefined function " + n.name);
        }
        if (++depth_ > kMaxDepth) {
          --depth_;
          throw Error(ErrorKind::RecursionDepthExceeded, "call depth limit in " + n.name);
        }
        std::vector<RtValue> a;
        for (std::size_t j = 0; j < n.inputs.size(); ++j) a.push_back(in(j));
        auto out = run(*it->second.body, a);
        --depth_;
        return out;
      }
      case Op::ListNew: {
        std::vector<Tensor> items;
        for (std::size_t j = 0; j < n.inputs.size(); ++j) items.push_back(tensor(in(j)));
        TypeSig elem = n.out_types[0];
        elem.list = false;
        return {make_list(std::move(items), elem)};
      }
      case Op::ListAppend: {
        const auto& l = list(in(0));
        auto items = l.items;
        items.push_back(tensor(in(1)));
        return {make_list(std::move(items), l.elem)};
      }
      case Op::ListPop: {
        const auto& l = list(in(0));
        if (l.items.empty()) throw Error(ErrorKind::EmptyPop, "pop from empty list");
        auto items = l.items;
        Tensor last = items.back();
        items.pop_back();
        return {make_list(std::move(items), l.elem), std::move(last)};
      }
      case Op::ListGet: {
        const auto& l = list(in(0));
        auto k = kernels::normalize_index(tensor(in(1)).i64(),
                                          static_cast<std::int64_t>(l.items.size()));
        return {l.items[static_cast<std::size_t>(k)]};
      }
      case Op::ListSet: {
        const auto& l = list(in(0));
        auto k = kernels::normalize_index(tensor(in(1)).i64(),
                                          static_cast<std::int64_t>(l.items.size()));
        auto items = l.items;
        items[static_cast<std::size_t>(k)] = tensor(in(2));
        return {make_list(std::move(items), l.elem)};
      }
      case Op::ListStack: {
        const auto& l = list(in(0));
        return {kernels::stack(l.items, l.elem)};
      }
      case Op::ListLen:
        return {Tensor::scalar_i64(static_cast<std::int64_t>(list(in(0)).items.size()))};
      case Op::ListUnstack: {
        const Tensor& t = tensor(in(0));
        TypeSig elem = n.out_types[0];
        elem.list = false;
        return {make_list(kernels::unstack(t), elem)};
      }
      case Op::Print: {
        std::string line;
        for (std::size_t j = 0; j < n.ints.size(); ++j) {
          if (j) line += " ";
          line += n.ints[j] < 0 ? n.strings[j] : format_rt(in(static_cast<std::size_t>(n.ints[j])));
        }
        log_.push_back(line);
        return {};
      }
      case Op::Assert:
        if (!truth(in(0), "assert condition")) {
          throw Error(ErrorKind::AssertionFailed, n.strings.empty() ? "assertion failed"
                                                                    : n.strings[0]);
        }
        return {};
    }
    throw Error(ErrorKind::InternalError, "unhandled op in executor");
  }

  static constexpr int kMaxDepth = 10000;
  const Graph& g_;
  std::vector<std::string>& log_;
  int depth_ = 0;
};

}  // namespace

void validate(const Graph& g) { Validator(g).run(); }

ExecResult execute(const Graph& g, const std::map<std::string, RtValue>& feeds) {
  std::vector<RtValue> args;
  for (int p : g.main.params) {
    const Node& param = g.main.nodes[static_cast<std::size_t>(p)];
    auto it = feeds.find(param.name);
    if (it == feeds.end()) {
      throw Error(ErrorKind::RuntimeGraphError, "missing feed for parameter '" + param.name + "'",
                  param.origin);
    }
    const TypeSig& sig = param.out_types[0];
    bool ok;
    if (const auto* t = std::get_if<Tensor>(&it->second)) {
      ok = !sig.list && admits(sig, t->dtype, t->shape);
    } else {
      ok = sig.list;
    }
    if (!ok) {
      throw Error(ErrorKind::RuntimeGraphError,
                  "feed for '" + param.name + "' does not match " + sig.str(), param.origin);
    }
    args.push_back(it->second);
  }
  ExecResult result;
  Executor ex(g, result.log);
  result.outputs = ex.run(g.main, args);
  return result;
}

}  // namespace stagekit::graph
