#include "stagekit/graph/gradient.hpp"

#include <optional>

#include "stagekit/error.hpp"
#include "stagekit/graph/builder.hpp"

namespace stagekit::graph {

namespace {

using ValueMap = std::vector<std::vector<ValueRef>>;

bool differentiable(const TypeSig& t) { return t.dtype == DType::F64; }

std::shared_ptr<Subgraph> strip_effects(const Subgraph& g);

// Copies the nodes of `fwd` onto the end of `dst`. Params resolve to
// `params`. With `strip`, Print/Assert are dropped (recomputation must not
// repeat effects), recursively through nested subgraphs.
ValueMap copy_into(const Subgraph& fwd, Subgraph& dst, const std::vector<ValueRef>& params,
                   bool strip) {
  ValueMap map(fwd.nodes.size());
  for (std::size_t k = 0; k < fwd.nodes.size(); ++k) {
    const Node& src = fwd.nodes[k];
    if (src.op == Op::Param) {
      map[k] = {params.at(static_cast<std::size_t>(src.index))};
      continue;
    }
    if (strip && is_effectful(src.op)) continue;
    Node n = src;
    for (auto& r : n.inputs) r = map[static_cast<std::size_t>(r.node)][static_cast<std::size_t>(r.index)];
    if (strip) {
      for (auto& sub : n.subgraphs) sub = strip_effects(*sub);
    }
    const int id = static_cast<int>(dst.nodes.size());
    for (std::size_t j = 0; j < n.out_types.size(); ++j) map[k].push_back({id, static_cast<int>(j)});
    dst.nodes.push_back(std::move(n));
  }
  return map;
}

std::shared_ptr<Subgraph> strip_effects(const Subgraph& g) {
  auto out = std::make_shared<Subgraph>();
  std::vector<ValueRef> params;
  for (int p : g.params) {
    Node n = g.nodes[static_cast<std::size_t>(p)];
    out->params.push_back(static_cast<int>(out->nodes.size()));
    params.push_back({static_cast<int>(out->nodes.size()), 0});
    out->nodes.push_back(std::move(n));
  }
  auto map = copy_into(g, *out, params, true);
  for (const auto& r : g.outputs) {
    out->outputs.push_back(map[static_cast<std::size_t>(r.node)][static_cast<std::size_t>(r.index)]);
  }
  return out;
}

[[noreturn]] void not_differentiable(const Node& n) {
  if (n.op == Op::While) {
    throw Error(ErrorKind::WhileNotDifferentiable,
                "cannot differentiate through a while loop", n.origin);
  }
  throw Error(ErrorKind::NonDifferentiable,
              "op '" + std::string(op_name(n.op)) + "' is not differentiable", n.origin);
}

struct GradFn {
  std::string name;
  std::vector<std::size_t> diff_params;  // forward params that get a gradient
};

class Reverser {
 public:
  Reverser(const Graph& src, Graph& out) : src_(src), out_(out) {}

  // Appends the reverse sweep of `fwd` (whose values live in `dst` at `fmap`)
  // to `dst`. Returns the adjoint reaching each forward param.
  std::vector<std::optional<ValueRef>> run(const Subgraph& fwd, const ValueMap& fmap,
                                           Subgraph& dst, const std::vector<bool>& active_params,
                                           const std::vector<std::pair<ValueRef, ValueRef>>& seeds) {
    const std::size_t count = fwd.nodes.size();
    std::vector<bool> active(count, false);
    for (std::size_t k = 0; k < count; ++k) {
      const Node& n = fwd.nodes[k];
      if (n.op == Op::Param) {
        active[k] = active_params.at(static_cast<std::size_t>(n.index)) &&
                    differentiable(n.out_types[0]);
      } else {
        for (const auto& r : n.inputs) active[k] = active[k] || active[static_cast<std::size_t>(r.node)];
      }
    }
    std::vector<std::vector<std::optional<ValueRef>>> adj(count);
    for (std::size_t k = 0; k < count; ++k) adj[k].resize(fwd.nodes[k].out_types.size());

    Builder b(dst);
    auto accumulate = [&](ValueRef fr, ValueRef g) {
      const auto k = static_cast<std::size_t>(fr.node);
      const TypeSig& t = fwd.type_of(fr);
      if (!active[k] || !differentiable(t)) return;
      auto& slot = adj[k][static_cast<std::size_t>(fr.index)];
      if (!slot) {
        slot = g;
      } else if (t.list) {
        throw Error(ErrorKind::NonDifferentiable,
                    "list value feeds the gradient path more than once", fwd.nodes[k].origin);
      } else {
        slot = b.op(Op::Add, {*slot, g});
      }
    };
    for (const auto& [fr, g] : seeds) accumulate(fr, g);

    for (std::size_t k = count; k-- > 0;) {
      const Node& n = fwd.nodes[k];
      if (!active[k] || n.op == Op::Param) continue;
      bool any = false;
      for (const auto& a : adj[k]) any = any || a.has_value();
      if (!any) continue;
      b.set_origin(n.origin, n.scope);
      auto X = [&](std::size_t j) {
        const auto& r = n.inputs[j];
        return fmap[static_cast<std::size_t>(r.node)][static_cast<std::size_t>(r.index)];
      };
      auto Y = [&](std::size_t j) { return fmap[k][j]; };
      auto in = [&](std::size_t j) { return n.inputs[j]; };
      auto zeros = [&](ValueRef r) { return b.op(Op::ZerosLike, {r}); };
      auto sum_to = [&](ValueRef g, std::size_t j) { return b.op(Op::SumTo, {g, X(j)}); };
      auto seed_or_zero = [&](std::size_t j) { return adj[k][j] ? *adj[k][j] : zeros(Y(j)); };
      const ValueRef G = adj[k][0] ? *adj[k][0] : ValueRef{};

      switch (n.op) {
        case Op::Add:
          accumulate(in(0), sum_to(G, 0));
          accumulate(in(1), sum_to(G, 1));
          break;
        case Op::Sub:
          accumulate(in(0), sum_to(G, 0));
          accumulate(in(1), sum_to(b.op(Op::Neg, {G}), 1));
          break;
        case Op::Mul:
          accumulate(in(0), sum_to(b.op(Op::Mul, {G, X(1)}), 0));
          accumulate(in(1), sum_to(b.op(Op::Mul, {G, X(0)}), 1));
          break;
        case Op::Div: {
          accumulate(in(0), sum_to(b.op(Op::Div, {G, X(1)}), 0));
          auto num = b.op(Op::Mul, {G, X(0)});
          auto den = b.op(Op::Mul, {X(1), X(1)});
          accumulate(in(1), sum_to(b.op(Op::Neg, {b.op(Op::Div, {num, den})}), 1));
          break;
        }
        case Op::Neg:
          accumulate(in(0), b.op(Op::Neg, {G}));
          break;
        case Op::MatMul: {
          auto bt = b.op(Op::Transpose, {X(1)});
          auto at = b.op(Op::Transpose, {X(0)});
          accumulate(in(0), b.op(Op::MatMul, {G, bt}));
          accumulate(in(1), b.op(Op::MatMul, {at, G}));
          break;
        }
        case Op::Transpose: {
          Node t;
          t.op = Op::Transpose;
          t.inputs = {G};
          if (!n.ints.empty()) {
            t.ints.assign(n.ints.size(), 0);
            for (std::size_t p = 0; p < n.ints.size(); ++p) {
              t.ints[static_cast<std::size_t>(n.ints[p])] = static_cast<std::int64_t>(p);
            }
          }
          accumulate(in(0), b.add(std::move(t))[0]);
          break;
        }
        case Op::ReduceSum:
          accumulate(in(0), b.op(Op::Add, {zeros(X(0)), G}));
          break;
        case Op::Tanh: {
          auto one = b.constant(Tensor::scalar_f64(1.0));
          auto y2 = b.op(Op::Mul, {Y(0), Y(0)});
          accumulate(in(0), b.op(Op::Mul, {G, b.op(Op::Sub, {one, y2})}));
          break;
        }
        case Op::Sigmoid: {
          auto one = b.constant(Tensor::scalar_f64(1.0));
          auto dy = b.op(Op::Mul, {Y(0), b.op(Op::Sub, {one, Y(0)})});
          accumulate(in(0), b.op(Op::Mul, {G, dy}));
          break;
        }
        case Op::Where: {
          auto z = zeros(G);
          accumulate(in(1), sum_to(b.op(Op::Where, {X(0), G, z}), 1));
          accumulate(in(2), sum_to(b.op(Op::Where, {X(0), z, G}), 2));
          break;
        }
        case Op::Index:
          accumulate(in(0), b.op(Op::SetItem, {zeros(X(0)), X(1), G}));
          break;
        case Op::SetItem: {
          auto gi = b.op(Op::Index, {G, X(1)});
          accumulate(in(0), b.op(Op::SetItem, {G, X(1), zeros(gi)}));
          accumulate(in(2), sum_to(gi, 2));
          break;
        }
        case Op::SumTo:
          accumulate(in(0), b.op(Op::Add, {zeros(X(0)), G}));
          break;
        case Op::ListStack:
          accumulate(in(0), b.op(Op::ListUnstack, {G}));
          break;
        case Op::ListNew:
          for (std::size_t j = 0; j < n.inputs.size(); ++j) {
            auto idx = b.constant(Tensor::scalar_i64(static_cast<std::int64_t>(j)));
            accumulate(in(j), b.op(Op::ListGet, {G, idx}));
          }
          break;
        case Op::ListAppend: {
          Node pop;
          pop.op = Op::ListPop;
          pop.inputs = {G};
          auto refs = b.add(std::move(pop));
          accumulate(in(0), refs[0]);
          accumulate(in(1), refs[1]);
          break;
        }
        case Op::ListPop:
          accumulate(in(0), b.op(Op::ListAppend, {seed_or_zero(0), seed_or_zero(1)}));
          break;
        case Op::ListGet:
          accumulate(in(0), b.op(Op::ListSet, {zeros(X(0)), X(1), G}));
          break;
        case Op::ListSet: {
          auto gv = b.op(Op::ListGet, {G, X(1)});
          accumulate(in(0), b.op(Op::ListSet, {G, X(1), zeros(gv)}));
          accumulate(in(2), gv);
          break;
        }
        case Op::Cond:
          reverse_cond(n, b, active, X, seed_or_zero, accumulate);
          break;
        case Op::FuncCall:
          reverse_call(n, b, X, seed_or_zero, accumulate);
          break;
        case Op::ZerosLike:
        case Op::Zeros:
        case Op::Const:
          break;
        default:
          not_differentiable(n);
      }
    }

    std::vector<std::optional<ValueRef>> out;
    for (int p : fwd.params) out.push_back(adj[static_cast<std::size_t>(p)][0]);
    return out;
  }

  const GradFn& grad_function(const std::string& name) {
    if (auto it = cache_.find(name); it != cache_.end()) return it->second;
    const Function& f = src_.functions.at(name);
    std::string gname = name + "_grad";
    while (out_.functions.count(gname)) gname += "_";
    GradFn info{gname, {}};
    const auto fparams = f.body->param_types();
    for (std::size_t p = 0; p < fparams.size(); ++p) {
      if (differentiable(fparams[p])) info.diff_params.push_back(p);
    }
    cache_[name] = info;

    auto body = std::make_shared<Subgraph>();
    out_.functions[gname] = Function{gname, f.key + "/grad", body};
    out_.function_order.push_back(gname);

    Builder gb(*body);
    std::vector<ValueRef> params;
    for (int p : f.body->params) {
      const Node& pn = f.body->nodes[static_cast<std::size_t>(p)];
      params.push_back(gb.param(pn.name, pn.out_types[0]));
    }
    std::vector<std::pair<ValueRef, ValueRef>> seeds;
    for (std::size_t j = 0; j < f.body->outputs.size(); ++j) {
      const TypeSig& t = f.body->type_of(f.body->outputs[j]);
      if (!differentiable(t)) continue;
      seeds.push_back({f.body->outputs[j], gb.param("seed" + std::to_string(j), t)});
    }
    auto map = copy_into(*f.body, *body, params, true);
    auto padj = run(*f.body, map, *body, std::vector<bool>(params.size(), true), seeds);
    for (auto p : info.diff_params) {
      body->outputs.push_back(padj[p] ? *padj[p] : gb.op(Op::ZerosLike, {params[p]}));
    }
    return cache_[name];
  }

 private:
  template <typename XF, typename SeedF, typename AccF>
  void reverse_cond(const Node& n, Builder& b, const std::vector<bool>& active, XF&& X,
                    SeedF&& seed_or_zero, AccF&& accumulate) {
    const std::size_t ncaps = n.inputs.size() - 1;
    std::vector<bool> cap_active(ncaps);
    std::vector<std::size_t> diff_caps;
    std::vector<TypeSig> cap_types;
    const auto then_params = n.subgraphs[0]->param_types();
    for (std::size_t c = 0; c < ncaps; ++c) {
      const TypeSig& t = then_params[c];
      cap_types.push_back(t);
      cap_active[c] = active[static_cast<std::size_t>(n.inputs[c + 1].node)] && differentiable(t);
      if (cap_active[c]) diff_caps.push_back(c);
    }
    std::vector<std::size_t> diff_outs;
    std::vector<ValueRef> seed_vals;
    for (std::size_t j = 0; j < n.out_types.size(); ++j) {
      if (!differentiable(n.out_types[j])) continue;
      diff_outs.push_back(j);
      seed_vals.push_back(seed_or_zero(j));
    }

    Node gc;
    gc.op = Op::Cond;
    gc.inputs.push_back(X(0));
    for (std::size_t c = 0; c < ncaps; ++c) gc.inputs.push_back(X(c + 1));
    for (auto s : seed_vals) gc.inputs.push_back(s);

    std::vector<std::vector<TypeSig>> branch_types;
    for (const auto& fwd_branch : n.subgraphs) {
      auto sub = std::make_shared<Subgraph>();
      Builder sb(*sub);
      std::vector<ValueRef> caps;
      for (std::size_t c = 0; c < ncaps; ++c) {
        caps.push_back(sb.param("cap" + std::to_string(c), cap_types[c]));
      }
      std::vector<std::pair<ValueRef, ValueRef>> seeds;
      for (std::size_t s = 0; s < diff_outs.size(); ++s) {
        auto p = sb.param("seed" + std::to_string(diff_outs[s]), n.out_types[diff_outs[s]]);
        seeds.push_back({fwd_branch->outputs[diff_outs[s]], p});
      }
      auto map = copy_into(*fwd_branch, *sub, caps, true);
      auto padj = run(*fwd_branch, map, *sub, cap_active, seeds);
      std::vector<TypeSig> types;
      for (auto c : diff_caps) {
        sub->outputs.push_back(padj[c] ? *padj[c] : sb.op(Op::ZerosLike, {caps[c]}));
        types.push_back(sub->type_of(sub->outputs.back()));
      }
      branch_types.push_back(std::move(types));
      gc.subgraphs.push_back(std::move(sub));
    }
    for (std::size_t i = 0; i < diff_caps.size(); ++i) {
      auto j = join(branch_types[0][i], branch_types[1][i]);
      gc.out_types.push_back(j ? *j : cap_types[diff_caps[i]]);
    }
    auto refs = b.add(std::move(gc));
    for (std::size_t i = 0; i < diff_caps.size(); ++i) accumulate(n.inputs[diff_caps[i] + 1], refs[i]);
  }

  template <typename XF, typename SeedF, typename AccF>
  void reverse_call(const Node& n, Builder& b, XF&& X, SeedF&& seed_or_zero, AccF&& accumulate) {
    const GradFn info = grad_function(n.name);
    const Function& f = src_.functions.at(n.name);
    Node call;
    call.op = Op::FuncCall;
    call.name = info.name;
    for (std::size_t j = 0; j < n.inputs.size(); ++j) call.inputs.push_back(X(j));
    for (std::size_t j = 0; j < n.out_types.size(); ++j) {
      if (differentiable(f.body->type_of(f.body->outputs[j]))) call.inputs.push_back(seed_or_zero(j));
    }
    const auto ptypes = f.body->param_types();
    for (auto p : info.diff_params) call.out_types.push_back(ptypes[p]);
    auto refs = b.add(std::move(call));
    for (std::size_t i = 0; i < info.diff_params.size(); ++i) {
      accumulate(n.inputs[info.diff_params[i]], refs[i]);
    }
  }

  const Graph& src_;
  Graph& out_;
  std::map<std::string, GradFn> cache_;
};

}  // namespace

Graph gradient(const Graph& g, ValueRef output, const std::vector<std::string>& wrt) {
  if (output.node < 0 || static_cast<std::size_t>(output.node) >= g.main.nodes.size()) {
    throw Error(ErrorKind::UsageError, "gradient output is not a main-graph value");
  }
  const TypeSig& ot = g.main.type_of(output);
  if (ot.dtype != DType::F64 || ot.list || (ot.shape && !ot.shape->empty())) {
    throw Error(ErrorKind::UsageError, "gradient output must be an f64 scalar, got " + ot.str());
  }
  std::vector<bool> active(g.main.params.size(), false);
  std::vector<std::size_t> wrt_idx;
  for (const auto& name : wrt) {
    bool found = false;
    for (std::size_t p = 0; p < g.main.params.size(); ++p) {
      if (g.main.nodes[static_cast<std::size_t>(g.main.params[p])].name == name) {
        active[p] = true;
        wrt_idx.push_back(p);
        found = true;
        break;
      }
    }
    if (!found) throw Error(ErrorKind::UsageError, "no parameter named '" + name + "'");
  }

  Graph out;
  out.functions = g.functions;
  out.function_order = g.function_order;
  Builder mb(out.main);
  std::vector<ValueRef> params;
  for (int p : g.main.params) {
    const Node& pn = g.main.nodes[static_cast<std::size_t>(p)];
    mb.set_origin(pn.origin, pn.scope);
    params.push_back(mb.param(pn.name, pn.out_types[0]));
  }
  auto map = copy_into(g.main, out.main, params, false);
  const ValueRef y = map[static_cast<std::size_t>(output.node)][static_cast<std::size_t>(output.index)];
  mb.set_origin(g.main.nodes[static_cast<std::size_t>(output.node)].origin, "grad");
  const ValueRef one = mb.constant(Tensor::scalar_f64(1.0));

  Reverser rev(g, out);
  auto padj = rev.run(g.main, map, out.main, active, {{output, one}});
  out.main.outputs = {y};
  for (auto p : wrt_idx) {
    out.main.outputs.push_back(padj[p] ? *padj[p] : mb.op(Op::ZerosLike, {params[p]}));
  }
  return out;
}

}  // namespace stagekit::graph
