// Ternary and logical expressions become dispatch calls with value thunks.
// Thunk definitions are hoisted to just before the enclosing statement.

#include "pass.hpp"

namespace stagekit::transforms {

namespace {

using syntax::make_name;

struct Hoister {
  PassContext& ctx;
  NodeList defs;
  int count = 0;

  // `def ag__thunk_N(): return value`; returns a reference to it.
  NodePtr thunk(NodePtr value) {
    const Node* at = value.get();
    const std::string name = ctx.fresh("ag__thunk");
    defs.push_back(syntax::make_function(name, {}, {syntax::make_return(value, at)}, at));
    return make_name(name, at);
  }
};

void hoisting(Node& module, PassContext& ctx, const char* what,
              const std::function<void(NodePtr&, Hoister&)>& f) {
  Hoister h{ctx, {}, 0};
  for_each_block(module, [&](NodeList& block) {
    for (std::size_t i = 0; i < block.size(); ++i) {
      h.defs.clear();
      rewrite_exprs(*block[i], [&](NodePtr& n) { f(n, h); });
      block.insert(block.begin() + static_cast<std::ptrdiff_t>(i), h.defs.begin(), h.defs.end());
      i += h.defs.size();
    }
  });
  if (h.count) ctx.note("converted " + std::to_string(h.count) + " " + what);
}

NodePtr comparison(NodePtr lhs, const std::string& op, NodePtr rhs, const Node* at) {
  if (op == "==" || op == "!=") {
    return intrinsic_call(op == "==" ? "eq_" : "ne_", {std::move(lhs), std::move(rhs)}, at);
  }
  auto c = syntax::make(Kind::Compare, at);
  c->ops = {op};
  c->kids = {std::move(lhs), std::move(rhs)};
  return c;
}

}  // namespace

void pass_ternary(Node& module, PassContext& ctx) {
  hoisting(module, ctx, "conditional expression(s)", [](NodePtr& n, Hoister& h) {
    if (n->kind != Kind::Ternary) return;
    ++h.count;
    NodePtr t = h.thunk(n->kids[0]);
    NodePtr f = h.thunk(n->kids[2]);
    n = intrinsic_call("if_exp", {n->kids[1], t, f}, n.get());
  });
}

void pass_logical(Node& module, PassContext& ctx) {
  hoisting(module, ctx, "logical expression(s)", [](NodePtr& n, Hoister& h) {
    const Node* at = n.get();
    switch (n->kind) {
      case Kind::BoolOp:
        ++h.count;
        n = intrinsic_call(n->text == "and" ? "and_" : "or_", {n->kids[0], h.thunk(n->kids[1])},
                           at);
        return;
      case Kind::UnaryOp:
        if (n->text != "not") return;
        ++h.count;
        n = intrinsic_call("not_", {n->kids[0]}, at);
        return;
      case Kind::Compare: {
        const auto& ops = n->ops;
        if (ops.size() == 1) {
          if (ops[0] != "==" && ops[0] != "!=") return;
          ++h.count;
          n = comparison(n->kids[0], ops[0], n->kids[1], at);
          return;
        }
        // a < b < c  ->  and_(a < b, thunk(b < c)); inner operands repeat.
        ++h.count;
        const std::size_t last = ops.size() - 1;
        NodePtr result = comparison(syntax::clone(*n->kids[last]), ops[last], n->kids[last + 1], at);
        for (std::size_t k = last; k-- > 0;) {
          NodePtr lhs = k == 0 ? n->kids[0] : syntax::clone(*n->kids[k]);
          result = intrinsic_call(
              "and_", {comparison(lhs, ops[k], n->kids[k + 1], at), h.thunk(result)}, at);
        }
        n = result;
        return;
      }
      default:
        return;
    }
  });
}

}  // namespace stagekit::transforms
