// Statement-local rewrites: assert, lists, slices and calls.

#include "pass.hpp"
#include "stagekit/syntax/qualified_name.hpp"

namespace stagekit::transforms {

namespace {

using syntax::make_assign;
using syntax::make_name;

// Callee of a method call `<base>.<method>(...)`, or null.
const Node* method_base(const Node& call, const char* method) {
  if (call.kind != Kind::Call) return nullptr;
  const Node& callee = *call.kids[0];
  if (callee.kind != Kind::Attribute || callee.text != method) return nullptr;
  return callee.kids[0].get();
}

bool is_intrinsic(const Node& callee) {
  auto qn = syntax::qualified_name_of(callee);
  return qn && !qn->is_simple() && analysis::is_reserved_root(qn->root());
}

NodeList args_of(const Node& call) { return NodeList(call.kids.begin() + 1, call.kids.end()); }

}  // namespace

// ---------------------------------------------------------------- assert

void pass_assert(Node& module, PassContext& ctx) {
  int count = 0;
  for_each_block(module, [&](NodeList& block) {
    for (auto& st : block) {
      if (st->kind != Kind::Assert) continue;
      NodeList args = {st->kids[0],
                       st->kids.size() > 1 ? st->kids[1] : syntax::make_none(st.get())};
      st = syntax::make_expr_stmt(intrinsic_call("assert_stmt", std::move(args), st.get()),
                                  st.get());
      ++count;
    }
  });
  if (count) ctx.note("converted " + std::to_string(count) + " assert(s)");
}

// ----------------------------------------------------------------- lists

namespace {

struct ListRewriter {
  PassContext& ctx;
  int count = 0;

  // `l.append(x)` / `l.pop()` operand must name a symbol we can rebind.
  NodePtr target_of(const Node* base, const Node& at) {
    if (!syntax::qualified_name_of(*base)) {
      ctx.fail(ErrorKind::ListPatternError,
               "list operation target must be a name, attribute or constant subscript", at);
    }
    return syntax::clone(*base);
  }

  void expr(NodePtr& e, const Node& scope, const std::string& assigned_to) {
    rewrite_expr(e, [&](NodePtr& n) {
      if (n->kind == Kind::ListLiteral) {
        ++count;
        auto it = scope.annotations.find("element_type:" + assigned_to);
        if (!assigned_to.empty() && it != scope.annotations.end() && n == e) {
          NodeList args = {syntax::make_str(it->second, n.get())};
          args.insert(args.end(), n->kids.begin(), n->kids.end());
          n = intrinsic_call("typed_list", std::move(args), n.get());
        } else {
          n = intrinsic_call("list_new", n->kids, n.get());
        }
        return;
      }
      if (n->kind != Kind::Call) return;
      if (method_base(*n, "append") || method_base(*n, "pop")) {
        ctx.fail(ErrorKind::ListPatternError,
                 "append() and pop() must be used as statements or assigned directly", *n);
      }
      auto qn = syntax::qualified_name_of(*n->kids[0]);
      if (qn && qn->str() == "ag.stack") {
        ++count;
        n = intrinsic_call("list_stack", args_of(*n), n.get());
      }
    });
  }

  void block(NodeList& stmts, const Node& scope) {
    for (auto& st : stmts) {
      if (st->kind == Kind::FunctionDef) {
        block(st->body, *st);
        continue;
      }
      block(st->body, scope);
      block(st->orelse, scope);
      Node& s = *st;
      const Node* from = st.get();
      if (s.kind == Kind::ExprStmt) {
        Node& call = *s.kids[0];
        if (const Node* base = method_base(call, "append")) {
          ++count;
          NodeList args = args_of(call);
          for (auto& a : args) expr(a, scope, {});
          args.insert(args.begin(), target_of(base, call));
          st = make_assign(target_of(base, call), intrinsic_call("list_append", args, from),
                           from);
          continue;
        }
        if (const Node* base = method_base(call, "pop")) {
          ++count;
          auto tgt = syntax::make_tuple(
              {target_of(base, call), make_name(ctx.fresh("ag__popped"), from)}, from);
          st = make_assign(tgt, intrinsic_call("list_pop", {target_of(base, call)}, from), from);
          continue;
        }
      }
      if (s.kind == Kind::Assign) {
        if (const Node* base = method_base(*s.kids[1], "pop")) {
          ++count;
          expr(s.kids[0], scope, {});
          auto tgt = syntax::make_tuple({target_of(base, *s.kids[1]), s.kids[0]}, from);
          st = make_assign(tgt, intrinsic_call("list_pop", {target_of(base, *s.kids[1])}, from),
                           from);
          continue;
        }
        auto qn = syntax::qualified_name_of(*s.kids[0]);
        expr(s.kids[1], scope, qn ? qn->str() : std::string());
        expr(s.kids[0], scope, {});
        continue;
      }
      if (s.kind != Kind::FunctionDef) {
        for (auto& k : s.kids) expr(k, scope, {});
      }
    }
  }
};

}  // namespace

void pass_lists(Node& module, PassContext& ctx) {
  ListRewriter r{ctx, 0};
  r.block(module.body, module);
  if (r.count) ctx.note("rewrote " + std::to_string(r.count) + " list operation(s)");
}

// ---------------------------------------------------------------- slices

namespace {

void reads(NodePtr& e, int& subscripts) {
  rewrite_expr(e, [&](NodePtr& n) {
    if (n->kind != Kind::Subscript) return;
    ++subscripts;
    n = intrinsic_call("getitem", {n->kids[0], n->kids[1]}, n.get());
  });
}

// `a[i][j] = v` -> `a = setitem(a, i, setitem(getitem(a, i), j, v))`
NodePtr store(const NodePtr& target, NodePtr value, const Node* from, int& subscripts) {
  if (target->kind != Kind::Subscript) return make_assign(target, std::move(value), from);
  ++subscripts;
  NodePtr base = target->kids[0];
  NodePtr read_base = syntax::clone(*base);
  reads(read_base, subscripts);
  NodePtr index = target->kids[1];
  reads(index, subscripts);
  return store(base, intrinsic_call("setitem", {read_base, index, std::move(value)}, from), from,
               subscripts);
}

bool tuple_has_subscript(const Node& t) {
  if (t.kind == Kind::Subscript) return true;
  if (t.kind != Kind::Tuple) return false;
  for (const auto& k : t.kids) {
    if (tuple_has_subscript(*k)) return true;
  }
  return false;
}

}  // namespace

void pass_slices(Node& module, PassContext& ctx) {
  int subscripts = 0;
  for_each_block(module, [&](NodeList& block) {
    for (auto& st : block) {
      const Node* from = st.get();
      if ((st->kind == Kind::Assign || st->kind == Kind::AugAssign) &&
          st->kids[0]->kind == Kind::Subscript) {
        NodePtr value = st->kids[1];
        reads(value, subscripts);
        if (st->kind == Kind::AugAssign) {
          NodePtr cur = syntax::clone(*st->kids[0]);
          reads(cur, subscripts);
          auto op = syntax::make(Kind::BinOp, from);
          op->text = st->text;
          op->kids = {cur, value};
          value = op;
        }
        st = store(st->kids[0], value, from, subscripts);
        continue;
      }
      if ((st->kind == Kind::Assign && st->kids[0]->kind == Kind::Tuple &&
           tuple_has_subscript(*st->kids[0])) ||
          (st->kind == Kind::For && tuple_has_subscript(*st->kids[0]))) {
        ctx.fail(ErrorKind::ConversionError, "subscript inside a tuple or loop target", *st);
      }
      for (auto& k : st->kids) {
        if (st->kind != Kind::FunctionDef) reads(k, subscripts);
      }
    }
  });
  if (subscripts) ctx.note("rewrote " + std::to_string(subscripts) + " subscript(s)");
}

// ----------------------------------------------------------------- calls

void pass_calls(Node& module, PassContext& ctx) {
  int count = 0;
  auto builtin = [](const Node& callee) {
    return callee.kind == Kind::Name &&
           (callee.text == "print" || callee.text == "range" || callee.text == "len");
  };
  for_each_block(module, [&](NodeList& block) {
    for (auto& st : block) {
      rewrite_exprs(*st, [&](NodePtr& n) {
        if (n->kind != Kind::Call) return;
        const Node& callee = *n->kids[0];
        if (is_intrinsic(callee)) return;
        if (callee.kind == Kind::Name && is_generated(callee.text)) return;
        if (!ctx.config.recursive && !builtin(callee)) return;
        ++count;
        n = intrinsic_call("converted_call", n->kids, n.get());
      });
    }
  });
  if (count) ctx.note("converted " + std::to_string(count) + " call(s)");
}

}  // namespace stagekit::transforms
