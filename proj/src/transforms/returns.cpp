// Early returns become assignments to ag__retval and one trailing return.

#include <algorithm>

#include "pass.hpp"

namespace stagekit::transforms {

namespace {

using syntax::make_assign;
using syntax::make_bool;
using syntax::make_if;
using syntax::make_name;

constexpr const char* kRetval = "ag__retval";
constexpr const char* kFlag = "ag__do_return";

bool has_return(const NodeList& stmts);

bool has_return(const Node& s) {
  if (s.kind == Kind::Return) return true;
  if (s.kind == Kind::FunctionDef) return false;
  return has_return(s.body) || has_return(s.orelse);
}

bool has_return(const NodeList& stmts) {
  return std::any_of(stmts.begin(), stmts.end(), [](const NodePtr& s) { return has_return(*s); });
}

bool definitely_returns(const NodeList& stmts) {
  for (const auto& s : stmts) {
    if (s->kind == Kind::Return) return true;
    if (s->kind == Kind::If && definitely_returns(s->body) && definitely_returns(s->orelse)) {
      return true;
    }
  }
  return false;
}

NodePtr set_retval(const Node& ret) {
  NodePtr v = ret.kids.empty() ? syntax::make_none(&ret) : ret.kids[0];
  return make_assign(make_name(kRetval, &ret), v, &ret);
}

NodePtr not_flag(const Node* from) {
  return syntax::make_unary("not", make_name(kFlag, from), from);
}

NodeList lower_in_loop(const NodeList& stmts);

void lower_loop(Node& loop) {
  NodeList body = lower_in_loop(loop.body);
  if (loop.kind == Kind::While) {
    loop.kids[0] = syntax::make_boolop("and", not_flag(&loop), loop.kids[0], &loop);
    loop.body = std::move(body);
  } else {
    loop.body = {make_if(not_flag(&loop), std::move(body), {}, &loop)};
  }
}

// Inside a loop a return sets the flag; later statements are guarded.
NodeList lower_in_loop(const NodeList& stmts) {
  NodeList out;
  for (std::size_t i = 0; i < stmts.size(); ++i) {
    const NodePtr& s = stmts[i];
    if (s->kind == Kind::Return) {
      out.push_back(make_assign(make_name(kFlag, s.get()), make_bool(true, s.get()), s.get()));
      out.push_back(set_retval(*s));
      return out;
    }
    if (!has_return(*s)) {
      out.push_back(s);
      continue;
    }
    if (is_loop(*s)) {
      lower_loop(*s);
    } else {
      s->body = lower_in_loop(s->body);
      s->orelse = lower_in_loop(s->orelse);
    }
    out.push_back(s);
    NodeList rest(stmts.begin() + static_cast<std::ptrdiff_t>(i) + 1, stmts.end());
    if (!rest.empty()) {
      out.push_back(make_if(not_flag(rest.front().get()), lower_in_loop(rest), {},
                            rest.front().get()));
    }
    return out;
  }
  return out;
}

// Outside loops, the statements after a returning `if` are absorbed into its
// branches so every path ends by assigning ag__retval.
NodeList absorb(const NodeList& stmts) {
  NodeList out;
  for (std::size_t i = 0; i < stmts.size(); ++i) {
    const NodePtr& s = stmts[i];
    if (s->kind == Kind::Return) {
      out.push_back(set_retval(*s));
      return out;
    }
    if (!has_return(*s)) {
      out.push_back(s);
      continue;
    }
    NodeList rest(stmts.begin() + static_cast<std::ptrdiff_t>(i) + 1, stmts.end());
    if (is_loop(*s)) {
      lower_loop(*s);
      out.push_back(s);
      if (!rest.empty()) {
        out.push_back(make_if(not_flag(rest.front().get()), absorb(rest), {},
                              rest.front().get()));
      }
      return out;
    }
    NodeList then_part = s->body;
    NodeList else_part = s->orelse;
    if (!definitely_returns(then_part)) {
      for (const auto& r : rest) then_part.push_back(syntax::clone(*r));
    }
    if (!definitely_returns(else_part)) else_part.insert(else_part.end(), rest.begin(), rest.end());
    s->body = absorb(then_part);
    s->orelse = absorb(else_part);
    out.push_back(s);
    return out;
  }
  return out;
}

bool loop_returns(const NodeList& stmts) {
  for (const auto& s : stmts) {
    if (s->kind == Kind::FunctionDef) continue;
    if (is_loop(*s) && has_return(s->body)) return true;
    if (loop_returns(s->body) || loop_returns(s->orelse)) return true;
  }
  return false;
}

int count_returns(const NodeList& stmts) {
  int n = 0;
  for (const auto& s : stmts) {
    if (s->kind == Kind::Return) ++n;
    if (s->kind != Kind::FunctionDef) n += count_returns(s->body) + count_returns(s->orelse);
  }
  return n;
}

}  // namespace

void pass_return(Node& module, PassContext& ctx) {
  int lowered = 0;
  std::function<void(NodeList&)> visit = [&](NodeList& block) {
    for (auto& st : block) {
      if (st->kind != Kind::FunctionDef) {
        visit(st->body);
        visit(st->orelse);
        continue;
      }
      Node& fn = *st;
      visit(fn.body);
      const int n = count_returns(fn.body);
      if (n == 0 || (n == 1 && fn.body.back()->kind == Kind::Return)) continue;
      ++lowered;
      NodeList body = fn.body;
      if (!definitely_returns(body)) body.push_back(syntax::make_return(nullptr, &fn));
      const bool flag = loop_returns(body);
      body = absorb(body);
      if (flag) {
        body.insert(body.begin(), make_assign(make_name(kFlag, &fn), make_bool(false, &fn), &fn));
      }
      body.push_back(syntax::make_return(make_name(kRetval, &fn), &fn));
      fn.body = std::move(body);
    }
  };
  visit(module.body);
  for (const auto& st : module.body) {
    if (st->kind == Kind::Return || has_return(*st)) {
      if (st->kind != Kind::FunctionDef) ctx.fail(ErrorKind::ConversionError, "return outside a function", *st);
    }
  }
  if (lowered) ctx.note("lowered " + std::to_string(lowered) + " function(s)");
}

}  // namespace stagekit::transforms
