// break / continue lowering into guard variables and conditionals.

#include "pass.hpp"

namespace stagekit::transforms {

namespace {

using syntax::make_assign;
using syntax::make_bool;
using syntax::make_if;
using syntax::make_name;
using syntax::make_unary;

NodePtr not_flag(const std::string& flag, const Node* from) {
  return make_unary("not", make_name(flag, from), from);
}

// Replaces each `jump` with `flag = True` and guards whatever follows a
// statement that may have set it. Code after an unconditional jump is dead.
NodeList lower(NodeList stmts, Kind jump, const std::string& flag) {
  NodeList out;
  for (std::size_t i = 0; i < stmts.size(); ++i) {
    NodePtr s = stmts[i];
    if (s->kind == jump) {
      out.push_back(make_assign(make_name(flag, s.get()), make_bool(true, s.get()), s.get()));
      return out;
    }
    if (!contains_own(*s, jump)) {
      out.push_back(s);
      continue;
    }
    s->body = lower(std::move(s->body), jump, flag);
    s->orelse = lower(std::move(s->orelse), jump, flag);
    out.push_back(s);
    NodeList rest(stmts.begin() + static_cast<std::ptrdiff_t>(i) + 1, stmts.end());
    if (!rest.empty()) {
      const Node* at = rest.front().get();
      out.push_back(make_if(not_flag(flag, at), lower(std::move(rest), jump, flag), {}, at));
    }
    return out;
  }
  return out;
}

void run(Node& module, PassContext& ctx, Kind jump) {
  const bool brk = jump == Kind::Break;
  int count = 0;
  for_each_block(module, [&](NodeList& block) {
    for (std::size_t i = 0; i < block.size(); ++i) {
      Node& loop = *block[i];
      if (!is_loop(loop) || !contains_own(loop.body, jump)) continue;
      ++count;
      const std::string flag = ctx.fresh(brk ? "ag__brk" : "ag__cont");
      NodeList body = lower(std::move(loop.body), jump, flag);
      auto init = make_assign(make_name(flag, &loop), make_bool(false, &loop), &loop);
      if (!brk) {
        body.insert(body.begin(), init);
        loop.body = std::move(body);
        continue;
      }
      if (loop.kind == Kind::While) {
        loop.kids[0] = syntax::make_boolop("and", not_flag(flag, &loop), loop.kids[0], &loop);
        loop.body = std::move(body);
      } else {
        // A for loop cannot stop early once staged; skip remaining items.
        loop.body = {make_if(not_flag(flag, &loop), std::move(body), {}, &loop)};
      }
      block.insert(block.begin() + static_cast<std::ptrdiff_t>(i), init);
      ++i;
    }
  });
  if (count) ctx.note("lowered " + std::to_string(count) + " loop(s)");
}

}  // namespace

void pass_break(Node& module, PassContext& ctx) { run(module, ctx, Kind::Break); }
void pass_continue(Node& module, PassContext& ctx) { run(module, ctx, Kind::Continue); }

}  // namespace stagekit::transforms
