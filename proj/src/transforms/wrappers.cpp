// Each user function body runs inside ag__.function_scope, which names the
// trace scope and tags errors with the function name.

#include "pass.hpp"

namespace stagekit::transforms {

void pass_wrappers(Node& module, PassContext& ctx) {
  int count = 0;
  for_each_block(module, [&](NodeList& block) {
    for (auto& st : block) {
      if (st->kind != Kind::FunctionDef || is_generated(st->text)) continue;
      const Node* at = st.get();
      const std::string inner = ctx.fresh("ag__body");
      auto body_fn = syntax::make_function(inner, {}, std::move(st->body), at);
      auto call = intrinsic_call(
          "function_scope", {syntax::make_str(st->text, at), syntax::make_name(inner, at)}, at);
      st->body = {body_fn, syntax::make_return(call, at)};
      ++count;
    }
  });
  if (count) ctx.note("wrapped " + std::to_string(count) + " function(s)");
}

}  // namespace stagekit::transforms
