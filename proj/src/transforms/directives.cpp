// ag.set_loop_options / ag.set_element_type become node annotations.

#include "pass.hpp"
#include "stagekit/syntax/qualified_name.hpp"

namespace stagekit::transforms {

namespace {

// Name of the directive an ExprStmt calls, or "".
std::string directive_of(const Node& st) {
  if (st.kind != Kind::ExprStmt || st.kids[0]->kind != Kind::Call) return {};
  auto qn = syntax::qualified_name_of(*st.kids[0]->kids[0]);
  if (!qn || qn->components().size() != 2 || qn->root() != "ag") return {};
  const auto& fn = qn->components()[1];
  return fn == "set_loop_options" || fn == "set_element_type" ? fn : std::string();
}

std::string dtype_name(const Node& arg, const PassContext& ctx) {
  if (arg.kind == Kind::StrLit) {
    if (arg.text == "f64" || arg.text == "i64" || arg.text == "bool") return arg.text;
  } else if (arg.kind == Kind::Name) {
    if (arg.text == "float") return "f64";
    if (arg.text == "int") return "i64";
    if (arg.text == "bool") return "bool";
  }
  ctx.fail(ErrorKind::DirectiveError, "unsupported element type in ag.set_element_type", arg);
}

void annotate_loop(Node& loop, const Node& call, const PassContext& ctx) {
  static const char* const kSlots[] = {"max_iterations", "parallel_iterations"};
  const std::size_t nargs = call.kids.size() - 1;
  if (nargs == 0 || nargs > 2) {
    ctx.fail(ErrorKind::DirectiveError, "ag.set_loop_options takes one or two arguments", call);
  }
  for (std::size_t k = 0; k < nargs; ++k) {
    const Node& a = *call.kids[k + 1];
    if (a.kind == Kind::NoneLit) continue;
    if (a.kind != Kind::IntLit || a.ival < 0) {
      ctx.fail(ErrorKind::DirectiveError,
               std::string(kSlots[k]) + " must be a non-negative integer literal", a);
    }
    loop.annotations[kSlots[k]] = std::to_string(a.ival);
  }
}

struct Visitor {
  PassContext& ctx;
  int loops = 0;
  int types = 0;

  void block(NodeList& stmts, Node& scope) {
    for (std::size_t i = 0; i < stmts.size();) {
      Node& st = *stmts[i];
      const std::string d = directive_of(st);
      if (d == "set_loop_options") {
        ctx.fail(ErrorKind::DirectiveError,
                 "ag.set_loop_options must be the first statement of a loop body", st);
      }
      if (d == "set_element_type") {
        const Node& call = *st.kids[0];
        if (call.kids.size() != 3) {
          ctx.fail(ErrorKind::DirectiveError, "ag.set_element_type takes two arguments", call);
        }
        auto qn = syntax::qualified_name_of(*call.kids[1]);
        if (!qn) {
          ctx.fail(ErrorKind::DirectiveError, "ag.set_element_type needs a symbol", call);
        }
        scope.annotations["element_type:" + qn->str()] = dtype_name(*call.kids[2], ctx);
        ++types;
        stmts.erase(stmts.begin() + static_cast<std::ptrdiff_t>(i));
        continue;
      }
      if (is_loop(st) && !st.body.empty() && directive_of(*st.body[0]) == "set_loop_options") {
        annotate_loop(st, *st.body[0]->kids[0], ctx);
        ++loops;
        st.body.erase(st.body.begin());
        if (st.body.empty()) {
          ctx.fail(ErrorKind::DirectiveError, "loop body holds only a directive", st);
        }
      }
      if (st.kind == Kind::FunctionDef) {
        block(st.body, st);
      } else {
        block(st.body, scope);
        block(st.orelse, scope);
      }
      ++i;
    }
  }
};

}  // namespace

void pass_directives(Node& module, PassContext& ctx) {
  Visitor v{ctx, 0, 0};
  v.block(module.body, module);
  if (v.loops + v.types > 0) {
    ctx.note(std::to_string(v.loops) + " loop option(s), " + std::to_string(v.types) +
             " element type(s)");
  }
}

}  // namespace stagekit::transforms
