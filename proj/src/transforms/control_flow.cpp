// if / while / for become thunk definitions plus a dispatch call.

#include <algorithm>
#include <set>

#include "pass.hpp"
#include "stagekit/analysis/activity.hpp"

namespace stagekit::transforms {

namespace {

using analysis::NameSet;
using analysis::QualifiedName;
using syntax::make_assign;
using syntax::make_name;

NodePtr names_tuple(const std::vector<std::string>& names, const Node* from) {
  NodeList items;
  for (const auto& n : names) items.push_back(make_name(n, from));
  return syntax::make_tuple(std::move(items), from);
}

NodePtr strings_tuple(const std::vector<std::string>& names, const Node* from) {
  NodeList items;
  for (const auto& n : names) items.push_back(syntax::make_str(n, from));
  return syntax::make_tuple(std::move(items), from);
}

// One value is returned bare; several (or none) as a tuple.
NodePtr packed(const std::vector<std::string>& names, const Node* from) {
  return names.size() == 1 ? make_name(names[0], from) : names_tuple(names, from);
}

NodePtr bind_outputs(const std::vector<std::string>& names, NodePtr call, const Node* from) {
  if (names.empty()) return syntax::make_expr_stmt(std::move(call), from);
  return make_assign(packed(names, from), std::move(call), from);
}

std::vector<std::string> intersect(const std::vector<std::string>& names, const NameSet& with) {
  std::vector<std::string> out;
  for (const auto& n : names) {
    if (with.count(QualifiedName::simple(n))) out.push_back(n);
  }
  return out;
}

struct Converter {
  PassContext& ctx;
  const analysis::ModuleAnalysis& an;
  int ifs = 0, whiles = 0, fors = 0;
  int depth = 0;  // enclosing compound statements within the current function

  // Undefined sentinels for outputs with no definition reaching `st`. A
  // symbol bound on only some paths keeps its value; on the others an earlier
  // conversion has already bound it to a sentinel.
  void undefined_inits(const std::vector<std::string>& names, const Node& st, NodeList& out) {
    const NameSet& defined = an.defined_on_entry(st);
    const auto& fa = an.function_of(st);
    const auto& reach = fa.facts.reach_in[static_cast<std::size_t>(fa.cfg.node_of(st))];
    // Definitions inside a loop reach its header only through the back edge.
    std::set<syntax::NodeId> inside;
    if (is_loop(st)) {
      for (const auto& b : st.body) syntax::walk(b, [&](const NodePtr& x) { inside.insert(x->id); });
    }
    for (const auto& n : names) {
      if (defined.count(QualifiedName::simple(n))) continue;
      const bool reached = std::any_of(reach.begin(), reach.end(), [&](const auto& d) {
        return d.name == QualifiedName::simple(n) && !inside.count(d.node);
      });
      if (reached) continue;
      out.push_back(make_assign(make_name(n, &st),
                                intrinsic_call("Undefined", {syntax::make_str(n, &st)}, &st),
                                &st));
    }
  }

  // Fields and items cannot travel through a thunk's return value.
  void reject_qualified(const NameSet& modified, const NameSet& live, const Node& st) {
    for (const auto& qn : modified) {
      if (!qn.is_simple() && live.count(qn) && !analysis::is_reserved_root(qn.root())) {
        ctx.fail(ErrorKind::ConversionError,
                 "'" + qn.str() + "' is modified inside control flow but is not a plain name", st);
      }
    }
  }

  NodePtr options(const Node& loop) {
    auto it = loop.annotations.find("max_iterations");
    if (it == loop.annotations.end()) return syntax::make_none(&loop);
    return intrinsic_call("loop_options", {syntax::make_int(std::stoll(it->second), &loop)}, &loop);
  }

  void convert_if(const NodePtr& st, NodeList& out) {
    const Node* at = st.get();
    NameSet modified = analysis::block_activity(st->body).modified;
    modified.merge(analysis::block_activity(st->orelse).modified);
    const NameSet& live = an.live_after(*st);
    reject_qualified(modified, live, *st);
    const auto outs = intersect(simple_names(modified), live);
    undefined_inits(outs, *st, out);
    ++depth;
    block(st->body);
    block(st->orelse);
    --depth;

    const int n = ctx.next();
    const std::string t = "ag__if_true_" + std::to_string(n);
    const std::string f = "ag__if_false_" + std::to_string(n);
    NodeList then_body = st->body;
    then_body.push_back(syntax::make_return(packed(outs, at), at));
    NodeList else_body = st->orelse;
    else_body.push_back(syntax::make_return(packed(outs, at), at));
    out.push_back(syntax::make_function(t, {}, std::move(then_body), at));
    out.push_back(syntax::make_function(f, {}, std::move(else_body), at));
    auto call = intrinsic_call(
        "if_stmt", {st->kids[0], make_name(t, at), make_name(f, at), strings_tuple(outs, at)}, at);
    out.push_back(bind_outputs(outs, std::move(call), at));
    ++ifs;
  }

  void convert_while(const NodePtr& st, NodeList& out) {
    const Node* at = st.get();
    const NameSet modified = analysis::block_activity(st->body).modified;
    reject_qualified(modified, an.live_in(*st), *st);
    const auto state = intersect(simple_names(modified), an.live_in(*st));
    NameSet test_reads;
    analysis::expression_reads(*st->kids[0], test_reads);
    std::vector<std::string> captured;
    for (const auto& n : simple_names(test_reads)) {
      if (std::find(state.begin(), state.end(), n) == state.end()) captured.push_back(n);
    }
    undefined_inits(state, *st, out);
    ++depth;
    block(st->body);
    --depth;

    const int n = ctx.next();
    const std::string test = "ag__loop_test_" + std::to_string(n);
    const std::string body = "ag__loop_body_" + std::to_string(n);
    out.push_back(
        syntax::make_function(test, state, {syntax::make_return(st->kids[0], at)}, at));
    NodeList body_stmts = st->body;
    body_stmts.push_back(syntax::make_return(packed(state, at), at));
    out.push_back(syntax::make_function(body, state, std::move(body_stmts), at));
    auto call = intrinsic_call("while_stmt",
                               {make_name(test, at), make_name(body, at), names_tuple(state, at),
                                strings_tuple(state, at), options(*st), names_tuple(captured, at)},
                               at);
    out.push_back(bind_outputs(state, std::move(call), at));
    ++whiles;
  }

  void convert_for(const NodePtr& st, NodeList& out) {
    const Node* at = st.get();
    const NameSet modified = analysis::block_activity(st->body).modified;
    reject_qualified(modified, an.live_in(*st), *st);
    NameSet target_names;
    analysis::expression_reads(*st->kids[0], target_names);
    std::vector<std::string> state;
    for (const auto& n : intersect(simple_names(modified), an.live_in(*st))) {
      if (!target_names.count(QualifiedName::simple(n))) state.push_back(n);
    }
    undefined_inits(state, *st, out);
    ++depth;
    block(st->body);
    --depth;

    const int n = ctx.next();
    const std::string body = "ag__loop_body_" + std::to_string(n);
    NodeList body_stmts;
    std::string item;
    if (st->kids[0]->kind == Kind::Name) {
      item = st->kids[0]->text;
    } else {
      item = "ag__item_" + std::to_string(n);
      body_stmts.push_back(make_assign(st->kids[0], make_name(item, at), at));
    }
    body_stmts.insert(body_stmts.end(), st->body.begin(), st->body.end());
    body_stmts.push_back(syntax::make_return(packed(state, at), at));
    std::vector<std::string> params = {item};
    params.insert(params.end(), state.begin(), state.end());
    out.push_back(syntax::make_function(body, params, std::move(body_stmts), at));
    auto call = intrinsic_call("for_stmt",
                               {st->kids[1], make_name(body, at), names_tuple(state, at),
                                strings_tuple(state, at), options(*st)},
                               at);
    out.push_back(bind_outputs(state, std::move(call), at));
    ++fors;
  }

  // Post-order: nested statements are converted before their parent, but
  // facts are looked up on the parent's original node.
  void block(NodeList& stmts) {
    NodeList out;
    for (const auto& st : stmts) {
      switch (st->kind) {
        case Kind::If:
          convert_if(st, out);
          break;
        case Kind::While:
          convert_while(st, out);
          break;
        case Kind::For:
          convert_for(st, out);
          break;
        case Kind::Break:
        case Kind::Continue:
          ctx.fail(ErrorKind::InternalError, "jump statement survived lowering", *st);
        case Kind::Return:
          if (depth > 0) {
            ctx.fail(ErrorKind::ConversionError,
                     "return inside control flow; the return pass must run first", *st);
          }
          out.push_back(st);
          break;
        case Kind::FunctionDef: {
          const int saved = depth;
          depth = 0;
          block(st->body);
          depth = saved;
          out.push_back(st);
          break;
        }
        default:
          out.push_back(st);
      }
    }
    stmts = std::move(out);
  }
};

}  // namespace

void pass_control_flow(Node& module, PassContext& ctx) {
  Converter c{ctx, ctx.facts(), 0, 0, 0, 0};
  c.block(module.body);
  if (c.ifs + c.whiles + c.fors) {
    ctx.note("converted " + std::to_string(c.ifs) + " if, " + std::to_string(c.whiles) +
             " while, " + std::to_string(c.fors) + " for");
  }
}

}  // namespace stagekit::transforms
