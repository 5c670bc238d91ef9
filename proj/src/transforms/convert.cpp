// Pass driver and helpers shared by the passes.

#include <algorithm>
#include <cctype>

#include "pass.hpp"
#include "stagekit/syntax/source_map.hpp"

namespace stagekit::transforms {

namespace {

struct PassEntry {
  const char* name;
  PassFn fn;
};

constexpr PassEntry kPasses[] = {
    {"directives", pass_directives}, {"break", pass_break},
    {"continue", pass_continue},     {"return", pass_return},
    {"assert", pass_assert},         {"lists", pass_lists},
    {"slices", pass_slices},         {"calls", pass_calls},
    {"control_flow", pass_control_flow}, {"ternary", pass_ternary},
    {"logical", pass_logical},       {"wrappers", pass_wrappers},
};

PassFn find_pass(const std::string& name) {
  for (const auto& p : kPasses) {
    if (name == p.name) return p.fn;
  }
  return nullptr;
}

// Generated names end in _<n>; new ones must not collide with those.
int first_free_counter(const NodePtr& module) {
  int top = 0;
  auto bump = [&](const std::string& s) {
    if (!is_generated(s)) return;
    const auto us = s.rfind('_');
    if (us + 1 == s.size() || us < 4) return;
    int n = 0;
    for (std::size_t k = us + 1; k < s.size(); ++k) {
      if (!std::isdigit(static_cast<unsigned char>(s[k]))) return;
      n = n * 10 + (s[k] - '0');
      if (n > 100000000) return;
    }
    top = std::max(top, n);
  };
  syntax::walk(module, [&](const NodePtr& n) {
    if (n->kind == Kind::Name || n->kind == Kind::FunctionDef || n->kind == Kind::Param) {
      bump(n->text);
    }
  });
  return top + 1;
}

}  // namespace

const std::vector<std::string>& default_passes() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& p : kPasses) v.emplace_back(p.name);
    return v;
  }();
  return names;
}

void check_pass_name(const std::string& name) {
  if (!find_pass(name)) throw Error(ErrorKind::UsageError, "unknown pass '" + name + "'");
}

void PassContext::fail(ErrorKind kind, const std::string& message, const Node& at) const {
  const auto& span = syntax::has_origin(at) ? at.origin.span : at.span;
  throw Error(kind, message, span.valid() ? std::optional(span) : std::nullopt, pass);
}

TransformResult convert(const Node& module, const PassConfig& config) {
  TransformResult result;
  result.module = syntax::clone(module);
  PassContext ctx{config, {}, 1, {}, result.module.get(), std::nullopt};
  ctx.counter = first_free_counter(result.module);
  for (const auto& name : config.passes) {
    PassFn fn = find_pass(name);
    if (!fn) throw Error(ErrorKind::UsageError, "unknown pass '" + name + "'");
    ctx.pass = name;
    try {
      ctx.cached.reset();
      fn(*result.module, ctx);
    } catch (Error& e) {
      if (e.pass().empty()) e.with_pass(name);
      throw;
    }
  }
  result.report = std::move(ctx.notes);
  syntax::walk(result.module, [&](const NodePtr& n) { result.source_map[n->id] = n->origin; });
  return result;
}

// ------------------------------------------------------------- utilities

void for_each_block(Node& root, const std::function<void(NodeList&)>& f) {
  auto visit = [&](NodeList& block, auto& self) -> void {
    for (auto& st : block) {
      if (!st) continue;
      self(st->body, self);
      self(st->orelse, self);
    }
    f(block);
  };
  visit(root.body, visit);
}

void rewrite_expr(NodePtr& expr, const std::function<void(NodePtr&)>& f) {
  if (!expr) return;
  for (auto& k : expr->kids) rewrite_expr(k, f);
  f(expr);
}

void rewrite_exprs(Node& stmt, const std::function<void(NodePtr&)>& f) {
  if (stmt.kind == Kind::FunctionDef) return;
  for (auto& k : stmt.kids) rewrite_expr(k, f);
}

bool is_loop(const Node& n) { return n.kind == Kind::While || n.kind == Kind::For; }

bool contains_own(const Node& stmt, Kind kind) {
  if (stmt.kind == kind) return true;
  if (stmt.kind == Kind::FunctionDef || is_loop(stmt)) return false;
  return contains_own(stmt.body, kind) || contains_own(stmt.orelse, kind);
}

bool contains_own(const NodeList& stmts, Kind kind) {
  return std::any_of(stmts.begin(), stmts.end(),
                     [&](const NodePtr& s) { return contains_own(*s, kind); });
}

NodePtr intrinsic_call(std::string_view fn, NodeList args, const Node* from) {
  return syntax::make_call(syntax::make_intrinsic(fn, from), std::move(args), from);
}

bool is_generated(const std::string& name) { return name.rfind("ag__", 0) == 0; }

std::vector<std::string> simple_names(const analysis::NameSet& names) {
  std::vector<std::string> out;
  for (const auto& qn : names) {
    if (qn.is_simple() && !analysis::is_reserved_root(qn.root())) out.push_back(qn.root());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace stagekit::transforms
