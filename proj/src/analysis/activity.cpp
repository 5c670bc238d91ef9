#include "stagekit/analysis/activity.hpp"

#include "stagekit/error.hpp"

namespace stagekit::analysis {

using syntax::Kind;
using syntax::Node;
using syntax::NodeList;
using syntax::qualified_name_of;

void Activity::merge(const Activity& other) {
  read.insert(other.read.begin(), other.read.end());
  modified.insert(other.modified.begin(), other.modified.end());
}

bool is_reserved_root(const std::string& id) { return id == "m" || id == "ag" || id == "ag__"; }

namespace {

// A qualified name read also reads each of its prefixes.
void insert_with_prefixes(const QualifiedName& qn, NameSet& out) {
  if (is_reserved_root(qn.root())) return;
  std::optional<QualifiedName> cur = qn;
  while (cur) {
    out.insert(*cur);
    cur = cur->parent();
  }
}

void target_activity(const Node& t, Activity& a) {
  switch (t.kind) {
    case Kind::Name:
      a.modified.insert(QualifiedName::simple(t.text));
      return;
    case Kind::Tuple:
    case Kind::ListLiteral:
      for (const auto& k : t.kids) target_activity(*k, a);
      return;
    case Kind::Attribute:
      if (auto qn = qualified_name_of(t)) {
        a.modified.insert(*qn);
      } else {
        expression_reads(*t.kids[0], a.read);
      }
      return;
    case Kind::Subscript:
      if (auto qn = qualified_name_of(t)) {
        a.modified.insert(*qn);
        return;
      }
      // Non-literal key: the whole container is rewritten.
      if (auto base = qualified_name_of(*t.kids[0])) a.modified.insert(*base);
      expression_reads(*t.kids[0], a.read);
      expression_reads(*t.kids[1], a.read);
      return;
    default:
      expression_reads(t, a.read);
  }
}

NameSet function_locals(const Node& fn, const Activity& body) {
  NameSet locals = body.modified;
  for (const auto& p : fn.kids) locals.insert(QualifiedName::simple(p->text));
  return locals;
}

}  // namespace

void expression_reads(const Node& e, NameSet& out) {
  switch (e.kind) {
    case Kind::Name:
      if (!is_reserved_root(e.text)) out.insert(QualifiedName::simple(e.text));
      return;
    case Kind::Attribute:
    case Kind::Subscript:
      if (auto qn = qualified_name_of(e)) {
        insert_with_prefixes(*qn, out);
        return;
      }
      break;
    default:
      break;
  }
  for (const auto& k : e.kids) {
    if (k) expression_reads(*k, out);
  }
}

Activity node_activity(const Node& s) {
  Activity a;
  switch (s.kind) {
    case Kind::Assign:
      target_activity(*s.kids[0], a);
      expression_reads(*s.kids[1], a.read);
      break;
    case Kind::AugAssign:
      target_activity(*s.kids[0], a);
      expression_reads(*s.kids[0], a.read);
      expression_reads(*s.kids[1], a.read);
      break;
    case Kind::For:
      target_activity(*s.kids[0], a);
      expression_reads(*s.kids[1], a.read);
      break;
    case Kind::FunctionDef: {
      a.modified.insert(QualifiedName::simple(s.text));
      Activity body = block_activity(s.body);
      NameSet locals = function_locals(s, body);
      for (const auto& r : body.read) {
        if (!locals.count(QualifiedName::simple(r.root()))) a.read.insert(r);
      }
      break;
    }
    case Kind::Break:
    case Kind::Continue:
      break;
    default:
      for (const auto& k : s.kids) {
        if (k) expression_reads(*k, a.read);
      }
  }
  return a;
}

Activity statement_activity(const Node& s) {
  Activity a = node_activity(s);
  if (s.kind == Kind::FunctionDef) return a;
  a.merge(block_activity(s.body));
  a.merge(block_activity(s.orelse));
  return a;
}

Activity block_activity(const NodeList& stmts) {
  Activity a;
  for (const auto& s : stmts) a.merge(statement_activity(*s));
  return a;
}

namespace {

void annotate(const NodeList& stmts, const ActivityScope* scope, syntax::NodeId owner,
              ActivityInfo& info);

void annotate_scope(const Node& fn, const ActivityScope* parent, ActivityInfo& info) {
  auto scope = std::make_unique<ActivityScope>();
  Activity body = block_activity(fn.body);
  scope->read = body.read;
  scope->modified = body.modified;
  for (const auto& p : fn.kids) {
    if (p->kind == Kind::Param) scope->params.insert(QualifiedName::simple(p->text));
  }
  scope->parent = parent;
  scope->owner = &fn;
  const ActivityScope* raw = scope.get();
  info.scopes[fn.id] = std::move(scope);
  annotate(fn.body, raw, fn.id, info);
}

void annotate(const NodeList& stmts, const ActivityScope* scope, syntax::NodeId owner,
              ActivityInfo& info) {
  for (const auto& s : stmts) {
    info.node[s->id] = node_activity(*s);
    info.statement[s->id] = statement_activity(*s);
    info.owner[s->id] = owner;
    if (s->kind == Kind::FunctionDef) {
      annotate_scope(*s, scope, info);
    } else {
      annotate(s->body, scope, owner, info);
      annotate(s->orelse, scope, owner, info);
    }
  }
}

}  // namespace

ActivityInfo activity(const Node& root) {
  ActivityInfo info;
  if (root.kind == Kind::Module || root.kind == Kind::FunctionDef) {
    annotate_scope(root, nullptr, info);
  } else {
    throw Error(ErrorKind::InternalError, "activity expects a module or function");
  }
  return info;
}

}  // namespace stagekit::analysis
