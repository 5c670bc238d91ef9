#include "stagekit/syntax/template.hpp"

#include <sstream>

#include "stagekit/error.hpp"
#include "stagekit/syntax/parser.hpp"
#include "stagekit/syntax/unparse.hpp"

namespace stagekit::syntax {

namespace {

std::string dedent(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  std::size_t common = std::string::npos;
  for (const auto& l : lines) {
    auto first = l.find_first_not_of(' ');
    if (first == std::string::npos) continue;
    common = std::min(common, first);
  }
  if (common == std::string::npos) common = 0;
  std::string out;
  for (const auto& l : lines) {
    if (l.find_first_not_of(' ') == std::string::npos) {
      out += "\n";
      continue;
    }
    out += l.substr(common) + "\n";
  }
  return out;
}

class Substituter {
 public:
  Substituter(const Template& t, const std::map<std::string, Binding>& b, const Node* from)
      : tmpl_(t), bindings_(b), from_(from) {}

  NodeList run(NodeList stmts) {
    if (from_) {
      for (auto& s : stmts) {
        walk(s, [&](const NodePtr& n) {
          n->origin = from_->origin;
          n->span = from_->span;
        });
      }
    }
    return block(std::move(stmts));
  }

 private:
  const Binding* lookup(const std::string& id) const {
    if (!tmpl_.placeholder_names.count(id)) return nullptr;
    auto it = bindings_.find(id);
    if (it == bindings_.end()) {
      throw Error(ErrorKind::MissingBinding, "placeholder '" + id + "' is not bound");
    }
    return &it->second;
  }

  static NodeList statements_of(const NodeList& list, const std::string& id) {
    NodeList out;
    for (const auto& n : list) {
      if (!n) continue;
      if (is_statement(n->kind)) {
        out.push_back(clone(*n));
      } else if (is_expression(n->kind)) {
        out.push_back(make_expr_stmt(clone(*n), n.get()));
      } else {
        throw Error(ErrorKind::TypeMismatch, "placeholder '" + id + "' bound to a non-statement");
      }
    }
    return out;
  }

  NodeList block(NodeList stmts) {
    NodeList out;
    for (auto& s : stmts) {
      if (s->kind == Kind::ExprStmt && s->kids[0]->kind == Kind::Name) {
        if (const Binding* b = lookup(s->kids[0]->text)) {
          const std::string& id = s->kids[0]->text;
          if (auto* list = std::get_if<NodeList>(b)) {
            for (auto& n : statements_of(*list, id)) out.push_back(std::move(n));
            continue;
          }
          if (auto* node = std::get_if<NodePtr>(b)) {
            for (auto& n : statements_of({*node}, id)) out.push_back(std::move(n));
            continue;
          }
        }
      }
      statement(*s);
      out.push_back(s);
    }
    return out;
  }

  std::string identifier(const std::string& id) {
    const Binding* b = lookup(id);
    if (!b) return id;
    if (auto* s = std::get_if<std::string>(b)) return *s;
    if (auto* n = std::get_if<NodePtr>(b); n && *n && (*n)->kind == Kind::Name) return (*n)->text;
    throw Error(ErrorKind::TypeMismatch, "placeholder '" + id + "' must be bound to an identifier");
  }

  void statement(Node& s) {
    if (s.kind == Kind::FunctionDef) {
      s.text = identifier(s.text);
      NodeList params;
      for (auto& p : s.kids) {
        const Binding* b = lookup(p->text);
        if (b) {
          if (auto* list = std::get_if<NodeList>(b)) {
            for (const auto& item : *list) {
              if (!item || (item->kind != Kind::Name && item->kind != Kind::Param)) {
                throw Error(ErrorKind::TypeMismatch,
                            "parameter placeholder '" + p->text + "' needs identifiers");
              }
              auto param = make(Kind::Param, p.get());
              param->text = item->text;
              params.push_back(param);
            }
            continue;
          }
          p->text = identifier(p->text);
        }
        params.push_back(p);
      }
      s.kids = std::move(params);
      s.body = block(std::move(s.body));
      return;
    }
    if (s.kind == Kind::For) {
      s.kids[0]->text = identifier(s.kids[0]->text);
      s.kids[1] = expr(s.kids[1]);
    } else {
      for (auto& k : s.kids) k = expr(k);
    }
    s.body = block(std::move(s.body));
    s.orelse = block(std::move(s.orelse));
  }

  NodeList expr_list(const NodeList& kids, std::size_t from) {
    NodeList out(kids.begin(), kids.begin() + static_cast<std::ptrdiff_t>(from));
    for (std::size_t i = from; i < kids.size(); ++i) {
      const auto& k = kids[i];
      if (k->kind == Kind::Name) {
        if (const Binding* b = lookup(k->text)) {
          if (auto* list = std::get_if<NodeList>(b)) {
            for (const auto& item : *list) {
              if (!item || !is_expression(item->kind)) {
                throw Error(ErrorKind::TypeMismatch,
                            "placeholder '" + k->text + "' spliced a non-expression");
              }
              out.push_back(clone(*item));
            }
            continue;
          }
        }
      }
      out.push_back(expr(k));
    }
    return out;
  }

  NodePtr expr(const NodePtr& e) {
    if (!e) return e;
    if (e->kind == Kind::Name) {
      const Binding* b = lookup(e->text);
      if (!b) return e;
      if (auto* s = std::get_if<std::string>(b)) {
        e->text = *s;
        return e;
      }
      if (auto* n = std::get_if<NodePtr>(b)) {
        if (!*n || !is_expression((*n)->kind)) {
          throw Error(ErrorKind::TypeMismatch,
                      "expression placeholder '" + e->text + "' bound to a statement");
        }
        return clone(**n);
      }
      throw Error(ErrorKind::TypeMismatch,
                  "expression placeholder '" + e->text + "' bound to a node list");
    }
    if (e->kind == Kind::Call || e->kind == Kind::ListLiteral || e->kind == Kind::Tuple) {
      e->kids = expr_list(e->kids, e->kind == Kind::Call ? 1 : 0);
      if (e->kind == Kind::Call) e->kids[0] = expr(e->kids[0]);
      return e;
    }
    if (e->kind == Kind::Attribute && lookup(e->text)) e->text = identifier(e->text);
    for (auto& k : e->kids) k = expr(k);
    return e;
  }

  const Template& tmpl_;
  const std::map<std::string, Binding>& bindings_;
  const Node* from_;
};

}  // namespace

NodeList template_replace(const Template& tmpl, const std::map<std::string, Binding>& bindings,
                          const Node* from) {
  ParseOptions opts;
  opts.allow_reserved = true;
  NodePtr mod = parse_module(dedent(tmpl.text), "<template>", opts);

  std::set<std::string> identifiers;
  walk(mod, [&](const NodePtr& n) {
    if (n->kind == Kind::Name || n->kind == Kind::Param || n->kind == Kind::FunctionDef ||
        n->kind == Kind::Attribute) {
      identifiers.insert(n->text);
    }
  });
  for (const auto& p : tmpl.placeholder_names) {
    if (!identifiers.count(p)) {
      throw Error(ErrorKind::IntegrityError, "placeholder '" + p + "' does not occur in template");
    }
  }

  NodeList result = Substituter(tmpl, bindings, from).run(std::move(mod->body));

  // Integrity: the spliced tree must survive an unparse/re-parse cycle.
  auto check = make(Kind::Module, from);
  check->body = result;
  std::string text;
  try {
    text = unparse(*check);
  } catch (const Error& e) {
    throw Error(ErrorKind::IntegrityError, std::string("result does not unparse: ") + e.what());
  }
  NodePtr reparsed;
  try {
    reparsed = parse_module(text, "<template>", opts);
  } catch (const Error& e) {
    throw Error(ErrorKind::IntegrityError, std::string("result does not re-parse: ") + e.what());
  }
  if (!tree_equal(reparsed->body, result)) {
    throw Error(ErrorKind::IntegrityError, "result changes shape when re-parsed");
  }
  return result;
}

}  // namespace stagekit::syntax
