#include "stagekit/syntax/qualified_name.hpp"

#include "stagekit/error.hpp"
#include "stagekit/syntax/unparse.hpp"

namespace stagekit::syntax {

QualifiedName::QualifiedName(std::vector<std::string> components)
    : components_(std::move(components)) {
  if (components_.empty() || components_.front().empty()) {
    throw Error(ErrorKind::InternalError, "qualified name needs a root identifier");
  }
}

std::string QualifiedName::str() const {
  std::string s = components_.front();
  for (std::size_t i = 1; i < components_.size(); ++i) {
    if (components_[i].front() == '[') {
      s += components_[i];
    } else {
      s += "." + components_[i];
    }
  }
  return s;
}

bool QualifiedName::within(const QualifiedName& other) const {
  if (other.components_.size() > components_.size()) return false;
  for (std::size_t i = 0; i < other.components_.size(); ++i) {
    if (components_[i] != other.components_[i]) return false;
  }
  return true;
}

std::optional<QualifiedName> QualifiedName::parent() const {
  if (components_.size() == 1) return std::nullopt;
  return QualifiedName(std::vector<std::string>(components_.begin(), components_.end() - 1));
}

std::optional<QualifiedName> qualified_name_of(const Node& expr) {
  switch (expr.kind) {
    case Kind::Name:
      return QualifiedName::simple(expr.text);
    case Kind::Attribute: {
      auto base = qualified_name_of(*expr.kids.at(0));
      if (!base) return std::nullopt;
      auto parts = base->components();
      parts.push_back(expr.text);
      return QualifiedName(std::move(parts));
    }
    case Kind::Subscript: {
      const Node& key = *expr.kids.at(1);
      std::string k;
      if (key.kind == Kind::IntLit) {
        k = "[" + std::to_string(key.ival) + "]";
      } else if (key.kind == Kind::StrLit) {
        k = "[\"" + key.text + "\"]";
      } else {
        return std::nullopt;
      }
      auto base = qualified_name_of(*expr.kids.at(0));
      if (!base) return std::nullopt;
      auto parts = base->components();
      parts.push_back(k);
      return QualifiedName(std::move(parts));
    }
    default:
      return std::nullopt;
  }
}

NodePtr qualified_name_expr(const QualifiedName& qn, const Node* from) {
  const auto& parts = qn.components();
  NodePtr e = make_name(parts.front(), from);
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const std::string& c = parts[i];
    if (c.front() == '[') {
      auto sub = make(Kind::Subscript, from);
      std::string key = c.substr(1, c.size() - 2);
      NodePtr k = key.front() == '"' ? make_str(key.substr(1, key.size() - 2), from)
                                     : make_int(std::stoll(key), from);
      sub->kids = {e, k};
      e = sub;
    } else {
      e = make_attr(e, c, from);
    }
  }
  return e;
}

}  // namespace stagekit::syntax
