#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

#include "stagekit/syntax/ast.hpp"

namespace stagekit::syntax {

// A symbol such as `a`, `a.b` or `a[0]`. Components after the first are
// attribute names or literal subscript keys (stored as "[<key>]").
class QualifiedName {
 public:
  explicit QualifiedName(std::vector<std::string> components);
  static QualifiedName simple(std::string id) { return QualifiedName({std::move(id)}); }

  const std::vector<std::string>& components() const { return components_; }
  const std::string& root() const { return components_.front(); }
  bool is_simple() const { return components_.size() == 1; }
  std::string str() const;

  // True if this is `other` or a field/item of it (`a.b` is within `a`).
  bool within(const QualifiedName& other) const;
  std::optional<QualifiedName> parent() const;

  friend auto operator<=>(const QualifiedName& a, const QualifiedName& b) {
    return a.str() <=> b.str();
  }
  friend bool operator==(const QualifiedName& a, const QualifiedName& b) {
    return a.components_ == b.components_;
  }

 private:
  std::vector<std::string> components_;
};

// Name -> [id]; Attribute chains and literal-key subscripts extend the base;
// anything else has no qualified name.
std::optional<QualifiedName> qualified_name_of(const Node& expr);

// Builds the expression node for a qualified name.
NodePtr qualified_name_expr(const QualifiedName& qn, const Node* from);

}  // namespace stagekit::syntax
