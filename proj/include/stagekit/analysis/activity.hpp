#pragma once

#include <map>
#include <memory>
#include <set>

#include "stagekit/syntax/ast.hpp"
#include "stagekit/syntax/qualified_name.hpp"

namespace stagekit::analysis {

using syntax::QualifiedName;
using NameSet = std::set<QualifiedName>;

struct Activity {
  NameSet read;
  NameSet modified;

  void merge(const Activity& other);
};

struct ActivityScope {
  NameSet read;
  NameSet modified;
  NameSet params;
  const ActivityScope* parent = nullptr;
  const syntax::Node* owner = nullptr;
};

// Names rooted at the reserved namespaces `m`, `ag` and `ag__` are never
// reported: they are resolved by the runtime, not by user bindings.
bool is_reserved_root(const std::string& id);

void expression_reads(const syntax::Node& expr, NameSet& out);

// Activity of the statement's own CFG node (header only for compounds).
Activity node_activity(const syntax::Node& stmt);
// Whole statement including nested blocks; nested functions contribute only
// their name and free variables.
Activity statement_activity(const syntax::Node& stmt);
Activity block_activity(const syntax::NodeList& stmts);

struct ActivityInfo {
  std::map<syntax::NodeId, Activity> node;
  std::map<syntax::NodeId, Activity> statement;
  // Keyed by FunctionDef / Module id.
  std::map<syntax::NodeId, std::unique_ptr<ActivityScope>> scopes;
  // Statement id -> id of the function or module owning it.
  std::map<syntax::NodeId, syntax::NodeId> owner;
};

ActivityInfo activity(const syntax::Node& root);

}  // namespace stagekit::analysis
