#pragma once

#include <map>
#include <set>
#include <string>

#include "stagekit/analysis/activity.hpp"
#include "stagekit/analysis/cfg.hpp"

namespace stagekit::analysis {

struct DefSite {
  enum class Kind { Statement, Parameter, Outer };
  QualifiedName name;
  Kind kind = Kind::Statement;
  syntax::NodeId node = 0;

  friend auto operator<=>(const DefSite& a, const DefSite& b) {
    if (auto c = a.name <=> b.name; c != 0) return c;
    if (auto c = a.kind <=> b.kind; c != 0) return c;
    return a.node <=> b.node;
  }
  friend bool operator==(const DefSite&, const DefSite&) = default;
};

using DefSet = std::set<DefSite>;

// Indexed by CFG node number.
struct FlowFacts {
  std::vector<DefSet> reach_in, reach_out;
  std::vector<NameSet> live_in, live_out;
  std::vector<NameSet> defined_on_entry;
};

// Per-CFG-node transfer inputs.
std::vector<Activity> cfg_activity(const Cfg& cfg);

// Forward may-analysis plus the must-defined set. `entry_defs` are names bound
// before the body runs (parameters and enclosing-scope names).
void reaching_definitions(const Cfg& cfg, const std::vector<Activity>& act,
                          const NameSet& params, const NameSet& outer, FlowFacts& facts);
void liveness(const Cfg& cfg, const std::vector<Activity>& act, FlowFacts& facts);

// Re-applies every transfer function once; true if nothing changes.
bool is_fixpoint(const Cfg& cfg, const std::vector<Activity>& act, const NameSet& params,
                 const NameSet& outer, const FlowFacts& facts);

struct FunctionAnalysis {
  const syntax::Node* fn = nullptr;
  Cfg cfg;
  std::vector<Activity> act;
  NameSet params;
  NameSet outer;
  FlowFacts facts;
};

// All analyses for a module: one entry per FunctionDef (nested included) and
// one for the module top level.
struct ModuleAnalysis {
  ActivityInfo activity;
  std::map<syntax::NodeId, FunctionAnalysis> functions;

  const FunctionAnalysis& function_of(const syntax::Node& stmt) const;
  const NameSet& live_in(const syntax::Node& stmt) const;
  // Live after the statement completes normally.
  const NameSet& live_after(const syntax::Node& stmt) const;
  const NameSet& defined_on_entry(const syntax::Node& stmt) const;
  std::size_t reach_in_count(const syntax::Node& stmt) const;
};

ModuleAnalysis analyze(const syntax::Node& module);

// One line per statement:
// <line>:<col> kind=<k> read={...} mod={...} live_in={...} live_out={...} reach_in_count=<n>
std::string dump(const syntax::Node& module, const ModuleAnalysis& analysis);
// Edge listing: "<from> -> <to>" per line, one block per function.
std::string dump_cfg(const syntax::Node& module, const ModuleAnalysis& analysis);

}  // namespace stagekit::analysis
