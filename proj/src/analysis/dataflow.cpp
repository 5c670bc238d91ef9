#include "stagekit/analysis/dataflow.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

#include "stagekit/error.hpp"

namespace stagekit::analysis {

using syntax::Kind;
using syntax::Node;
using syntax::NodeList;

std::vector<Activity> cfg_activity(const Cfg& cfg) {
  std::vector<Activity> act(cfg.nodes.size());
  for (std::size_t i = 2; i < cfg.nodes.size(); ++i) act[i] = node_activity(*cfg.nodes[i].stmt);
  return act;
}

namespace {

DefSet entry_defs(const NameSet& params, const NameSet& outer) {
  DefSet out;
  for (const auto& p : params) out.insert({p, DefSite::Kind::Parameter, 0});
  for (const auto& o : outer) {
    if (!params.count(o)) out.insert({o, DefSite::Kind::Outer, 0});
  }
  return out;
}

DefSet reach_transfer(const Cfg& cfg, const Activity& a, int n, const DefSet& in) {
  DefSet out;
  for (const auto& d : in) {
    bool killed = std::any_of(a.modified.begin(), a.modified.end(),
                              [&](const QualifiedName& m) { return d.name.within(m); });
    if (!killed) out.insert(d);
  }
  if (n >= 2) {
    for (const auto& m : a.modified) {
      out.insert({m, DefSite::Kind::Statement, cfg.nodes[static_cast<std::size_t>(n)].stmt->id});
    }
  }
  return out;
}

NameSet live_transfer(const Activity& a, const NameSet& out) {
  NameSet in = a.read;
  for (const auto& n : out) {
    if (!a.modified.count(n)) in.insert(n);
  }
  return in;
}

DefSet reach_meet(const Cfg& cfg, const FlowFacts& f, int n) {
  DefSet in;
  for (int p : cfg.nodes[static_cast<std::size_t>(n)].pred) {
    const auto& o = f.reach_out[static_cast<std::size_t>(p)];
    in.insert(o.begin(), o.end());
  }
  return in;
}

NameSet live_meet(const Cfg& cfg, const FlowFacts& f, int n) {
  NameSet out;
  for (int s : cfg.nodes[static_cast<std::size_t>(n)].succ) {
    const auto& i = f.live_in[static_cast<std::size_t>(s)];
    out.insert(i.begin(), i.end());
  }
  return out;
}

}  // namespace

void reaching_definitions(const Cfg& cfg, const std::vector<Activity>& act,
                          const NameSet& params, const NameSet& outer, FlowFacts& facts) {
  const std::size_t n = cfg.nodes.size();
  facts.reach_in.assign(n, {});
  facts.reach_out.assign(n, {});
  facts.reach_out[Cfg::kEntry] = entry_defs(params, outer);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 1; i < n; ++i) {
      int node = static_cast<int>(i);
      DefSet in = reach_meet(cfg, facts, node);
      DefSet out = reach_transfer(cfg, act[i], node, in);
      if (in != facts.reach_in[i] || out != facts.reach_out[i]) {
        facts.reach_in[i] = std::move(in);
        facts.reach_out[i] = std::move(out);
        changed = true;
      }
    }
  }

  // Must-defined names: greatest fixpoint of intersection over predecessors.
  std::vector<std::optional<NameSet>> defined_out(n);
  NameSet at_entry = params;
  at_entry.insert(outer.begin(), outer.end());
  defined_out[Cfg::kEntry] = at_entry;
  facts.defined_on_entry.assign(n, {});
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 1; i < n; ++i) {
      std::optional<NameSet> in;
      for (int p : cfg.nodes[i].pred) {
        const auto& o = defined_out[static_cast<std::size_t>(p)];
        if (!o) continue;
        if (!in) {
          in = *o;
        } else {
          NameSet both;
          std::set_intersection(in->begin(), in->end(), o->begin(), o->end(),
                                std::inserter(both, both.end()));
          in = std::move(both);
        }
      }
      if (!in) continue;
      NameSet out = *in;
      out.insert(act[i].modified.begin(), act[i].modified.end());
      if (!defined_out[i] || *defined_out[i] != out || facts.defined_on_entry[i] != *in) {
        facts.defined_on_entry[i] = std::move(*in);
        defined_out[i] = std::move(out);
        changed = true;
      }
    }
  }
  facts.defined_on_entry[Cfg::kEntry] = at_entry;
}

void liveness(const Cfg& cfg, const std::vector<Activity>& act, FlowFacts& facts) {
  const std::size_t n = cfg.nodes.size();
  facts.live_in.assign(n, {});
  facts.live_out.assign(n, {});
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t k = n; k-- > 0;) {
      if (k == Cfg::kExit) continue;
      NameSet out = live_meet(cfg, facts, static_cast<int>(k));
      NameSet in = k == Cfg::kEntry ? out : live_transfer(act[k], out);
      if (out != facts.live_out[k] || in != facts.live_in[k]) {
        facts.live_out[k] = std::move(out);
        facts.live_in[k] = std::move(in);
        changed = true;
      }
    }
  }
}

bool is_fixpoint(const Cfg& cfg, const std::vector<Activity>& act, const NameSet& params,
                 const NameSet& outer, const FlowFacts& facts) {
  const std::size_t n = cfg.nodes.size();
  if (facts.reach_out[Cfg::kEntry] != entry_defs(params, outer)) return false;
  for (std::size_t i = 1; i < n; ++i) {
    int node = static_cast<int>(i);
    DefSet in = reach_meet(cfg, facts, node);
    if (in != facts.reach_in[i]) return false;
    if (reach_transfer(cfg, act[i], node, in) != facts.reach_out[i]) return false;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (k == Cfg::kExit) continue;
    NameSet out = live_meet(cfg, facts, static_cast<int>(k));
    if (out != facts.live_out[k]) return false;
    NameSet in = k == Cfg::kEntry ? out : live_transfer(act[k], out);
    if (in != facts.live_in[k]) return false;
  }
  return true;
}

namespace {

void analyze_function(const Node& fn, const NameSet& outer, ModuleAnalysis& out) {
  FunctionAnalysis fa;
  fa.fn = &fn;
  fa.cfg = build_cfg(fn);
  fa.act = cfg_activity(fa.cfg);
  if (fn.kind == Kind::FunctionDef) {
    for (const auto& p : fn.kids) fa.params.insert(QualifiedName::simple(p->text));
  }
  fa.outer = outer;
  reaching_definitions(fa.cfg, fa.act, fa.params, fa.outer, fa.facts);
  liveness(fa.cfg, fa.act, fa.facts);

  // Names visible to nested functions: everything bound here plus outer.
  NameSet inner_outer = outer;
  inner_outer.insert(fa.params.begin(), fa.params.end());
  Activity body = block_activity(fn.body);
  inner_outer.insert(body.modified.begin(), body.modified.end());
  out.functions.emplace(fn.id, std::move(fa));

  std::vector<const Node*> nested;
  auto collect = [&](auto&& self, const NodeList& stmts) -> void {
    for (const auto& s : stmts) {
      if (s->kind == Kind::FunctionDef) {
        nested.push_back(s.get());
      } else {
        self(self, s->body);
        self(self, s->orelse);
      }
    }
  };
  collect(collect, fn.body);
  for (const Node* f : nested) analyze_function(*f, inner_outer, out);
}

const NameSet kEmpty;

}  // namespace

ModuleAnalysis analyze(const Node& module) {
  ModuleAnalysis out;
  out.activity = activity(module);
  analyze_function(module, {}, out);
  return out;
}

const FunctionAnalysis& ModuleAnalysis::function_of(const Node& stmt) const {
  auto it = activity.owner.find(stmt.id);
  if (it == activity.owner.end()) {
    throw Error(ErrorKind::InternalError, "statement has no analysis facts", stmt.span);
  }
  return functions.at(it->second);
}

const NameSet& ModuleAnalysis::live_in(const Node& stmt) const {
  const auto& fa = function_of(stmt);
  return fa.facts.live_in[static_cast<std::size_t>(fa.cfg.node_of(stmt))];
}

const NameSet& ModuleAnalysis::live_after(const Node& stmt) const {
  const auto& fa = function_of(stmt);
  auto it = fa.cfg.follow.find(stmt.id);
  if (it == fa.cfg.follow.end() || it->second < 0) return kEmpty;
  return fa.facts.live_in[static_cast<std::size_t>(it->second)];
}

const NameSet& ModuleAnalysis::defined_on_entry(const Node& stmt) const {
  const auto& fa = function_of(stmt);
  return fa.facts.defined_on_entry[static_cast<std::size_t>(fa.cfg.node_of(stmt))];
}

std::size_t ModuleAnalysis::reach_in_count(const Node& stmt) const {
  const auto& fa = function_of(stmt);
  return fa.facts.reach_in[static_cast<std::size_t>(fa.cfg.node_of(stmt))].size();
}

namespace {

std::string render(const NameSet& names) {
  std::string s = "{";
  bool first = true;
  for (const auto& n : names) {
    if (!first) s += ", ";
    s += n.str();
    first = false;
  }
  return s + "}";
}

bool is_compound(const Node& s) {
  return s.kind == Kind::If || s.kind == Kind::While || s.kind == Kind::For;
}

void dump_block(const NodeList& stmts, const ModuleAnalysis& a, std::ostringstream& out) {
  for (const auto& s : stmts) {
    const auto& fa = a.function_of(*s);
    auto idx = static_cast<std::size_t>(fa.cfg.node_of(*s));
    const Activity& act = fa.act[idx];
    const NameSet& live_out = is_compound(*s) ? a.live_after(*s) : fa.facts.live_out[idx];
    out << s->span.start_line << ":" << s->span.start_col << " kind=" << kind_name(s->kind)
        << " read=" << render(act.read) << " mod=" << render(act.modified)
        << " live_in=" << render(fa.facts.live_in[idx]) << " live_out=" << render(live_out)
        << " reach_in_count=" << fa.facts.reach_in[idx].size() << "\n";
    dump_block(s->body, a, out);
    dump_block(s->orelse, a, out);
  }
}

}  // namespace

std::string dump(const Node& module, const ModuleAnalysis& analysis) {
  std::ostringstream out;
  dump_block(module.body, analysis, out);
  return out.str();
}

std::string dump_cfg(const Node& module, const ModuleAnalysis& analysis) {
  std::ostringstream out;
  std::vector<const FunctionAnalysis*> order;
  order.push_back(&analysis.functions.at(module.id));
  walk(std::const_pointer_cast<Node>(std::shared_ptr<const Node>(&module, [](const Node*) {})),
       [&](const syntax::NodePtr& n) {
         if (n->kind == Kind::FunctionDef) order.push_back(&analysis.functions.at(n->id));
       });
  for (const auto* fa : order) {
    const auto& cfg = fa->cfg;
    out << "cfg " << (fa->fn->kind == Kind::Module ? std::string("<module>") : fa->fn->text)
        << "\n";
    for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
      for (int s : cfg.nodes[i].succ) {
        out << "  " << cfg.label(static_cast<int>(i)) << " -> " << cfg.label(s) << "\n";
      }
      if (cfg.nodes[i].dead) out << "  " << cfg.label(static_cast<int>(i)) << " dead\n";
    }
  }
  return out.str();
}

}  // namespace stagekit::analysis
