#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance runner.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "stagekit/analysis/dataflow.hpp"

namespace oracle {

using stagekit::analysis::Activity;
using stagekit::analysis::Cfg;
using stagekit::analysis::DefSet;
using stagekit::analysis::DefSite;
using stagekit::analysis::NameSet;

// Random loop-free function over a, b, c, d with nested if/else and returns
// only at the end of a block. At most `max_stmts` statements.
inline std::string random_acyclic_function(std::mt19937_64& rng, int max_stmts = 9) {
  const char* vars[] = {"a", "b", "c", "d"};
  auto var = [&] { return std::string(vars[rng() % 4]); };
  int budget = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_stmts));
  std::string out = "def f(a, b):\n";
  std::function<void(int, int)> block = [&](int indent, int depth) {
    std::string pad(static_cast<std::size_t>(indent), ' ');
    int n = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < n && budget > 0; ++i) {
      --budget;
      int pick = static_cast<int>(rng() % 10);
      if (pick < 3 && depth < 3 && budget > 0) {
        out += pad + "if " + var() + " > " + var() + ":\n";
        block(indent + 4, depth + 1);
        if (rng() % 2 && budget > 0) {
          out += pad + "else:\n";
          block(indent + 4, depth + 1);
        }
      } else if (pick == 3 && i == n - 1 && depth > 0) {
        out += pad + "return " + var() + "\n";
        return;
      } else if (pick == 4) {
        out += pad + var() + " += " + var() + "\n";
      } else if (pick == 5) {
        out += pad + "print(" + var() + ")\n";
      } else {
        out += pad + var() + " = " + var() + " + " + var() + "\n";
      }
    }
    if (out.back() == ':' || out.ends_with(":\n")) out += pad + var() + " = 1\n";
  };
  block(4, 0);
  out += "    return " + var() + "\n";
  return out;
}

struct BruteFlow {
  std::vector<DefSet> reach_in;
  std::vector<NameSet> live_in, live_out;
};

// Enumerates every path of an acyclic CFG explicitly.
inline BruteFlow brute_force(const Cfg& cfg, const std::vector<Activity>& act,
                             const NameSet& params) {
  const std::size_t n = cfg.nodes.size();
  BruteFlow out;
  out.reach_in.assign(n, {});
  out.live_in.assign(n, {});
  out.live_out.assign(n, {});

  std::vector<std::vector<int>> paths;
  std::vector<int> cur;
  std::function<void(int)> extend = [&](int v) {
    cur.push_back(v);
    paths.push_back(cur);
    for (int s : cfg.nodes[static_cast<std::size_t>(v)].succ) extend(s);
    cur.pop_back();
  };
  for (std::size_t v = 0; v < n; ++v) extend(static_cast<int>(v));

  auto kills = [&](int v, const stagekit::analysis::QualifiedName& name) {
    for (const auto& m : act[static_cast<std::size_t>(v)].modified) {
      if (name.within(m)) return true;
    }
    return false;
  };

  for (const auto& p : paths) {
    const int start = p.front();
    // Reaching definitions: defs generated at the path's first node.
    std::vector<DefSite> defs;
    if (start == Cfg::kEntry) {
      for (const auto& q : params) defs.push_back({q, DefSite::Kind::Parameter, 0});
    } else if (start != Cfg::kExit) {
      for (const auto& m : act[static_cast<std::size_t>(start)].modified) {
        defs.push_back({m, DefSite::Kind::Statement,
                        cfg.nodes[static_cast<std::size_t>(start)].stmt->id});
      }
    }
    for (const auto& d : defs) {
      bool alive = true;
      for (std::size_t i = 1; i < p.size() && alive; ++i) {
        if (i + 1 == p.size()) out.reach_in[static_cast<std::size_t>(p[i])].insert(d);
        if (kills(p[i], d.name)) alive = false;
      }
    }
    // Liveness: a read at the last node, no intervening write.
    const int last = p.back();
    if (last == Cfg::kEntry || last == Cfg::kExit) continue;
    for (const auto& r : act[static_cast<std::size_t>(last)].read) {
      bool clear = true;
      for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        if (act[static_cast<std::size_t>(p[i])].modified.count(r)) {
          clear = false;
          break;
        }
      }
      if (!clear) continue;
      out.live_in[static_cast<std::size_t>(start)].insert(r);
    }
  }
  // live_out(v) = union of live_in over successors, each computed by paths.
  for (std::size_t v = 0; v < n; ++v) {
    for (int s : cfg.nodes[v].succ) {
      const auto& li = out.live_in[static_cast<std::size_t>(s)];
      out.live_out[v].insert(li.begin(), li.end());
    }
  }
  // Entry performs no reads or writes.
  out.live_in[Cfg::kEntry] = out.live_out[Cfg::kEntry];
  return out;
}

}  // namespace oracle
