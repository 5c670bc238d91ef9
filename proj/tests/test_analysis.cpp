#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stagekit/analysis/dataflow.hpp"
#include "stagekit/syntax/parser.hpp"

using namespace stagekit;
using namespace stagekit::analysis;
using syntax::Kind;
using syntax::Node;
using syntax::NodePtr;

namespace {

NodePtr parse(const std::string& s) { return syntax::parse_module(s, "t.msl"); }

NameSet names(std::initializer_list<const char*> ids) {
  NameSet out;
  for (const char* id : ids) {
    std::vector<std::string> parts;
    std::string cur;
    for (const char* p = id; *p; ++p) {
      if (*p == '.') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur += *p;
      }
    }
    parts.push_back(cur);
    out.insert(QualifiedName(parts));
  }
  return out;
}

std::vector<std::pair<int, int>> edges(const Cfg& cfg) {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
    for (int s : cfg.nodes[i].succ) out.emplace_back(static_cast<int>(i), s);
  }
  return out;
}

}  // namespace

TEST(Cfg, StraightLine) {
  auto m = parse("def f():\n  x = 1\n  y = 2\n");
  auto cfg = build_cfg(*m->body[0]);
  ASSERT_EQ(cfg.nodes.size(), 4u);
  EXPECT_EQ(edges(cfg), (std::vector<std::pair<int, int>>{{0, 2}, {2, 3}, {3, 1}}));
}

TEST(Cfg, While) {
  auto m = parse("def f(c):\n  while c:\n    c = c - 1\n");
  auto cfg = build_cfg(*m->body[0]);
  // entry->header, header->body, header->exit, body->header
  EXPECT_EQ(cfg.nodes[2].succ, (std::vector<int>{3, 1}));
  EXPECT_EQ(cfg.nodes[3].succ, (std::vector<int>{2}));
  EXPECT_TRUE(cfg.nodes[Cfg::kExit].succ.empty());
}

TEST(Cfg, ContinueTargetsHeader) {
  auto m = parse("def f(r, p):\n  for i in r:\n    if p:\n      continue\n    s = i\n");
  auto cfg = build_cfg(*m->body[0]);
  const Node& loop = *m->body[0]->body[0];
  const Node& cont = *loop.body[0]->body[0];
  EXPECT_EQ(cfg.nodes[static_cast<std::size_t>(cfg.node_of(cont))].succ,
            (std::vector<int>{cfg.node_of(loop)}));
}

TEST(Cfg, BreakAndReturnEdges) {
  auto m = parse("def f(x):\n  while x:\n    break\n  y = 1\n  return y\n  z = 2\n");
  auto cfg = build_cfg(*m->body[0]);
  const auto& fn = *m->body[0];
  int brk = cfg.node_of(*fn.body[0]->body[0]);
  EXPECT_EQ(cfg.nodes[static_cast<std::size_t>(brk)].succ,
            (std::vector<int>{cfg.node_of(*fn.body[1])}));
  int ret = cfg.node_of(*fn.body[2]);
  EXPECT_EQ(cfg.nodes[static_cast<std::size_t>(ret)].succ, (std::vector<int>{Cfg::kExit}));
  EXPECT_TRUE(cfg.nodes[static_cast<std::size_t>(cfg.node_of(*fn.body[3]))].dead);
}

TEST(Activity, AttributeAssign) {
  auto m = parse("a.b = c");
  auto act = node_activity(*m->body[0]);
  EXPECT_EQ(act.modified, names({"a.b"}));
  EXPECT_EQ(act.read, names({"c"}));
}

TEST(Activity, EmptyFunction) {
  auto act = block_activity({});
  EXPECT_TRUE(act.read.empty());
  EXPECT_TRUE(act.modified.empty());
}

TEST(Activity, SelfUpdate) {
  auto act = node_activity(*parse("x = x + y")->body[0]);
  EXPECT_EQ(act.read, names({"x", "y"}));
  EXPECT_EQ(act.modified, names({"x"}));
}

TEST(Activity, SubscriptAndNamespaces) {
  auto a = node_activity(*parse("x[i] = m.tanh(y.z)")->body[0]);
  EXPECT_EQ(a.modified, names({"x"}));
  EXPECT_EQ(a.read, names({"i", "x", "y", "y.z"}));
  auto b = node_activity(*parse("x[0] = 1")->body[0]);
  EXPECT_EQ(b.modified.begin()->str(), "x[0]");
}

TEST(Activity, NestedFunctionReadsFreeVariables) {
  auto m = parse("def f(a):\n  def g(b):\n    c = a + b\n    return c\n  return g\n");
  auto act = node_activity(*m->body[0]->body[0]);
  EXPECT_EQ(act.modified, names({"g"}));
  EXPECT_EQ(act.read, names({"a"}));
  auto info = activity(*m);
  const auto& scope = *info.scopes.at(m->body[0]->body[0]->id);
  EXPECT_EQ(scope.params, names({"b"}));
  ASSERT_NE(scope.parent, nullptr);
  EXPECT_EQ(scope.parent->owner, m->body[0].get());
}

TEST(Reaching, SingleDef) {
  auto m = parse("def f():\n  x = 1\n  y = x\n");
  auto a = analyze(*m);
  const auto& y = *m->body[0]->body[1];
  const auto& fa = a.function_of(y);
  const auto& in = fa.facts.reach_in[static_cast<std::size_t>(fa.cfg.node_of(y))];
  std::vector<DefSite> x_defs;
  for (const auto& d : in) {
    if (d.name.str() == "x") x_defs.push_back(d);
  }
  ASSERT_EQ(x_defs.size(), 1u);
  EXPECT_EQ(x_defs[0].node, m->body[0]->body[0]->id);
}

TEST(Reaching, BothBranchDefs) {
  auto m = parse("def f(c):\n  x = 1\n  if c:\n    x = 2\n  y = x\n");
  auto a = analyze(*m);
  const auto& y = *m->body[0]->body[2];
  const auto& fa = a.function_of(y);
  int count = 0;
  for (const auto& d : fa.facts.reach_in[static_cast<std::size_t>(fa.cfg.node_of(y))]) {
    if (d.name.str() == "x") ++count;
  }
  EXPECT_EQ(count, 2);
}

TEST(Reaching, ParameterDef) {
  auto m = parse("def f(p):\n  y = p\n");
  auto a = analyze(*m);
  const auto& y = *m->body[0]->body[0];
  const auto& fa = a.function_of(y);
  const auto& in = fa.facts.reach_in[static_cast<std::size_t>(fa.cfg.node_of(y))];
  EXPECT_TRUE(in.count({QualifiedName::simple("p"), DefSite::Kind::Parameter, 0}));
}

TEST(Reaching, DefinedOnEntryIsMust) {
  auto m = parse("def f(c):\n  if c:\n    y = 1\n  z = 2\n  return z\n");
  auto a = analyze(*m);
  const auto& z = *m->body[0]->body[1];
  EXPECT_FALSE(a.defined_on_entry(z).count(QualifiedName::simple("y")));
  EXPECT_TRUE(a.defined_on_entry(z).count(QualifiedName::simple("c")));
}

TEST(Reaching, AssigningRootKillsFields) {
  auto m = parse("def f(a):\n  a.b = 1\n  a = 2\n  y = a\n");
  auto an = analyze(*m);
  const auto& y = *m->body[0]->body[2];
  const auto& fa = an.function_of(y);
  for (const auto& d : fa.facts.reach_in[static_cast<std::size_t>(fa.cfg.node_of(y))]) {
    EXPECT_NE(d.name.str(), "a.b");
  }
}

TEST(Liveness, AssignThenReturn) {
  auto m = parse("def f(g):\n  x = g()\n  return x\n");
  auto a = analyze(*m);
  const auto& s = *m->body[0]->body[0];
  EXPECT_TRUE(a.live_after(s).count(QualifiedName::simple("x")));
}

TEST(Liveness, WhileHeader) {
  auto m = parse("def h(x, eps, f):\n  while x > eps:\n    x = f(x)\n  return x\n");
  auto a = analyze(*m);
  const auto& loop = *m->body[0]->body[0];
  const auto& in = a.live_in(loop);
  for (const auto& n : names({"x", "eps", "f"})) EXPECT_TRUE(in.count(n)) << n.str();
}

TEST(Liveness, DeadStore) {
  auto m = parse("def f():\n  x = 1\n  x = 2\n  return x\n");
  auto a = analyze(*m);
  EXPECT_FALSE(a.live_after(*m->body[0]->body[0]).count(QualifiedName::simple("x")));
  EXPECT_TRUE(a.live_after(*m->body[0]->body[1]).count(QualifiedName::simple("x")));
}

TEST(Liveness, CompoundLiveAfterIf) {
  auto m = parse("def f(c):\n  if c:\n    y = 1\n  else:\n    y = 2\n  return y\n");
  auto a = analyze(*m);
  EXPECT_EQ(a.live_after(*m->body[0]->body[0]), names({"y"}));
}

TEST(Liveness, Monotonic) {
  auto base = parse("def f(a, b):\n  c = a\n  d = b\n  return c\n");
  auto more = parse("def f(a, b):\n  c = a\n  d = b + e\n  return c\n");
  auto ab = analyze(*base);
  auto am = analyze(*more);
  const auto& fb = ab.functions.at(base->body[0]->id);
  const auto& fm = am.functions.at(more->body[0]->id);
  for (std::size_t i = 0; i < fb.facts.live_in.size(); ++i) {
    for (const auto& n : fb.facts.live_in[i]) EXPECT_TRUE(fm.facts.live_in[i].count(n));
  }
}

TEST(Dataflow, BruteForceOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto src = oracle::random_acyclic_function(rng);
    auto m = parse(src);
    const Node& fn = *m->body[0];
    auto cfg = build_cfg(fn);
    ASSERT_LE(cfg.nodes.size(), 12u) << src;
    auto act = cfg_activity(cfg);
    NameSet params = names({"a", "b"});
    FlowFacts facts;
    reaching_definitions(cfg, act, params, {}, facts);
    liveness(cfg, act, facts);
    auto brute = oracle::brute_force(cfg, act, params);
    for (std::size_t i = 2; i < cfg.nodes.size(); ++i) {
      EXPECT_EQ(facts.reach_in[i], brute.reach_in[i]) << src << " node " << cfg.label(int(i));
      EXPECT_EQ(facts.live_in[i], brute.live_in[i]) << src << " node " << cfg.label(int(i));
      EXPECT_EQ(facts.live_out[i], brute.live_out[i]) << src << " node " << cfg.label(int(i));
    }
    EXPECT_TRUE(is_fixpoint(cfg, act, params, {}, facts));
  }
}

TEST(Dump, Format) {
  auto m = parse("def f(x):\n  y = x\n  return y\n");
  auto text = dump(*m, analyze(*m));
  EXPECT_NE(text.find("2:3 kind=Assign read={x} mod={y} live_in={x} live_out={y} reach_in_count="),
            std::string::npos)
      << text;
}
