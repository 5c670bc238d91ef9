// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "stagekit/error.hpp"
#include "stagekit/graph/builder.hpp"
#include "stagekit/graph/gradient.hpp"
#include "stagekit/graph/sexpr.hpp"
#include "stagekit/harness/harness.hpp"
#include "stagekit/syntax/parser.hpp"
#include "stagekit/transforms/transforms.hpp"

using namespace stagekit;
using graph::DType;
using graph::Op;
using graph::RtValue;
using graph::Tensor;
using graph::TypeSig;
using runtime::ParamSpec;
using runtime::Session;
using runtime::Value;

namespace {

const std::string kCorpus = STAGEKIT_CORPUS_DIR;

struct Verdict {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& why) {
    if (cond) return;
    if (ok) detail.clear();
    ok = false;
    detail += (detail.empty() ? "" : "; ") + why;
  }
};

std::string read(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

syntax::NodePtr load(const std::string& file) {
  return syntax::parse_module(read(kCorpus + "/" + file), file);
}

syntax::NodePtr converted(const std::string& file) { return transforms::convert(*load(file)).module; }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

Tensor random_tensor(std::mt19937_64& rng, graph::Shape shape) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t = Tensor::zeros(DType::F64, std::move(shape));
  for (auto& x : t.f) x = u(rng);
  return t;
}

graph::Graph trace(const syntax::NodePtr& module, const std::string& entry,
                   const harness::StagingPlan& plan, runtime::Backend backend = runtime::Backend::Graph) {
  runtime::SessionOptions opts;
  opts.backend = backend;
  Session s(opts);
  s.load(module);
  return s.trace(entry, plan.params);
}

std::vector<RtValue> native(const syntax::NodePtr& module, const std::string& entry,
                            std::vector<Value> args) {
  Session s;
  s.load(module);
  return runtime::flatten_result(s.call_function(entry, std::move(args)));
}

double scalar(const RtValue& v) { return std::get<Tensor>(v).f64(); }

// ------------------------------------------------------------------ 1

Verdict fuzz_sweep() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto summary = harness::run_fuzz(0, 1000, harness::FuzzSpec::all_features());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.detail = std::to_string(summary.programs) + " programs, " + std::to_string(summary.runs) +
             " runs, " + std::to_string(summary.failures.size()) + " mismatches, " + fmt(secs) + " s";
  v.expect(summary.runs == 6000, "expected 6000 runs, got " + std::to_string(summary.runs));
  for (const auto& [seed, rep] : summary.failures) {
    v.expect(false, "seed " + std::to_string(seed) + ": " + std::string(harness::to_string(rep.verdict)));
  }
  v.expect(secs < 300.0, "took " + fmt(secs) + " s");
  return v;
}

// ------------------------------------------------------------------ 2

Verdict corpus_goldens() {
  Verdict v;
  const auto results = harness::run_corpus(kCorpus);
  v.detail = std::to_string(results.size()) + " corpus programs match goldens and native output";
  v.expect(results.size() >= 9, "corpus has only " + std::to_string(results.size()) + " cases");
  for (const auto& r : results) {
    for (const auto& p : r.problems) v.expect(false, p);
  }
  return v;
}

// ------------------------------------------------------------------ 3

// The loop of dynamic_rnn written directly against the graph IR: a While over
// (i, state, outputs) with the inputs and weights captured.
graph::Graph handwritten_rnn(const graph::Shape& input_shape) {
  graph::Graph g;
  graph::Builder b(g.main);
  const TypeSig f64_2x4 = TypeSig::tensor(DType::F64, {2, 4});
  auto input = b.param("input_data", TypeSig::tensor(DType::F64, input_shape));
  auto init = b.param("initial_state", f64_2x4);
  auto lens = b.param("sequence_len", TypeSig::tensor(DType::I64, {2, 1}));
  auto w = b.param("w", TypeSig::tensor(DType::F64, {3, 4}));
  auto u = b.param("u", TypeSig::tensor(DType::F64, {4, 4}));
  auto bias = b.param("b", TypeSig::tensor(DType::F64, {4}));

  auto transpose = [](graph::Builder& gb, graph::ValueRef x) {
    graph::Node n;
    n.op = Op::Transpose;
    n.ints = {1, 0, 2};
    n.inputs = {x};
    return gb.add(std::move(n))[0];
  };
  auto time_major = transpose(b, input);
  auto max_len = b.op(Op::ReduceMax, {lens});
  graph::Node list;
  list.op = Op::ListNew;
  list.out_types = {TypeSig{DType::F64, graph::Shape{2, 4}, true}};
  auto outputs = b.add(std::move(list))[0];
  const TypeSig list_type = b.type_of(outputs);

  // Both subgraphs see (i, state, outputs, time_major, max_len, lens, w, u, b).
  auto params = [&](graph::Builder& gb) {
    std::vector<graph::ValueRef> p;
    p.push_back(gb.param("i", TypeSig::scalar(DType::I64)));
    p.push_back(gb.param("state", f64_2x4));
    p.push_back(gb.param("outputs", list_type));
    p.push_back(gb.param("input_data", b.type_of(time_major)));
    p.push_back(gb.param("max_len", TypeSig::scalar(DType::I64)));
    p.push_back(gb.param("sequence_len", b.type_of(lens)));
    p.push_back(gb.param("w", b.type_of(w)));
    p.push_back(gb.param("u", b.type_of(u)));
    p.push_back(gb.param("b", b.type_of(bias)));
    return p;
  };
  auto cond = std::make_shared<graph::Subgraph>();
  {
    graph::Builder t(*cond);
    auto p = params(t);
    cond->outputs = {t.op(Op::Lt, {p[0], p[4]})};
  }
  auto body = std::make_shared<graph::Subgraph>();
  {
    graph::Builder t(*body);
    auto p = params(t);
    auto x = t.op(Op::Index, {p[3], p[0]});
    auto pre = t.op(Op::Add, {t.op(Op::Add, {t.op(Op::MatMul, {x, p[6]}), t.op(Op::MatMul, {p[1], p[7]})}), p[8]});
    auto h = t.op(Op::Tanh, {pre});
    auto state = t.op(Op::Where, {t.op(Op::Lt, {p[0], p[5]}), h, p[1]});
    auto out = t.op(Op::ListAppend, {p[2], h});
    auto next = t.op(Op::Add, {p[0], t.constant(Tensor::scalar_i64(1))});
    body->outputs = {next, state, out};
  }
  graph::Node loop;
  loop.op = Op::While;
  loop.inputs = {b.constant(Tensor::scalar_i64(0)), init, outputs, time_major, max_len, lens, w, u, bias};
  loop.ints = {3};
  loop.subgraphs = {cond, body};
  loop.out_types = {TypeSig::scalar(DType::I64), f64_2x4, list_type};
  auto res = b.add(std::move(loop));
  auto stacked = b.op(Op::ListStack, {res[2]});
  g.main.outputs = {transpose(b, stacked), res[1]};
  return g;
}

Verdict dynamic_rnn() {
  Verdict v;
  std::mt19937_64 rng(2018);
  auto run_case = [&](std::int64_t max_len, std::int64_t short_len, graph::Graph* traced) {
    Tensor lens = Tensor::zeros(DType::I64, {2, 1});
    lens.i = {max_len, short_len};
    std::vector<Value> args = {random_tensor(rng, {2, max_len, 3}), random_tensor(rng, {2, 4}), lens,
                               random_tensor(rng, {3, 4}), random_tensor(rng, {4, 4}),
                               random_tensor(rng, {4})};
    const auto module = converted("dynamic_rnn.msl");
    const auto plan = harness::plan_staging(*module, "dynamic_rnn", args);
    *traced = trace(module, "dynamic_rnn", plan);
    const auto staged = graph::execute(*traced, plan.feeds).outputs;
    const auto hand = graph::execute(handwritten_rnn({2, max_len, 3}), plan.feeds).outputs;
    const auto ref = native(load("dynamic_rnn.msl"), "dynamic_rnn", args);
    v.expect(harness::outputs_match(staged, ref), "staged output differs from native");
    v.expect(harness::outputs_match(staged, hand), "staged output differs from the handwritten graph");
    const auto& out = std::get<Tensor>(staged[0]);
    v.expect(out.shape == graph::Shape({2, max_len, 4}), "output shape " + graph::shape_str(out.shape));
    v.expect(traced->count_op(Op::While) == 1,
             std::to_string(traced->count_op(Op::While)) + " While nodes");
  };
  graph::Graph short_graph, long_graph;
  run_case(3, 1, &short_graph);
  run_case(6, 2, &long_graph);
  v.expect(short_graph.node_count() == long_graph.node_count(),
           "node count depends on sequence length: " + std::to_string(short_graph.node_count()) +
               " vs " + std::to_string(long_graph.node_count()));
  if (v.ok) {
    v.detail = "shape [2, 3, 4], one While, " + std::to_string(short_graph.node_count()) +
               " nodes for lengths {3,1} and {6,2}, matches handwritten graph and native";
  }
  return v;
}

// ------------------------------------------------------------------ 4

struct Regression {
  Tensor xs, ys;
  Regression() {
    xs = Tensor::zeros(DType::F64, {8});
    ys = Tensor::zeros(DType::F64, {8});
    for (int k = 0; k < 8; ++k) {
      xs.f[k] = 0.25 * k - 0.5;
      ys.f[k] = 1.5 * xs.f[k] + 0.75 + 0.05 * ((k * 7) % 5 - 2);
    }
  }
  double loss(double w, double b) const {
    double s = 0;
    for (std::size_t k = 0; k < xs.f.size(); ++k) {
      const double e = xs.f[k] * w + b - ys.f[k];
      s += e * e;
    }
    return s / static_cast<double>(xs.f.size());
  }
};

Verdict in_graph_training() {
  Verdict v;
  const Regression data;
  const double lr = 0.01;
  const int steps = 200;
  std::vector<Value> args = {data.xs, data.ys, Tensor::scalar_f64(0.0), Tensor::scalar_f64(0.0),
                             Tensor::scalar_f64(lr), Tensor::scalar_i64(steps)};
  const auto module = converted("regression.msl");
  const auto plan = harness::plan_staging(*module, "train", args);
  const auto g = trace(module, "train", plan);
  std::size_t top_level_whiles = 0;
  for (const auto& n : g.main.nodes) top_level_whiles += n.op == Op::While ? 1 : 0;
  v.expect(g.count_op(Op::While) == 1 && top_level_whiles == 1, "training loop is not one While node");
  const auto out = graph::execute(g, plan.feeds).outputs;

  // Step-by-step reference.
  double w = 0, b = 0;
  std::vector<double> ref_losses;
  const double n = static_cast<double>(data.xs.f.size());
  for (int s = 0; s < steps; ++s) {
    ref_losses.push_back(data.loss(w, b));
    double gw = 0, gb = 0;
    for (std::size_t k = 0; k < data.xs.f.size(); ++k) {
      const double e = data.xs.f[k] * w + b - data.ys.f[k];
      gw += e * data.xs.f[k];
      gb += e;
    }
    w = w - lr * 2.0 * gw / n;
    b = b - lr * 2.0 * gb / n;
  }
  const double final_ref = data.loss(w, b);
  const double final_staged = data.loss(scalar(out[0]), scalar(out[1]));
  const auto& losses = std::get<Tensor>(out[2]).f;
  auto close = [](double a, double c) { return std::abs(a - c) <= 1e-9 * std::max(1.0, std::abs(c)); };
  v.expect(close(final_staged, final_ref),
           "final loss " + std::to_string(final_staged) + " vs " + std::to_string(final_ref));
  v.expect(losses.size() == static_cast<std::size_t>(steps), "recorded " + std::to_string(losses.size()) + " losses");
  for (std::size_t k = 0; k < losses.size() && k < ref_losses.size(); ++k) {
    if (!close(losses[k], ref_losses[k])) {
      v.expect(false, "loss at step " + std::to_string(k) + " differs");
      break;
    }
  }
  for (std::size_t k = 1; k < losses.size(); ++k) {
    if (!(losses[k] < losses[k - 1])) {
      v.expect(false, "loss rises at step " + std::to_string(k));
      break;
    }
  }
  v.expect(harness::outputs_match(out, native(load("regression.msl"), "train", args)),
           "staged training differs from the interpreter");
  if (v.ok) {
    v.detail = "200 steps in one While, loss " + fmt(losses.front()) + " -> " + fmt(final_staged) +
               " strictly decreasing, final loss matches reference";
  }
  return v;
}

// ------------------------------------------------------------------ 5

double rel_err(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-8); }

Verdict gradients() {
  Verdict v;
  constexpr double h = 1e-6;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> pick(0.5, 1.5);
  double worst = 0;

  const auto tree_src = load("tree_prod.msl");
  const auto tree_conv = transforms::convert(*tree_src).module;
  const std::vector<std::pair<int, std::string>> trees = {
      {0, "()"},
      {1, "(1.3 () ())"},
      {3, "(1.1 (0.9 () ()) (1.2 () ()))"},
      {7, "(1.1 (0.8 (1.3 () ()) (0.7 () ())) (1.2 (0.9 () ()) (1.4 () ())))"}};
  for (const auto& [size, text] : trees) {
    const Value tree = runtime::parse_tree(text);
    for (int point = 0; point < 10; ++point) {
      const double base = pick(rng);
      const std::vector<Value> args = {Tensor::scalar_f64(base), tree};
      const auto plan = harness::plan_staging(*tree_conv, "tree_prod", args);
      const auto g = trace(tree_conv, "tree_prod", plan, runtime::Backend::Sexpr);
      const auto gg = graph::gradient(g, g.main.outputs[0], {"base"});
      const double grad = scalar(graph::execute(gg, plan.feeds).outputs[1]);
      auto f = [&](double x) {
        return scalar(native(tree_src, "tree_prod", {Tensor::scalar_f64(x), tree})[0]);
      };
      const double fd = (f(base + h) - f(base - h)) / (2 * h);
      if (size == 0) v.expect(grad == 1.0, "empty-tree gradient is " + std::to_string(grad));
      worst = std::max(worst, rel_err(grad, fd));
      v.expect(rel_err(grad, fd) < 1e-5, "tree size " + std::to_string(size) + " at base " +
                                              std::to_string(base) + ": " + std::to_string(grad) +
                                              " vs " + std::to_string(fd));
    }
  }

  const Regression data;
  const auto reg_src = load("regression.msl");
  const auto reg_conv = transforms::convert(*reg_src).module;
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int point = 0; point < 10; ++point) {
    const double w = coef(rng), b = coef(rng);
    const std::vector<Value> args = {Tensor::scalar_f64(w), Tensor::scalar_f64(b), data.xs, data.ys};
    const auto plan = harness::plan_staging(*reg_conv, "loss", args);
    const auto g = trace(reg_conv, "loss", plan);
    const auto out = graph::execute(graph::gradient(g, g.main.outputs[0], {"w", "b"}), plan.feeds).outputs;
    auto f = [&](double ww, double bb) {
      return scalar(native(reg_src, "loss", {Tensor::scalar_f64(ww), Tensor::scalar_f64(bb), data.xs, data.ys})[0]);
    };
    const double fw = (f(w + h, b) - f(w - h, b)) / (2 * h);
    const double fb = (f(w, b + h) - f(w, b - h)) / (2 * h);
    worst = std::max({worst, rel_err(scalar(out[1]), fw), rel_err(scalar(out[2]), fb)});
    v.expect(rel_err(scalar(out[1]), fw) < 1e-5 && rel_err(scalar(out[2]), fb) < 1e-5,
             "regression gradient at w=" + std::to_string(w) + ", b=" + std::to_string(b));
  }
  if (v.ok) {
    v.detail = "tree sizes 0,1,3,7 and regression loss at 10 points each, worst relative error " +
               fmt(worst) + ", empty tree gives 1";
  }
  return v;
}

// ------------------------------------------------------------------ 6

Verdict recursion_backends() {
  Verdict v;
  const auto module = converted("tree_prod.msl");
  const std::vector<Value> args = {Tensor::scalar_f64(2.0), runtime::parse_tree("(5 (2 () ()) (3 () ()))")};
  const auto plan = harness::plan_staging(*module, "tree_prod", args);
  const auto g = trace(module, "tree_prod", plan, runtime::Backend::Sexpr);
  const auto forms = graph::read_sexpr(graph::to_sexpr(g));
  int defs = 0, calls = 0;
  std::function<void(const graph::SExpr&)> count = [&](const graph::SExpr& e) {
    if (e.is_atom) return;
    if (!e.items.empty() && e.items[0].is_atom && !e.items[0].quoted) {
      defs += e.items[0].text == "def";
      calls += e.items[0].text == "call";
    }
    for (const auto& x : e.items) count(x);
  };
  for (const auto& f : forms) count(f);
  v.expect(defs == 1, std::to_string(defs) + " definitions");
  v.expect(calls >= 2, std::to_string(calls) + " call sites");
  bool refused = false;
  try {
    trace(module, "tree_prod", plan, runtime::Backend::Graph);
  } catch (const Error& e) {
    refused = e.kind() == ErrorKind::RecursionDepthExceeded;
  }
  v.expect(refused, "graph backend did not raise RecursionDepthExceeded");
  if (v.ok) {
    v.detail = "sexpr: " + std::to_string(defs) + " def, " + std::to_string(calls) +
               " calls; graph: RecursionDepthExceeded";
  }
  return v;
}

// ------------------------------------------------------------------ 7

Verdict dispatch() {
  Verdict v;
  const std::string src =
      "def f(x, p):\n"
      "    if p:\n"
      "        y = x * x\n"
      "    else:\n"
      "        y = x + 1.0\n"
      "    return y\n"
      "\n"
      "def straight(x):\n"
      "    y = x * x\n"
      "    return y\n";
  const auto module = transforms::convert(*syntax::parse_module(src, "dispatch.msl")).module;
  const TypeSig f64 = TypeSig::scalar(DType::F64);

  Session plain;
  plain.load(module);
  const auto baseline = plain.trace("straight", {ParamSpec::tensor("x", f64)}).node_count();

  Session concrete;
  concrete.load(module);
  const auto g1 = concrete.trace("f", {ParamSpec::tensor("x", f64), ParamSpec::concrete("p", Tensor::scalar_bool(true))});
  v.expect(concrete.branch_calls() == 1, "concrete predicate ran " + std::to_string(concrete.branch_calls()) + " branches");
  v.expect(g1.node_count() == baseline, "concrete conditional added " +
                                            std::to_string(g1.node_count() - baseline) + " nodes");
  v.expect(g1.count_op(Op::Cond) == 0, "concrete conditional emitted a Cond");

  Session staged;
  staged.load(module);
  const auto g2 = staged.trace("f", {ParamSpec::tensor("x", f64), ParamSpec::tensor("p", TypeSig::scalar(DType::Bool))});
  v.expect(g2.count_op(Op::Cond) == 1, std::to_string(g2.count_op(Op::Cond)) + " Cond nodes");
  v.expect(staged.branch_calls() == 2, "staged predicate traced " + std::to_string(staged.branch_calls()) + " branches");

  Session native_run;
  native_run.load(module);
  native_run.call_function("f", {Tensor::scalar_f64(3.0), Tensor::scalar_bool(false)});
  v.expect(native_run.branch_calls() == 1, "native run called " + std::to_string(native_run.branch_calls()) + " branches");
  if (v.ok) {
    v.detail = "concrete: 1 branch, +0 nodes; staged: 1 Cond, each branch traced once";
  }
  return v;
}

// ------------------------------------------------------------------ 8

Verdict dataflow() {
  Verdict v;
  std::mt19937_64 rng(8);
  int cfgs = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto src = oracle::random_acyclic_function(rng);
    const auto module = syntax::parse_module(src, "random.msl");
    const auto cfg = analysis::build_cfg(*module->body[0]);
    v.expect(cfg.nodes.size() <= 12, "CFG with " + std::to_string(cfg.nodes.size()) + " nodes");
    const auto act = analysis::cfg_activity(cfg);
    analysis::NameSet params;
    for (const char* p : {"a", "b"}) params.insert(analysis::QualifiedName::simple(p));
    analysis::FlowFacts facts;
    analysis::reaching_definitions(cfg, act, params, {}, facts);
    analysis::liveness(cfg, act, facts);
    const auto brute = oracle::brute_force(cfg, act, params);
    for (std::size_t i = 2; i < cfg.nodes.size(); ++i) {
      if (facts.reach_in[i] != brute.reach_in[i] || facts.live_in[i] != brute.live_in[i] ||
          facts.live_out[i] != brute.live_out[i]) {
        v.expect(false, "trial " + std::to_string(trial) + " node " + cfg.label(static_cast<int>(i)));
      }
    }
    ++cfgs;
  }
  int functions = 0;
  for (const auto& c : harness::load_manifest(kCorpus)) {
    const auto original = load(c.file);
    for (const auto& module : {original, transforms::convert(*original).module}) {
      const auto facts = analysis::analyze(*module);
      for (const auto& [id, fa] : facts.functions) {
        ++functions;
        v.expect(analysis::is_fixpoint(fa.cfg, fa.act, fa.params, fa.outer, fa.facts),
                 c.file + ": facts are not a fixpoint");
      }
    }
  }
  if (v.ok) {
    v.detail = std::to_string(cfgs) + " acyclic CFGs match path enumeration; " +
               std::to_string(functions) + " corpus function bodies at fixpoint";
  }
  return v;
}

// ------------------------------------------------------------------ 9

Verdict provenance() {
  Verdict v;
  struct Injected {
    std::string file;
    std::string source;
    Phase phase;
    int line;
    ErrorKind kind;
  };
  const std::vector<Injected> cases = {
      {"unsupported.msl", "def f(x):\n    y = x + 1.0\n    with y as z:\n        y = z\n    return y\n",
       Phase::Conversion, 3, ErrorKind::SyntaxError},
      {"branches.msl",
       "def f(x):\n    y = 2.0\n    if x > 0.0:\n        y = 1.0\n    else:\n        y = True\n    return y\n",
       Phase::Staging, 3, ErrorKind::BranchMismatch},
      {"assert.msl", "def f(x):\n    y = x * 2.0\n    assert y > 0.0, \"y must be positive\"\n    return y\n",
       Phase::Runtime, 3, ErrorKind::AssertionFailed},
  };
  std::string lines;
  for (const auto& c : cases) {
    Phase reached = Phase::Conversion;
    std::optional<Error> err;
    try {
      const auto module = transforms::convert(*syntax::parse_module(c.source, c.file)).module;
      reached = Phase::Staging;
      const std::vector<Value> args = {Tensor::scalar_f64(-1.0)};
      const auto plan = harness::plan_staging(*module, "f", args);
      const auto g = trace(module, "f", plan);
      reached = Phase::Runtime;
      graph::execute(g, plan.feeds);
    } catch (const Error& e) {
      err = e;
    }
    if (!err) {
      v.expect(false, c.file + ": no error");
      continue;
    }
    const std::string diag = diagnostic(*err, reached, c.file);
    const auto& span = err->span();
    v.expect(reached == c.phase, c.file + ": failed in the " + std::string(to_string(reached)) + " phase");
    v.expect(err->kind() == c.kind, c.file + ": " + std::string(to_string(err->kind())));
    v.expect(span && span->file_name() == c.file && span->start_line == c.line,
             c.file + ": reported as " + diag);
    lines += (lines.empty() ? "" : ", ") + diag.substr(0, diag.find(": ", diag.find(": ") + 2));
  }
  if (v.ok) v.detail = lines;
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Verdict (*run)();
  };
  const Criterion criteria[] = {
      {"differential fuzz sweep", fuzz_sweep},
      {"corpus goldens", corpus_goldens},
      {"dynamic_rnn equivalence", dynamic_rnn},
      {"in-graph training", in_graph_training},
      {"gradient suite", gradients},
      {"recursion backends", recursion_backends},
      {"dispatch semantics", dispatch},
      {"dataflow oracles", dataflow},
      {"error provenance", provenance},
  };
  int failed = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail = std::string("unexpected error: ") + e.what();
    }
    std::cout << (v.ok ? "PASS" : "FAIL") << " " << index << " " << c.name << ": " << v.detail << std::endl;
    failed += v.ok ? 0 : 1;
  }
  return failed ? 1 : 0;
}
