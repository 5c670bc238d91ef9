#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stagekit/error.hpp"
#include "stagekit/graph/builder.hpp"
#include "stagekit/graph/execute.hpp"
#include "stagekit/graph/gradient.hpp"
#include "stagekit/graph/kernels.hpp"
#include "stagekit/graph/sexpr.hpp"

using namespace stagekit;
using namespace stagekit::graph;

namespace {

Tensor matrix(Shape shape, std::vector<double> v) {
  Tensor t = Tensor::zeros(DType::F64, std::move(shape));
  t.f = std::move(v);
  return t;
}

Tensor random_tensor(std::mt19937_64& rng, Shape shape) {
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor t = Tensor::zeros(DType::F64, std::move(shape));
  for (auto& x : t.f) x = u(rng);
  return t;
}

double scalar(const RtValue& v) { return std::get<Tensor>(v).f64(); }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InternalError;
}

// while x > 1.0: x = x / 2
Graph halving_loop(std::optional<std::int64_t> max_iterations = std::nullopt) {
  Graph g;
  Builder b(g.main);
  auto x = b.param("x", TypeSig::scalar(DType::F64));
  auto test = std::make_shared<Subgraph>();
  {
    Builder t(*test);
    auto v = t.param("x", TypeSig::scalar(DType::F64));
    test->outputs = {t.op(Op::Gt, {v, t.constant(Tensor::scalar_f64(1.0))})};
  }
  auto body = std::make_shared<Subgraph>();
  {
    Builder t(*body);
    auto v = t.param("x", TypeSig::scalar(DType::F64));
    body->outputs = {t.op(Op::Div, {v, t.constant(Tensor::scalar_f64(2.0))})};
  }
  Node w;
  w.op = Op::While;
  w.inputs = {x};
  w.ints = {1};
  w.max_iterations = max_iterations;
  w.subgraphs = {test, body};
  w.out_types = {TypeSig::scalar(DType::F64)};
  g.main.outputs = b.add(std::move(w));
  return g;
}

// if p: print("then", x); y = x * x  else: print("else"); y = x
Graph printing_cond() {
  Graph g;
  Builder b(g.main);
  auto p = b.param("p", TypeSig::scalar(DType::Bool));
  auto x = b.param("x", TypeSig::scalar(DType::F64));
  auto then = std::make_shared<Subgraph>();
  {
    Builder t(*then);
    auto v = t.param("x", TypeSig::scalar(DType::F64));
    Node pr;
    pr.op = Op::Print;
    pr.inputs = {v};
    pr.strings = {"then", ""};
    pr.ints = {-1, 0};
    t.add(std::move(pr));
    then->outputs = {t.op(Op::Mul, {v, v})};
  }
  auto els = std::make_shared<Subgraph>();
  {
    Builder t(*els);
    auto v = t.param("x", TypeSig::scalar(DType::F64));
    Node pr;
    pr.op = Op::Print;
    pr.strings = {"else"};
    pr.ints = {-1};
    t.add(std::move(pr));
    els->outputs = {v};
  }
  Node c;
  c.op = Op::Cond;
  c.inputs = {p, x};
  c.subgraphs = {then, els};
  c.out_types = {TypeSig::scalar(DType::F64)};
  g.main.outputs = b.add(std::move(c));
  return g;
}

double finite_difference(const Graph& g, const std::string& name, double at) {
  const double h = 1e-6;
  auto run = [&](double v) { return scalar(execute(g, {{name, Tensor::scalar_f64(v)}}).outputs[0]); };
  return (run(at + h) - run(at - h)) / (2 * h);
}

}  // namespace

TEST(Kernels, MatmulShape) {
  std::mt19937_64 rng(1);
  auto c = kernels::matmul(random_tensor(rng, {2, 3}), random_tensor(rng, {3, 4}));
  EXPECT_EQ(c.shape, (Shape{2, 4}));
  EXPECT_EQ(kind_of([&] { kernels::matmul(random_tensor(rng, {2, 3}), random_tensor(rng, {2, 3})); }),
            ErrorKind::ShapeMismatch);
}

TEST(Kernels, TransposeInvolution) {
  std::mt19937_64 rng(2);
  auto x = random_tensor(rng, {2, 3, 4});
  auto y = kernels::transpose(kernels::transpose(x, {1, 0, 2}), {1, 0, 2});
  EXPECT_TRUE(exactly_equal(x, y));
  EXPECT_EQ(kernels::transpose(x, {}).shape, (Shape{4, 3, 2}));
}

TEST(Kernels, ReduceSumMatchesLoop) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_tensor(rng, {3, 4});
    double acc = 0;
    for (double v : x.f) acc += v;
    EXPECT_EQ(kernels::reduce_sum(x).f64(), acc);
  }
}

TEST(Kernels, ModFollowsDivisor) {
  auto m = [](std::int64_t a, std::int64_t b) {
    return kernels::binary(Op::Mod, Tensor::scalar_i64(a), Tensor::scalar_i64(b)).i64();
  };
  EXPECT_EQ(m(-7, 3), 2);
  EXPECT_EQ(m(7, -3), -2);
  EXPECT_EQ(m(7, 3), 1);
  auto fm = kernels::binary(Op::Mod, Tensor::scalar_f64(-7.5), Tensor::scalar_f64(2.0));
  EXPECT_EQ(fm.f64(), 0.5);
}

TEST(Kernels, DivisionAlwaysFloat) {
  auto q = kernels::binary(Op::Div, Tensor::scalar_i64(7), Tensor::scalar_i64(2));
  EXPECT_EQ(q.dtype, DType::F64);
  EXPECT_EQ(q.f64(), 3.5);
  EXPECT_EQ(kind_of([] { kernels::binary(Op::Div, Tensor::scalar_i64(1), Tensor::scalar_i64(0)); }),
            ErrorKind::DivisionByZero);
}

TEST(Kernels, Broadcasting) {
  auto a = matrix({2, 3}, {1, 2, 3, 4, 5, 6});
  auto row = matrix({3}, {10, 20, 30});
  auto s = kernels::binary(Op::Add, a, row);
  EXPECT_EQ(s.f, (std::vector<double>{11, 22, 33, 14, 25, 36}));
  EXPECT_EQ(kind_of([&] { kernels::binary(Op::Add, a, matrix({2}, {1, 2})); }),
            ErrorKind::ShapeMismatch);
  auto back = kernels::sum_to(s, {3});
  EXPECT_EQ(back.f, (std::vector<double>{25, 47, 69}));
}

TEST(Kernels, WhereSelectsRows) {
  Tensor c = Tensor::zeros(DType::Bool, {2});
  c.i = {1, 0};
  auto r = kernels::where(c, matrix({2, 2}, {1, 2, 3, 4}), matrix({2, 2}, {5, 6, 7, 8}));
  EXPECT_EQ(r.f, (std::vector<double>{1, 2, 7, 8}));
}

TEST(Kernels, FloatFormatting) {
  EXPECT_EQ(format_f64(1.0), "1.0");
  EXPECT_EQ(format_f64(0.1), "0.1");
  EXPECT_EQ(format_f64(1e16), "1e+16");
  EXPECT_EQ(format_f64(1e-5), "1e-05");
  EXPECT_EQ(format_f64(-2.5), "-2.5");
}

TEST(Execute, ConstAdd) {
  Graph g;
  Builder b(g.main);
  g.main.outputs = {b.op(Op::Add, {b.constant(Tensor::scalar_i64(2)), b.constant(Tensor::scalar_i64(3))})};
  validate(g);
  auto r = execute(g, {});
  EXPECT_EQ(std::get<Tensor>(r.outputs[0]).i64(), 5);
}

TEST(Execute, WhileHalving) {
  Graph g = halving_loop();
  validate(g);
  EXPECT_EQ(scalar(execute(g, {{"x", Tensor::scalar_f64(16.0)}}).outputs[0]), 1.0);
  EXPECT_EQ(scalar(execute(g, {{"x", Tensor::scalar_f64(0.5)}}).outputs[0]), 0.5);
}

TEST(Execute, IterationLimit) {
  Graph g = halving_loop(3);
  EXPECT_EQ(scalar(execute(g, {{"x", Tensor::scalar_f64(8.0)}}).outputs[0]), 1.0);
  EXPECT_EQ(kind_of([&] { execute(g, {{"x", Tensor::scalar_f64(16.0)}}); }),
            ErrorKind::IterationLimitExceeded);
}

TEST(Execute, CondRunsOneBranch) {
  Graph g = printing_cond();
  validate(g);
  auto r = execute(g, {{"p", Tensor::scalar_bool(true)}, {"x", Tensor::scalar_f64(3.0)}});
  EXPECT_EQ(scalar(r.outputs[0]), 9.0);
  EXPECT_EQ(r.log, (std::vector<std::string>{"then 3.0"}));
  r = execute(g, {{"p", Tensor::scalar_bool(false)}, {"x", Tensor::scalar_f64(3.0)}});
  EXPECT_EQ(scalar(r.outputs[0]), 3.0);
  EXPECT_EQ(r.log, (std::vector<std::string>{"else"}));
}

TEST(Execute, FeedErrors) {
  Graph g = halving_loop();
  EXPECT_EQ(kind_of([&] { execute(g, {}); }), ErrorKind::RuntimeGraphError);
  EXPECT_EQ(kind_of([&] { execute(g, {{"x", Tensor::scalar_i64(3)}}); }),
            ErrorKind::RuntimeGraphError);
}

TEST(Execute, KernelErrorCarriesOrigin) {
  auto file = std::make_shared<const std::string>("k.msl");
  Graph g;
  Builder b(g.main);
  syntax::SourceSpan span{file, 7, 3, 7, 9};
  b.set_origin(span, "f");
  auto x = b.param("x", TypeSig::scalar(DType::I64));
  g.main.outputs = {b.op(Op::Div, {b.constant(Tensor::scalar_i64(1)), x})};
  try {
    execute(g, {{"x", Tensor::scalar_i64(0)}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DivisionByZero);
    ASSERT_TRUE(e.span());
    EXPECT_EQ(e.span()->start_line, 7);
  }
}

TEST(Validate, EmptyGraph) { EXPECT_NO_THROW(validate(Graph{})); }

TEST(Validate, RejectsMismatchedCondBranches) {
  Graph g = printing_cond();
  g.main.nodes.back().subgraphs[1]->outputs.push_back(g.main.nodes.back().subgraphs[1]->outputs[0]);
  EXPECT_EQ(kind_of([&] { validate(g); }), ErrorKind::ValidationError);
}

TEST(Validate, RejectsForwardReference) {
  Graph g;
  Builder b(g.main);
  auto c = b.constant(Tensor::scalar_f64(1.0));
  g.main.outputs = {b.op(Op::Neg, {c})};
  g.main.nodes[1].inputs[0].node = 5;
  EXPECT_EQ(kind_of([&] { validate(g); }), ErrorKind::ValidationError);
}

TEST(Gradient, Identity) {
  Graph g;
  Builder b(g.main);
  g.main.outputs = {b.param("b", TypeSig::scalar(DType::F64))};
  Graph d = gradient(g, g.main.outputs[0], {"b"});
  validate(d);
  auto r = execute(d, {{"b", Tensor::scalar_f64(4.0)}});
  EXPECT_EQ(scalar(r.outputs[1]), 1.0);
}

TEST(Gradient, ProductClosedForm) {
  // b * b * v
  Graph g;
  Builder b(g.main);
  auto x = b.param("b", TypeSig::scalar(DType::F64));
  auto v = b.param("v", TypeSig::scalar(DType::F64));
  g.main.outputs = {b.op(Op::Mul, {b.op(Op::Mul, {x, x}), v})};
  Graph d = gradient(g, g.main.outputs[0], {"b", "v"});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 10; ++k) {
    double bv = u(rng), vv = u(rng);
    auto r = execute(d, {{"b", Tensor::scalar_f64(bv)}, {"v", Tensor::scalar_f64(vv)}});
    EXPECT_NEAR(scalar(r.outputs[1]), 2 * bv * vv, 1e-12);
    EXPECT_NEAR(scalar(r.outputs[2]), bv * bv, 1e-12);
  }
}

TEST(Gradient, ThroughCondMatchesFiniteDifferences) {
  // y = tanh(x) * 3 if x > 0 else sigmoid(x) / x
  Graph g;
  Builder b(g.main);
  auto x = b.param("x", TypeSig::scalar(DType::F64));
  auto p = b.op(Op::Gt, {x, b.constant(Tensor::scalar_f64(0.0))});
  auto then = std::make_shared<Subgraph>();
  {
    Builder t(*then);
    auto v = t.param("x", TypeSig::scalar(DType::F64));
    then->outputs = {t.op(Op::Mul, {t.op(Op::Tanh, {v}), t.constant(Tensor::scalar_f64(3.0))})};
  }
  auto els = std::make_shared<Subgraph>();
  {
    Builder t(*els);
    auto v = t.param("x", TypeSig::scalar(DType::F64));
    els->outputs = {t.op(Op::Div, {t.op(Op::Sigmoid, {v}), v})};
  }
  Node c;
  c.op = Op::Cond;
  c.inputs = {p, x};
  c.subgraphs = {then, els};
  c.out_types = {TypeSig::scalar(DType::F64)};
  g.main.outputs = b.add(std::move(c));
  Graph d = gradient(g, g.main.outputs[0], {"x"});
  validate(d);
  for (double at : {-2.0, -0.7, 0.4, 1.3}) {
    double ad = scalar(execute(d, {{"x", Tensor::scalar_f64(at)}}).outputs[1]);
    double fd = finite_difference(g, "x", at);
    EXPECT_LT(std::abs(ad - fd) / std::max(1.0, std::abs(fd)), 1e-5) << at;
  }
}

TEST(Gradient, MatmulReduce) {
  // sum((X @ w - y) * (X @ w - y))
  Graph g;
  Builder b(g.main);
  auto X = b.param("X", TypeSig::tensor(DType::F64, {3, 2}));
  auto w = b.param("w", TypeSig::tensor(DType::F64, {2, 1}));
  auto y = b.param("y", TypeSig::tensor(DType::F64, {3, 1}));
  auto r = b.op(Op::Sub, {b.op(Op::MatMul, {X, w}), y});
  g.main.outputs = {b.op(Op::ReduceSum, {b.op(Op::Mul, {r, r})})};
  Graph d = gradient(g, g.main.outputs[0], {"w"});
  validate(d);
  auto Xv = matrix({3, 2}, {1, 2, 3, 4, 5, 6});
  auto wv = matrix({2, 1}, {0.5, -0.25});
  auto yv = matrix({3, 1}, {1, 0, 2});
  auto out = execute(d, {{"X", Xv}, {"w", wv}, {"y", yv}});
  const auto& gw = std::get<Tensor>(out.outputs[1]);
  ASSERT_EQ(gw.shape, (Shape{2, 1}));
  // closed form 2 X^T (X w - y)
  auto res = kernels::binary(Op::Sub, kernels::matmul(Xv, wv), yv);
  auto expect = kernels::binary(Op::Mul, kernels::matmul(kernels::transpose(Xv, {}), res),
                                Tensor::scalar_f64(2.0));
  EXPECT_TRUE(approx_equal(gw, expect, 1e-12));
}

TEST(Gradient, WhileOnPathRejected) {
  Graph g = halving_loop();
  EXPECT_EQ(kind_of([&] { gradient(g, g.main.outputs[0], {"x"}); }),
            ErrorKind::WhileNotDifferentiable);
  EXPECT_EQ(kind_of([&] { gradient(g, g.main.outputs[0], {"nope"}); }), ErrorKind::UsageError);
}

TEST(SExpr, ConstAdd) {
  Graph g;
  Builder b(g.main);
  g.main.outputs = {b.op(Op::Add, {b.constant(Tensor::scalar_i64(2)), b.constant(Tensor::scalar_i64(3))})};
  EXPECT_EQ(to_sexpr(g), "(add (const i64 2) (const i64 3))\n");
}

TEST(SExpr, CondShapeAndRoundTrip) {
  Graph g = printing_cond();
  std::string text = to_sexpr(g);
  EXPECT_NE(text.find("(cond p"), std::string::npos) << text;
  EXPECT_NE(text.find("(then"), std::string::npos);
  EXPECT_NE(text.find("(else"), std::string::npos);
  EXPECT_NE(text.find("(print \"then\" x)"), std::string::npos) << text;
  auto forms = read_sexpr(text);
  EXPECT_EQ(write_sexpr(forms), text);
}

TEST(SExpr, WhileForm) {
  std::string text = to_sexpr(halving_loop(10));
  EXPECT_NE(text.find("(while"), std::string::npos);
  EXPECT_NE(text.find("(max_iterations 10)"), std::string::npos) << text;
  EXPECT_EQ(write_sexpr(read_sexpr(text)), text);
}

TEST(SExpr, ReaderErrors) {
  EXPECT_EQ(kind_of([] { read_sexpr("(add 1"); }), ErrorKind::SyntaxError);
  EXPECT_EQ(kind_of([] { read_sexpr(")"); }), ErrorKind::SyntaxError);
  EXPECT_EQ(kind_of([] { read_sexpr("(print \"x)"); }), ErrorKind::SyntaxError);
}

TEST(Dot, EmptyAndClusters) {
  EXPECT_EQ(to_dot(Graph{}), "digraph stagekit {\n}\n");
  std::string dot = to_dot(printing_cond());
  std::size_t clusters = 0;
  for (std::size_t p = dot.find("subgraph cluster_"); p != std::string::npos;
       p = dot.find("subgraph cluster_", p + 1)) {
    ++clusters;
  }
  EXPECT_EQ(clusters, 3u);
  EXPECT_NE(dot.find("label=\"cond\""), std::string::npos);
}
