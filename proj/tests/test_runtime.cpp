#include <gtest/gtest.h>

#include "stagekit/error.hpp"
#include "stagekit/graph/execute.hpp"
#include "stagekit/graph/gradient.hpp"
#include "stagekit/runtime/session.hpp"
#include "stagekit/syntax/parser.hpp"

using namespace stagekit;
using namespace stagekit::runtime;
using graph::DType;
using graph::Op;
using graph::Tensor;
using graph::TypeSig;

namespace {

// Converted-shape sources are written by hand here, so the reserved prefix
// must be allowed.
std::unique_ptr<Session> load(const std::string& src, Backend backend = Backend::Graph) {
  SessionOptions o;
  o.backend = backend;
  auto s = std::make_unique<Session>(o);
  syntax::ParseOptions po;
  po.allow_reserved = true;
  s->load(syntax::parse_module(src, "t.msl", po));
  return s;
}

double f64(const Value& v) { return v.as<Tensor>().f64(); }

double run1(const graph::Graph& g, const std::map<std::string, graph::RtValue>& feeds) {
  auto r = graph::execute(g, feeds);
  return std::get<Tensor>(r.outputs.at(0)).f64();
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InternalError;
}

const TypeSig kF64 = TypeSig::scalar(DType::F64);
const TypeSig kI64 = TypeSig::scalar(DType::I64);

const char* kListing1 = R"(
def f(x):
    def ag__if_true_1():
        return x * x
    def ag__if_false_1():
        return x
    x = ag__.if_stmt(x > 0.0, ag__if_true_1, ag__if_false_1, ("x",))
    return x
)";

const char* kHalving = R"(
def f(x):
    def ag__loop_test_1(x):
        return x > 1.0
    def ag__loop_body_1(x):
        x = x / 2.0
        return x
    x = ag__.while_stmt(ag__loop_test_1, ag__loop_body_1, (x,), ("x",), None, ())
    return x
)";

const char* kTreeProd = R"(
def tree_prod(base, tree):
    def ag__if_true_1():
        l = ag__.converted_call(tree_prod, base, tree.left)
        r = ag__.converted_call(tree_prod, base, tree.right)
        return l * r * tree.value
    def ag__if_false_1():
        return base
    out = ag__.if_stmt(ag__.not_(tree.is_empty), ag__if_true_1, ag__if_false_1, ("out",))
    return out
)";

std::map<std::string, graph::RtValue> tree_feeds(const std::string& name, const Tree& t) {
  auto a = encode_tree(t);
  auto names = tree_feed_names(name);
  return {{names[0], a.values}, {names[1], a.left}, {names[2], a.right}, {names[3], a.node}};
}

}  // namespace

TEST(Native, WhileHalving) {
  auto s = load("def f(x):\n    while x > 1.0:\n        x = x / 2.0\n    return x\n");
  EXPECT_EQ(f64(s->call_function("f", {float_value(16.0)})), 1.0);
}

TEST(Native, ListValueSemantics) {
  auto s = load(
      "def f():\n    a = [1, 2, 3]\n    b = a\n    b[1] = 9\n    b.append(4)\n"
      "    return a[1], b[1], len(a), len(b)\n");
  auto r = s->call_function("f", {});
  EXPECT_EQ(format_value(r), "(2, 9, 3, 4)");
}

TEST(Native, ArithmeticConventions) {
  auto s = load("def f(a, b):\n    return a % b, a / b\n");
  EXPECT_EQ(format_value(s->call_function("f", {int_value(-7), int_value(3)})), "(2, -2.3333333333333335)");
  EXPECT_EQ(kind_of([&] { s->call_function("f", {int_value(1), int_value(0)}); }),
            ErrorKind::DivisionByZero);
}

TEST(Native, BoolStrictness) {
  auto s = load("def f(x):\n    if x:\n        return 1\n    return 0\n");
  EXPECT_EQ(kind_of([&] { s->call_function("f", {int_value(1)}); }), ErrorKind::TypeError);
  EXPECT_EQ(format_value(s->call_function("f", {bool_value(true)})), "1");
}

TEST(Native, PrintAndRecursionLimit) {
  auto s = load("def f(n):\n    print(\"n is\", n, [1.5])\n    return f(n + 1)\n");
  EXPECT_EQ(kind_of([&] { s->call_function("f", {int_value(0)}); }),
            ErrorKind::RecursionDepthExceeded);
  ASSERT_FALSE(s->log().empty());
  EXPECT_EQ(s->log()[0], "n is 0 [1.5]");
}

TEST(Native, ErrorCarriesLine) {
  auto s = load("def f(x):\n    y = x + 1\n    return y / 0\n");
  try {
    s->call_function("f", {int_value(1)});
    FAIL();
  } catch (const Error& e) {
    ASSERT_TRUE(e.span().has_value());
    EXPECT_EQ(e.span()->start_line, 3);
  }
}

TEST(Dispatch, ConcreteIfRunsOneBranch) {
  auto s = load(kListing1);
  EXPECT_EQ(f64(s->call_function("f", {float_value(3.0)})), 9.0);
  EXPECT_EQ(s->branch_calls(), 1u);
  auto g = s->trace("f", {ParamSpec::concrete("x", float_value(-2.0))});
  EXPECT_EQ(g.node_count(), 1u);  // the boxed result only
  EXPECT_EQ(s->branch_calls(), 2u);
}

TEST(Dispatch, StagedIfEmitsOneCond) {
  auto s = load(kListing1);
  auto g = s->trace("f", {ParamSpec::tensor("x", kF64)});
  EXPECT_EQ(g.count_op(Op::Cond), 1u);
  EXPECT_EQ(s->branch_calls(), 2u);
  EXPECT_EQ(run1(g, {{"x", Tensor::scalar_f64(3.0)}}), 9.0);
  EXPECT_EQ(run1(g, {{"x", Tensor::scalar_f64(-2.0)}}), -2.0);
}

TEST(Dispatch, StagedWhileTracesOnce) {
  auto s = load(kHalving);
  EXPECT_EQ(f64(s->call_function("f", {float_value(16.0)})), 1.0);
  auto g = s->trace("f", {ParamSpec::tensor("x", kF64)});
  ASSERT_EQ(g.count_op(Op::While), 1u);
  const auto& w = g.main.nodes[static_cast<std::size_t>(g.main.outputs[0].node)];
  ASSERT_EQ(w.op, Op::While);
  EXPECT_EQ(graph::count_op(*w.subgraphs[1], Op::Div), 1u);
  EXPECT_EQ(run1(g, {{"x", Tensor::scalar_f64(16.0)}}), 1.0);
}

TEST(Dispatch, WhileCapturesOuterStagedValue) {
  auto s = load(R"(
def f(x, lim):
    def ag__loop_test_1(x):
        return x < lim
    def ag__loop_body_1(x):
        x = x * 2.0
        return x
    x = ag__.while_stmt(ag__loop_test_1, ag__loop_body_1, (x,), ("x",), ag__.loop_options(100), (lim,))
    return x
)");
  auto g = s->trace("f", {ParamSpec::tensor("x", kF64), ParamSpec::tensor("lim", kF64)});
  EXPECT_EQ(run1(g, {{"x", Tensor::scalar_f64(1.0)}, {"lim", Tensor::scalar_f64(10.0)}}), 16.0);
}

TEST(Dispatch, LogicalShortCircuit) {
  auto s = load(R"(
def f(a):
    def ag__thunk_1():
        print("evaluated")
        return True
    return ag__.and_(a, ag__thunk_1)
)");
  EXPECT_FALSE(s->call_function("f", {bool_value(false)}).as<Tensor>().boolean());
  EXPECT_TRUE(s->log().empty());
  auto g = s->trace("f", {ParamSpec::tensor("a", TypeSig::scalar(DType::Bool))});
  EXPECT_EQ(g.count_op(Op::Cond), 1u);
  auto r = graph::execute(g, {{"a", Tensor::scalar_bool(false)}});
  EXPECT_TRUE(r.log.empty());
  r = graph::execute(g, {{"a", Tensor::scalar_bool(true)}});
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.log[0], "evaluated");
}

TEST(Dispatch, BranchMismatchAndUndefined) {
  auto s = load(R"(
def mixed(x):
    def ag__if_true_1():
        return 1.0
    def ag__if_false_1():
        return 2
    y = ag__.if_stmt(x > 0.0, ag__if_true_1, ag__if_false_1, ("y",))
    return y

def partial(x):
    y = ag__.Undefined("y")
    def ag__if_true_1():
        y = x
        return y
    def ag__if_false_1():
        return y
    y = ag__.if_stmt(x > 0.0, ag__if_true_1, ag__if_false_1, ("y",))
    return y
)");
  EXPECT_EQ(kind_of([&] { s->trace("mixed", {ParamSpec::tensor("x", kF64)}); }),
            ErrorKind::BranchMismatch);
  EXPECT_EQ(kind_of([&] { s->trace("partial", {ParamSpec::tensor("x", kF64)}); }),
            ErrorKind::UndefinedBranchOutput);
  EXPECT_EQ(kind_of([&] { s->call_function("partial", {float_value(-1.0)}); }),
            ErrorKind::UndefinedSymbol);
}

TEST(Dispatch, StagedForOverRange) {
  auto s = load(R"(
def f(n):
    s = 0
    def ag__loop_body_1(i, s):
        s = s + i
        return s
    s = ag__.for_stmt(range(n), ag__loop_body_1, (s,), ("s",), None)
    return s
)");
  EXPECT_EQ(s->call_function("f", {int_value(5)}).as<Tensor>().i64(), 10);
  auto g = s->trace("f", {ParamSpec::tensor("n", kI64)});
  EXPECT_EQ(g.count_op(Op::While), 1u);
  auto r = graph::execute(g, {{"n", Tensor::scalar_i64(5)}});
  EXPECT_EQ(std::get<Tensor>(r.outputs[0]).i64(), 10);
}

TEST(Dispatch, ConcreteListOfStagedUnrolls) {
  auto s = load(R"(
def f(x):
    s = 0.0
    def ag__loop_body_1(k, s):
        s = s + x * k
        return s
    s = ag__.for_stmt(ag__.list_new(1.0, 2.0, 3.0), ag__loop_body_1, (s,), ("s",), None)
    return s
)");
  auto g = s->trace("f", {ParamSpec::tensor("x", kF64)});
  EXPECT_EQ(g.count_op(Op::While), 0u);
  EXPECT_EQ(g.count_op(Op::Mul), 3u);
  EXPECT_EQ(run1(g, {{"x", Tensor::scalar_f64(2.0)}}), 12.0);
}

TEST(Dispatch, StagedListNeedsElementType) {
  const char* src = R"(
def f(n, typed):
    if typed:
        out = ag__.typed_list("f64")
    else:
        out = ag__.list_new()
    def ag__loop_body_1(i, out):
        out = ag__.list_append(out, 1.5)
        return out
    out = ag__.for_stmt(range(n), ag__loop_body_1, (out,), ("out",), None)
    return ag__.list_stack(out)
)";
  auto s = load(src);
  EXPECT_EQ(kind_of([&] {
              s->trace("f", {ParamSpec::tensor("n", kI64), ParamSpec::concrete("typed", bool_value(false))});
            }),
            ErrorKind::ElementTypeUnset);
  auto g = s->trace("f", {ParamSpec::tensor("n", kI64), ParamSpec::concrete("typed", bool_value(true))});
  auto r = graph::execute(g, {{"n", Tensor::scalar_i64(3)}});
  EXPECT_EQ(graph::format_rt(r.outputs[0]), "[1.5, 1.5, 1.5]");
}

TEST(Dispatch, SetItemValueSemantics) {
  auto s = load(R"(
def f(x):
    y = ag__.setitem(x, 1, 9.0)
    return ag__.getitem(x, 1), ag__.getitem(y, 1)
)");
  Tensor v = Tensor::zeros(DType::F64, {3});
  v.f = {1, 2, 3};
  EXPECT_EQ(format_value(s->call_function("f", {v})), "(2.0, 9.0)");
  auto g = s->trace("f", {ParamSpec::tensor("x", TypeSig::tensor(DType::F64, {3}))});
  auto r = graph::execute(g, {{"x", v}});
  EXPECT_EQ(std::get<Tensor>(r.outputs[0]).f64(), 2.0);
  EXPECT_EQ(std::get<Tensor>(r.outputs[1]).f64(), 9.0);
}

TEST(Dispatch, StagedPrintDefersOutput) {
  auto s = load("def f(x):\n    print(\"x =\", x)\n    return x\n");
  auto g = s->trace("f", {ParamSpec::tensor("x", kF64)});
  EXPECT_TRUE(s->log().empty());
  auto r = graph::execute(g, {{"x", Tensor::scalar_f64(2.5)}});
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.log[0], "x = 2.5");
}

TEST(Staging, RecursionGraphBackendRejects) {
  auto s = load(kTreeProd, Backend::Graph);
  EXPECT_EQ(kind_of([&] {
              s->trace("tree_prod", {ParamSpec::tensor("base", kF64), ParamSpec::tree("tree")});
            }),
            ErrorKind::RecursionDepthExceeded);
}

TEST(Staging, RecursionSexprBackend) {
  auto s = load(kTreeProd, Backend::Sexpr);
  auto g = s->trace("tree_prod", {ParamSpec::tensor("base", kF64), ParamSpec::tree("tree")});
  ASSERT_EQ(g.functions.size(), 1u);
  const auto& fn = g.functions.begin()->second;
  EXPECT_EQ(graph::count_op(*fn.body, Op::FuncCall), 2u);
  EXPECT_EQ(g.main.outputs.size(), 1u);
  EXPECT_EQ(g.main.nodes[static_cast<std::size_t>(g.main.outputs[0].node)].out_types[0], kF64);

  for (const char* lit : {"()", "(3 () ())", "(2 (3 () ()) (0.5 () (4 () ())))"}) {
    const Tree t = parse_tree(lit);
    const double native = f64(s->call_function("tree_prod", {float_value(1.5), t}));
    auto feeds = tree_feeds("tree", t);
    feeds["base"] = Tensor::scalar_f64(1.5);
    EXPECT_EQ(run1(g, feeds), native) << lit;
  }
}

TEST(Staging, GradientOfTracedFunction) {
  auto s = load(kListing1);
  auto g = s->trace("f", {ParamSpec::tensor("x", kF64)});
  auto dg = graph::gradient(g, g.main.outputs[0], {"x"});
  auto r = graph::execute(dg, {{"x", Tensor::scalar_f64(3.0)}});
  EXPECT_EQ(std::get<Tensor>(r.outputs[1]).f64(), 6.0);
  r = graph::execute(dg, {{"x", Tensor::scalar_f64(-3.0)}});
  EXPECT_EQ(std::get<Tensor>(r.outputs[1]).f64(), 1.0);
}

TEST(Values, FeedsAndTrees) {
  EXPECT_EQ(graph::format_tensor(parse_feed("f64[2,2]:1,2,3,4").as<Tensor>()), "[[1.0, 2.0], [3.0, 4.0]]");
  EXPECT_EQ(parse_feed("i64:3").as<Tensor>().i64(), 3);
  EXPECT_TRUE(parse_feed("bool:true").as<Tensor>().boolean());
  EXPECT_EQ(format_tree(parse_feed("tree:(5 () ())").as<Tree>()), "(5.0 () ())");
  EXPECT_EQ(kind_of([] { parse_feed("f64[2]:1"); }), ErrorKind::UsageError);
  EXPECT_EQ(kind_of([] { parse_tree("(1 ()"); }), ErrorKind::UsageError);
  auto a = encode_tree(parse_tree("(1 (2 () ()) (3 () ()))"));
  EXPECT_EQ(graph::format_tensor(a.left), "[1, -1, -1]");
  EXPECT_EQ(graph::format_tensor(a.right), "[2, -1, -1]");
}
