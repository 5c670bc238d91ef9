#include <gtest/gtest.h>

#include "stagekit/error.hpp"
#include "stagekit/runtime/session.hpp"
#include "stagekit/syntax/parser.hpp"
#include "stagekit/syntax/unparse.hpp"
#include "stagekit/transforms/transforms.hpp"

using namespace stagekit;
using namespace stagekit::runtime;
using transforms::convert;
using transforms::PassConfig;

namespace {

syntax::NodePtr parse(const std::string& src) { return syntax::parse_module(src, "t.msl"); }

std::string converted(const std::string& src, const PassConfig& cfg = {}) {
  return syntax::unparse(*convert(*parse(src), cfg).module);
}

// Runs `fn(args)` natively on the module and returns repr or "error:<kind>".
std::string run(const syntax::NodePtr& module, const std::string& fn, std::vector<Value> args) {
  Session s;
  try {
    s.load(module);
    return repr_value(s.call_function(fn, std::move(args)));
  } catch (const Error& e) {
    return "error:" + std::string(to_string(e.kind()));
  }
}

// Original and converted program agree on every argument vector.
void expect_same(const std::string& src, const std::string& fn,
                 const std::vector<std::vector<Value>>& inputs) {
  auto original = parse(src);
  auto result = convert(*original);
  for (const auto& args : inputs) {
    EXPECT_EQ(run(original, fn, args), run(result.module, fn, args))
        << syntax::unparse(*result.module);
  }
}

int count_kind(const syntax::NodePtr& root, syntax::Kind k) {
  int n = 0;
  syntax::walk(root, [&](const syntax::NodePtr& x) { n += x->kind == k; });
  return n;
}

ErrorKind conversion_error(const std::string& src, int* line = nullptr,
                           std::string* pass = nullptr) {
  try {
    convert(*parse(src));
  } catch (const Error& e) {
    if (line && e.span()) *line = e.span()->start_line;
    if (pass) *pass = e.pass();
    return e.kind();
  }
  ADD_FAILURE() << "conversion succeeded";
  return ErrorKind::InternalError;
}

Value f(double x) { return float_value(x); }
Value i(std::int64_t x) { return int_value(x); }

const char* kEverything = R"(
def helper(v):
    return v * 2

def main(n, x):
    total = 0
    acc = []
    for k in range(n):
        if k == 3:
            continue
        if k > 6:
            break
        acc.append(k)
        total += helper(k)
    while x > 1.0 and total > 0:
        x = x / 2.0
    assert total >= 0, "negative"
    y = x if total > 5 else -x
    if not (y > 0) or n == 0:
        return total, y
    return total, acc[0] if len(acc) > 0 else -1
)";

}  // namespace

TEST(Transforms, DefaultPassOrder) {
  const std::vector<std::string> expected = {"directives", "break",   "continue", "return",
                                             "assert",     "lists",   "slices",   "calls",
                                             "control_flow", "ternary", "logical", "wrappers"};
  EXPECT_EQ(transforms::default_passes(), expected);
  EXPECT_THROW(transforms::check_pass_name("nope"), Error);
}

TEST(Transforms, ConditionalShape) {
  const std::string out = converted("def f(x):\n    if x > 0:\n        x = x * x\n    return x\n");
  EXPECT_NE(out.find("def ag__if_true_"), std::string::npos) << out;
  EXPECT_NE(out.find("def ag__if_false_"), std::string::npos) << out;
  EXPECT_NE(out.find("x = ag__.if_stmt(x > 0, ag__if_true_"), std::string::npos) << out;
  EXPECT_NE(out.find("(\"x\",))"), std::string::npos) << out;
  EXPECT_NE(out.find("return ag__.function_scope(\"f\", ag__body_"), std::string::npos) << out;
}

TEST(Transforms, WhileShape) {
  const std::string out = converted("def f(x, eps):\n    while x > eps:\n        x = g(x)\n"
                                    "    return x\n");
  EXPECT_NE(out.find("def ag__loop_test_"), std::string::npos) << out;
  EXPECT_NE(out.find("(x,), (\"x\",), None, (eps,))"), std::string::npos) << out;
  EXPECT_NE(out.find("ag__.converted_call(g, x)"), std::string::npos) << out;
}

TEST(Transforms, DeadBranchOutputNotReturned) {
  const std::string out = converted("def f(c):\n    x = 1\n    if c:\n        y = 1\n"
                                    "        x = 2\n    return x\n");
  EXPECT_NE(out.find("return x\n"), std::string::npos) << out;
  EXPECT_EQ(out.find("return x, y"), std::string::npos) << out;
  EXPECT_EQ(out.find("\"y\""), std::string::npos) << out;
}

TEST(Transforms, UndefinedSentinelForNewSymbols) {
  const std::string src = "def f(c):\n    if c:\n        y = 1\n    else:\n        y = 2\n"
                          "    return y\n";
  EXPECT_NE(converted(src).find("y = ag__.Undefined(\"y\")"), std::string::npos);
  expect_same(src, "f", {{bool_value(true)}, {bool_value(false)}});
}

TEST(Transforms, ContinueSumIsFour) {
  const std::string src = R"(
def f():
    s = 0
    for i in range(5):
        if i % 2 == 0:
            continue
        s = s + i
    return s
)";
  auto result = convert(*parse(src));
  EXPECT_EQ(run(result.module, "f", {}), "4");
  EXPECT_EQ(run(parse(src), "f", {}), "4");
}

TEST(Transforms, EarlyReturnBecomesSingleReturn) {
  const std::string src = R"(
def f(x):
    if x > 0.0:
        return x * 2.0
    return -x
)";
  PassConfig only_return;
  only_return.passes = {"return"};
  const std::string out = converted(src, only_return);
  EXPECT_NE(out.find("ag__retval = x * 2.0"), std::string::npos) << out;
  EXPECT_NE(out.find("ag__retval = -x"), std::string::npos) << out;
  EXPECT_EQ(count_kind(convert(*parse(src), only_return).module, syntax::Kind::Return), 1);
  expect_same(src, "f", {{f(3.0)}, {f(-2.0)}});
}

TEST(Transforms, ReturnInsideLoops) {
  const std::string src = R"(
def f(n):
    i = 0
    while i < n:
        if i * i > 10:
            return i
        i = i + 1
    for j in range(3):
        if j == n:
            return 100 + j
    return -1
)";
  expect_same(src, "f", {{i(0)}, {i(2)}, {i(8)}});
}

TEST(Transforms, BreakAndContinueSemantics) {
  const std::string src = R"(
def f(n, k):
    found = -1
    i = 0
    while i < n:
        if i * i > k:
            found = i
            break
        i = i + 1
    s = 0
    for j in range(n):
        if j == 2:
            continue
        if j > 5:
            break
        s = s + j
    return found, s
)";
  expect_same(src, "f", {{i(10), i(20)}, {i(3), i(100)}, {i(0), i(0)}});
}

TEST(Transforms, EverythingPreservesSemanticsAndStructure) {
  expect_same(kEverything, "main", {{i(0), f(3.0)}, {i(5), f(9.0)}, {i(9), f(0.5)}});
  auto out = convert(*parse(kEverything)).module;
  for (auto k : {syntax::Kind::If, syntax::Kind::While, syntax::Kind::For, syntax::Kind::Break,
                 syntax::Kind::Continue, syntax::Kind::Assert, syntax::Kind::Ternary,
                 syntax::Kind::BoolOp, syntax::Kind::ListLiteral, syntax::Kind::Subscript}) {
    EXPECT_EQ(count_kind(out, k), 0) << syntax::kind_name(k);
  }
  // Every function ends in its only return statement.
  syntax::walk(out, [](const syntax::NodePtr& n) {
    if (n->kind != syntax::Kind::FunctionDef) return;
    int returns = 0;
    for (const auto& st : n->body) returns += st->kind == syntax::Kind::Return;
    EXPECT_LE(returns, 1) << n->text;
    if (returns) {
      EXPECT_EQ(n->body.back()->kind, syntax::Kind::Return) << n->text;
    }
  });
  // Output is valid source.
  syntax::ParseOptions po;
  po.allow_reserved = true;
  EXPECT_NO_THROW(syntax::parse_module(syntax::unparse(*out), "r.msl", po));
}

TEST(Transforms, PassIdempotence) {
  for (const char* pass : {"break", "continue", "return", "assert", "slices", "ternary",
                           "logical"}) {
    PassConfig cfg;
    cfg.passes = {pass};
    auto once = convert(*parse(kEverything), cfg).module;
    auto twice = convert(*once, cfg).module;
    EXPECT_TRUE(syntax::tree_equal(*once, *twice)) << pass;
  }
}

TEST(Transforms, ListsAndSlices) {
  const std::string src = R"(
def f(n):
    l = []
    for i in range(n):
        l.append(i * i)
    a = [1, 2, 3]
    a[1] = 20
    a[0] += 5
    last = l.pop()
    return l, last, a, a[1]
)";
  const std::string out = converted(src);
  EXPECT_NE(out.find("l = ag__.list_append(l, i * i)"), std::string::npos) << out;
  EXPECT_NE(out.find("l, last = ag__.list_pop(l)"), std::string::npos) << out;
  EXPECT_NE(out.find("a = ag__.setitem(a, 1, 20)"), std::string::npos) << out;
  expect_same(src, "f", {{i(4)}, {i(1)}, {i(0)}});
}

TEST(Transforms, ElementTypeDirective) {
  const std::string src = R"(
def f(n):
    out = []
    ag.set_element_type(out, float)
    for i in range(n):
        out.append(1.5)
    return out
)";
  const std::string out = converted(src);
  EXPECT_NE(out.find("out = ag__.typed_list(\"f64\")"), std::string::npos) << out;
  EXPECT_EQ(out.find("set_element_type"), std::string::npos) << out;
}

TEST(Transforms, LoopOptionsDirective) {
  PassConfig cfg;
  cfg.passes = {"directives"};
  auto m = convert(*parse("def f(x):\n    while x > 1:\n        ag.set_loop_options(10)\n"
                          "        x = x - 1\n    return x\n"),
                   cfg)
               .module;
  const auto& loop = *m->body[0]->body[0];
  EXPECT_EQ(loop.annotations.at("max_iterations"), "10");
  EXPECT_EQ(loop.body.size(), 1u);
  EXPECT_NE(converted("def f(x):\n    while x > 1:\n        ag.set_loop_options(10)\n"
                      "        x = x - 1\n    return x\n")
                .find("ag__.loop_options(10)"),
            std::string::npos);
}

TEST(Transforms, DirectiveErrors) {
  int line = 0;
  std::string pass;
  EXPECT_EQ(conversion_error("def f(x):\n    ag.set_loop_options(3)\n    return x\n", &line,
                             &pass),
            ErrorKind::DirectiveError);
  EXPECT_EQ(line, 2);
  EXPECT_EQ(pass, "directives");
  EXPECT_EQ(conversion_error("def f(x):\n    while x > 0:\n        x = x - 1\n"
                             "        ag.set_loop_options(3)\n    return x\n",
                             &line),
            ErrorKind::DirectiveError);
  EXPECT_EQ(line, 4);
}

TEST(Transforms, ListPatternError) {
  int line = 0;
  std::string pass;
  EXPECT_EQ(conversion_error("def f(x):\n    y = 1\n    g(x).append(1)\n    return x\n", &line,
                             &pass),
            ErrorKind::ListPatternError);
  EXPECT_EQ(line, 3);
  EXPECT_EQ(pass, "lists");
  EXPECT_EQ(conversion_error("def f(l):\n    return g(l.pop())\n"), ErrorKind::ListPatternError);
}

TEST(Transforms, QualifiedOutputRejected) {
  EXPECT_EQ(conversion_error("def f(a, c):\n    if c:\n        a.b = 1\n    return a.b\n"),
            ErrorKind::ConversionError);
}

TEST(Transforms, CallsKeepIntrinsics) {
  const std::string out = converted("def f(a, x):\n    print(x)\n    return m.tanh(a(x))\n");
  EXPECT_NE(out.find("ag__.converted_call(print, x)"), std::string::npos) << out;
  EXPECT_NE(out.find("m.tanh(ag__.converted_call(a, x))"), std::string::npos) << out;
  PassConfig shallow;
  shallow.recursive = false;
  const std::string plain = converted("def f(a, x):\n    print(x)\n    return a(x)\n", shallow);
  EXPECT_NE(plain.find("return a(x)"), std::string::npos) << plain;
}

TEST(Transforms, LogicalForms) {
  const std::string out = converted(
      "def f(a, b, c):\n    return a and b or not c, a == b, a != c, 1 < 2 < 3\n");
  EXPECT_NE(out.find("ag__.or_(ag__.and_(a, ag__thunk_"), std::string::npos) << out;
  EXPECT_NE(out.find("ag__.not_(c)"), std::string::npos) << out;
  EXPECT_NE(out.find("ag__.eq_(a, b)"), std::string::npos) << out;
  EXPECT_NE(out.find("ag__.ne_(a, c)"), std::string::npos) << out;
  EXPECT_NE(out.find("ag__.and_(1 < 2, ag__thunk_"), std::string::npos) << out;
}

TEST(Transforms, ShortCircuitPreserved) {
  const std::string src = R"(
def crash():
    return 1 / 0

def f(a):
    x = a and crash() > 0.0
    y = not a or crash() > 0.0
    return x, y
)";
  expect_same(src, "f", {{bool_value(false)}, {bool_value(true)}});
  EXPECT_EQ(run(convert(*parse(src)).module, "f", {bool_value(false)}), "(False, True)");
}

TEST(Transforms, NestedTernary) {
  const std::string src =
      "def f(x):\n    return 1 if x > 0 else (2 if x < -5 else 3)\n";
  expect_same(src, "f", {{i(1)}, {i(-9)}, {i(-1)}});
}

TEST(Transforms, CountersStartAboveExisting) {
  PassConfig ternary;
  ternary.passes = {"ternary"};
  auto m = parse("def f(x):\n    return 1 if x > 0 else 2\n");
  auto once = convert(*m, ternary).module;
  const std::string text = syntax::unparse(*once);
  EXPECT_NE(text.find("ag__thunk_1"), std::string::npos) << text;
  // A second conversion of the same (already converted) tree must not reuse 1 or 2.
  syntax::ParseOptions po;
  po.allow_reserved = true;
  auto again = syntax::parse_module(text + "def g(y):\n    return 3 if y else 4\n", "t.msl", po);
  const std::string text2 = syntax::unparse(*convert(*again, ternary).module);
  EXPECT_NE(text2.find("ag__thunk_3"), std::string::npos) << text2;
}

TEST(Transforms, SourceMapCoversEveryNode) {
  auto result = convert(*parse(kEverything));
  int nodes = 0;
  syntax::walk(result.module, [&](const syntax::NodePtr& n) {
    ++nodes;
    ASSERT_TRUE(result.source_map.count(n->id));
    EXPECT_GT(result.source_map.at(n->id).span.start_line, 0);
  });
  EXPECT_EQ(static_cast<int>(result.source_map.size()), nodes);
  EXPECT_FALSE(result.report.empty());
}

TEST(Transforms, InputModuleUntouched) {
  auto m = parse(kEverything);
  const std::string before = syntax::unparse(*m);
  convert(*m);
  EXPECT_EQ(syntax::unparse(*m), before);
}

TEST(Transforms, TrivialFunctionOnlyWrapped) {
  PassConfig cfg;
  const std::string out = converted("def f(a, b):\n    c = a + b\n    return c * 2\n", cfg);
  EXPECT_EQ(out,
            "def f(a, b):\n"
            "    def ag__body_1():\n"
            "        c = a + b\n"
            "        return c * 2\n"
            "    return ag__.function_scope(\"f\", ag__body_1)\n");
}

TEST(Transforms, BranchValueCarriedAcrossIterations) {
  const std::string src = R"(
def f(n):
    i = 0
    y = 0
    last = -1
    while i < n:
        if i == 2:
            z = i * 10
        if i > 2:
            last = z
        i = i + 1
    return last
)";
  expect_same(src, "f", {{i(5)}, {i(1)}});
}
