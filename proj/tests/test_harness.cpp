#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "stagekit/error.hpp"
#include "stagekit/harness/harness.hpp"
#include "stagekit/syntax/parser.hpp"
#include "stagekit/transforms/transforms.hpp"

using namespace stagekit;
using namespace stagekit::harness;
using graph::Tensor;
namespace fs = std::filesystem;

namespace {

FuzzSpec spec(std::uint64_t seed) {
  FuzzSpec s;
  s.seed = seed;
  return s;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("stagekit-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(Generator, SameSeedSameProgram) {
  EXPECT_EQ(gen_program(spec(42)).source, gen_program(spec(42)).source);
  EXPECT_NE(gen_program(spec(42)).source, gen_program(spec(43)).source);
}

TEST(Generator, ZeroStatementsReturnsLiteral) {
  FuzzSpec s = spec(1);
  s.max_stmts = 0;
  EXPECT_EQ(gen_program(s).source, "def f(x, y, k, flag):\n    return 0\n");
}

TEST(Generator, SweepParsesAndConverts) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto p = gen_program(spec(seed));
    syntax::NodePtr m;
    ASSERT_NO_THROW(m = syntax::parse_module(p.source, "gen.msl")) << p.source;
    ASSERT_NO_THROW(transforms::convert(*m)) << p.source;
  }
}

TEST(Generator, FeatureSubsetIsRespected) {
  FuzzSpec s = spec(5);
  s.features = parse_features("if");
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    s.seed = seed;
    const auto src = gen_program(s).source;
    EXPECT_EQ(src.find("while"), std::string::npos) << src;
    EXPECT_EQ(src.find("for "), std::string::npos) << src;
    EXPECT_EQ(src.find("def h0"), std::string::npos) << src;
  }
  EXPECT_THROW(parse_features("if,goto"), Error);
}

TEST(Generator, InputsAreReplayable) {
  const auto a = gen_inputs(9, 2);
  const auto b = gen_inputs(9, 2);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_TRUE(runtime::values_equal(a[k], b[k]));
}

TEST(Diff, ContinueSumMatches) {
  const std::string src =
      "def f(n):\n"
      "    s = 0\n"
      "    for i in range(n):\n"
      "        if i % 2 == 0:\n"
      "            continue\n"
      "        s = s + i\n"
      "    return s\n";
  for (DiffMode mode : {DiffMode::Concrete, DiffMode::StagedParams}) {
    auto r = diff_one(src, "f", {Tensor::scalar_i64(5)}, mode);
    EXPECT_EQ(r.verdict, Verdict::Match) << r.to_text();
    EXPECT_EQ(r.native, "(4)");
    EXPECT_EQ(r.staged, "(4)");
  }
}

TEST(Diff, MatchByErrorClass) {
  auto r = diff_one("def f(x):\n    return 1.0 / x\n", "f", {Tensor::scalar_f64(0.0)}, DiffMode::StagedParams);
  EXPECT_EQ(r.verdict, Verdict::Match) << r.to_text();
  EXPECT_NE(r.staged.find("DivisionByZero"), std::string::npos);
}

TEST(Diff, ReportsConversionError) {
  auto r = diff_one("def f(x):\n    return x +\n", "f", {Tensor::scalar_f64(1.0)}, DiffMode::Concrete);
  EXPECT_EQ(r.verdict, Verdict::ConversionError);
  EXPECT_NE(r.to_text().find("verdict: conversion_error"), std::string::npos);
}

TEST(Diff, StagingErrorWhenOnlyTracingFails) {
  // Branches disagree on dtype: fine natively, rejected when staged.
  const std::string src =
      "def f(x):\n"
      "    if x > 0.0:\n"
      "        y = 1.0\n"
      "    else:\n"
      "        y = True\n"
      "    return y\n";
  EXPECT_EQ(diff_one(src, "f", {Tensor::scalar_f64(1.0)}, DiffMode::Concrete).verdict, Verdict::Match);
  EXPECT_EQ(diff_one(src, "f", {Tensor::scalar_f64(1.0)}, DiffMode::StagedParams).verdict,
            Verdict::StagingError);
}

TEST(Diff, SmallFuzzRun) {
  auto s = run_fuzz(100, 20, FuzzSpec::all_features());
  EXPECT_EQ(s.programs, 20);
  EXPECT_EQ(s.runs, 120);
  EXPECT_TRUE(s.failures.empty());
}

TEST(Corpus, EmptyDirectoryHasNoCases) {
  TempDir dir;
  EXPECT_TRUE(run_corpus(dir.path.string()).empty());
}

TEST(Corpus, FullCorpusPasses) {
  const auto results = run_corpus(STAGEKIT_CORPUS_DIR);
  EXPECT_GE(results.size(), 9u);
  for (const auto& r : results) {
    EXPECT_TRUE(r.ok) << r.name << ": " << (r.problems.empty() ? "" : r.problems[0]);
  }
}

TEST(Corpus, TamperedGoldenNamesTheFile) {
  TempDir dir;
  fs::copy(STAGEKIT_CORPUS_DIR, dir.path, fs::copy_options::recursive);
  const auto victim = dir.path / "golden" / "while_halving.sexpr";
  std::ofstream(victim, std::ios::app) << "; tampered\n";
  bool seen = false;
  for (const auto& r : run_corpus(dir.path.string())) {
    if (r.name != "while_halving") {
      EXPECT_TRUE(r.ok) << r.name;
      continue;
    }
    ASSERT_FALSE(r.ok);
    ASSERT_EQ(r.problems.size(), 1u);
    EXPECT_NE(r.problems[0].find("while_halving.sexpr"), std::string::npos) << r.problems[0];
    seen = true;
  }
  EXPECT_TRUE(seen);
}

TEST(Corpus, UpdateWritesGoldens) {
  TempDir dir;
  fs::copy_file(fs::path(STAGEKIT_CORPUS_DIR) / "listing1.msl", dir.path / "listing1.msl");
  std::ofstream(dir.path / "manifest.json")
      << R"({"cases": [{"name": "l1", "file": "listing1.msl", "entry": "f", "feeds": {"x": "f64:-2.0"}}]})";
  ASSERT_FALSE(run_corpus(dir.path.string())[0].ok);
  ASSERT_TRUE(run_corpus(dir.path.string(), true)[0].ok);
  EXPECT_TRUE(fs::exists(dir.path / "golden" / "l1.dot"));
  EXPECT_TRUE(run_corpus(dir.path.string())[0].ok);
}

TEST(Corpus, BadManifestIsUsageError) {
  TempDir dir;
  std::ofstream(dir.path / "manifest.json") << "{\"cases\": [";
  try {
    load_manifest(dir.path.string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UsageError);
  }
}
