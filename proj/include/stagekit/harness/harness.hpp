#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "stagekit/graph/execute.hpp"
#include "stagekit/runtime/session.hpp"

namespace stagekit::harness {

// ------------------------------------------------------------------ fuzzing

struct FuzzSpec {
  std::uint64_t seed = 0;
  int max_stmts = 12;
  int max_depth = 3;
  int max_loop_bound = 6;
  // Subset of: if while for break continue lists ternary logical calls.
  std::set<std::string> features = all_features();

  static std::set<std::string> all_features();
};

// Throws UsageError on an unknown name. Accepts a comma-separated list.
std::set<std::string> parse_features(const std::string& list);

// Generated programs define `f(x, y, k, flag)` with x, y: f64, k: i64 and
// flag: bool, and return a tuple of scalars.
struct GeneratedProgram {
  std::string source;
  std::string entry = "f";
  std::vector<runtime::ParamSpec> params;  // tensor placeholders, staged mode
};

GeneratedProgram gen_program(const FuzzSpec& spec);

// Input vector `index` for a program generated from `seed`.
std::vector<runtime::Value> gen_inputs(std::uint64_t seed, int index);

// ------------------------------------------------------ differential tests

enum class DiffMode { Concrete, StagedParams };
enum class Verdict { Match, Mismatch, ConversionError, StagingError };

std::string_view to_string(Verdict v);

struct DiffReport {
  std::string program;
  std::vector<std::string> inputs;
  std::string native;     // original program, interpreted
  std::string converted;  // converted program, interpreted
  std::string staged;     // converted program, traced then executed
  Verdict verdict = Verdict::Match;
  std::string detail;

  std::string to_text() const;
};

// Relative tolerance for f64 comparisons; ints and bools compare exactly.
inline constexpr double kTolerance = 1e-9;

DiffReport diff_one(const std::string& source, const std::string& entry,
                    const std::vector<runtime::Value>& inputs, DiffMode mode);

struct FuzzSummary {
  int programs = 0;
  int runs = 0;
  std::vector<std::pair<std::uint64_t, DiffReport>> failures;
};

// Seeds [first, first + count), 3 inputs each, both modes. Failure artifacts
// `<seed>.msl` and `<seed>.report.txt` go to `artifact_dir` when non-empty.
FuzzSummary run_fuzz(std::uint64_t first, int count, const std::set<std::string>& features,
                     const std::string& artifact_dir = {});

// ------------------------------------------------------------------ corpus

// One entry of `<dir>/manifest.json`. Feeds are literals in parameter order;
// they are the native arguments and, for tensors and trees, the staged feeds.
struct CorpusCase {
  std::string name;
  std::string file;
  std::string entry;
  runtime::Backend backend = runtime::Backend::Graph;
  std::vector<std::pair<std::string, std::string>> feeds;
};

// A missing manifest means an empty corpus. Throws UsageError on bad JSON.
std::vector<CorpusCase> load_manifest(const std::string& dir);

struct CorpusOutputs {
  std::string converted;  // golden: <name>.converted.msl
  std::string sexpr;      // golden: <name>.sexpr
  std::string dot;        // golden: <name>.dot
  std::vector<graph::RtValue> native, reconverted, staged;
};

CorpusOutputs corpus_outputs(const std::string& dir, const CorpusCase& c);

struct CorpusResult {
  std::string name;
  bool ok = true;
  std::vector<std::string> problems;  // one line each, naming the file
};

// Runs every manifest entry three ways and checks the golden files under
// `<dir>/golden`. With `update` the golden files are rewritten instead.
std::vector<CorpusResult> run_corpus(const std::string& dir, bool update = false);

// -------------------------------------------------------------- staging

// How to trace `entry` for a given argument vector: tensors and trees become
// placeholders with matching feeds unless `concrete`; everything else is
// baked in as a concrete parameter.
struct StagingPlan {
  std::vector<runtime::ParamSpec> params;
  std::map<std::string, graph::RtValue> feeds;
};

StagingPlan plan_staging(const syntax::Node& module, const std::string& entry,
                         const std::vector<runtime::Value>& inputs, bool concrete = false);

// Parameter names of a top-level function. Throws UnknownCallee.
std::vector<std::string> param_names(const syntax::Node& module, const std::string& entry);

// ------------------------------------------------------------- utilities

// Compares a native result against graph outputs under the tolerance policy.
bool outputs_match(const std::vector<graph::RtValue>& a, const std::vector<graph::RtValue>& b,
                   double tol = kTolerance);
std::string format_outputs(const std::vector<graph::RtValue>& v);

}  // namespace stagekit::harness
