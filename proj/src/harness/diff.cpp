// Three-way differential execution: original interpreted, converted
// interpreted, converted traced and executed.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "stagekit/error.hpp"
#include "stagekit/harness/harness.hpp"
#include "stagekit/syntax/parser.hpp"
#include "stagekit/transforms/transforms.hpp"

namespace stagekit::harness {

using graph::RtValue;
using graph::Tensor;
using runtime::Value;

namespace {

struct Outcome {
  bool ok = false;
  std::vector<RtValue> outs;
  ErrorKind kind = ErrorKind::InternalError;
  std::string message;

  std::string text() const {
    return ok ? format_outputs(outs) : "error " + std::string(stagekit::to_string(kind)) + ": " + message;
  }
};

template <typename F>
Outcome attempt(F&& f) {
  Outcome o;
  try {
    o.outs = f();
    o.ok = true;
  } catch (const Error& e) {
    o.kind = e.kind();
    o.message = e.message();
  }
  return o;
}

Outcome interpret(const syntax::NodePtr& module, const std::string& entry,
                  const std::vector<Value>& inputs) {
  return attempt([&] {
    runtime::Session s;
    s.load(module);
    return runtime::flatten_result(s.call_function(entry, inputs));
  });
}

Outcome stage(const syntax::NodePtr& module, const std::string& entry,
              const std::vector<Value>& inputs, DiffMode mode) {
  return attempt([&] {
    auto plan = plan_staging(*module, entry, inputs, mode == DiffMode::Concrete);
    runtime::Session s;
    s.load(module);
    graph::Graph g = s.trace(entry, plan.params);
    return graph::execute(g, plan.feeds).outputs;
  });
}

bool same(const Outcome& a, const Outcome& b) {
  if (a.ok != b.ok) return false;
  return a.ok ? outputs_match(a.outs, b.outs) : a.kind == b.kind;
}

}  // namespace

std::vector<std::string> param_names(const syntax::Node& module, const std::string& entry) {
  for (const auto& st : module.body) {
    if (st->kind == syntax::Kind::FunctionDef && st->text == entry) {
      std::vector<std::string> names;
      for (const auto& p : st->kids) names.push_back(p->text);
      return names;
    }
  }
  throw Error(ErrorKind::UnknownCallee, "no function named '" + entry + "'");
}

StagingPlan plan_staging(const syntax::Node& module, const std::string& entry,
                         const std::vector<Value>& inputs, bool concrete) {
  const auto names = param_names(module, entry);
  if (names.size() != inputs.size()) {
    throw Error(ErrorKind::TypeError, entry + "() takes " + std::to_string(names.size()) +
                                          " arguments but " + std::to_string(inputs.size()) +
                                          " were given");
  }
  StagingPlan plan;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const Value& v = inputs[k];
    const Tensor* t = v.get<Tensor>();
    if (concrete || (!t && !v.is<runtime::Tree>())) {
      plan.params.push_back(runtime::ParamSpec::concrete(names[k], v));
    } else if (t) {
      plan.params.push_back(
          runtime::ParamSpec::tensor(names[k], graph::TypeSig::tensor(t->dtype, t->shape)));
      plan.feeds[names[k]] = *t;
    } else {
      plan.params.push_back(runtime::ParamSpec::tree(names[k]));
      const auto arrays = runtime::encode_tree(v.as<runtime::Tree>());
      const auto fnames = runtime::tree_feed_names(names[k]);
      plan.feeds[fnames[0]] = arrays.values;
      plan.feeds[fnames[1]] = arrays.left;
      plan.feeds[fnames[2]] = arrays.right;
      plan.feeds[fnames[3]] = arrays.node;
    }
  }
  return plan;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Match: return "match";
    case Verdict::Mismatch: return "mismatch";
    case Verdict::ConversionError: return "conversion_error";
    case Verdict::StagingError: return "staging_error";
  }
  return "?";
}

std::string format_outputs(const std::vector<RtValue>& v) {
  std::string s = "(";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + graph::format_rt(v[k]);
  return s + ")";
}

bool outputs_match(const std::vector<RtValue>& a, const std::vector<RtValue>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto* ta = std::get_if<Tensor>(&a[k]);
    const auto* tb = std::get_if<Tensor>(&b[k]);
    if (ta && tb) {
      if (!graph::approx_equal(*ta, *tb, tol)) return false;
      continue;
    }
    if (ta || tb) return false;
    const auto& la = *std::get<1>(a[k]);
    const auto& lb = *std::get<1>(b[k]);
    if (la.items.size() != lb.items.size()) return false;
    for (std::size_t j = 0; j < la.items.size(); ++j) {
      if (!graph::approx_equal(la.items[j], lb.items[j], tol)) return false;
    }
  }
  return true;
}

std::string DiffReport::to_text() const {
  std::string s = "verdict: " + std::string(to_string(verdict)) + "\n";
  s += "inputs:";
  for (const auto& i : inputs) s += " " + i;
  s += "\nnative: " + native + "\nconverted: " + converted + "\nstaged: " + staged + "\n";
  if (!detail.empty()) s += "detail: " + detail + "\n";
  s += "program:\n" + program;
  return s;
}

DiffReport diff_one(const std::string& source, const std::string& entry,
                    const std::vector<Value>& inputs, DiffMode mode) {
  DiffReport r;
  r.program = source;
  for (const auto& v : inputs) r.inputs.push_back(runtime::repr_value(v));
  syntax::NodePtr original;
  try {
    original = syntax::parse_module(source, "<fuzz>");
  } catch (const Error& e) {
    r.verdict = Verdict::ConversionError;
    r.detail = e.what();
    return r;
  }
  const Outcome native = interpret(original, entry, inputs);
  r.native = native.text();
  syntax::NodePtr converted;
  try {
    converted = transforms::convert(*original).module;
  } catch (const Error& e) {
    r.verdict = Verdict::ConversionError;
    r.detail = e.what();
    return r;
  }
  const Outcome conv = interpret(converted, entry, inputs);
  r.converted = conv.text();
  const Outcome staged = stage(converted, entry, inputs, mode);
  r.staged = staged.text();
  if (!same(native, conv)) {
    r.verdict = Verdict::Mismatch;
    r.detail = "converted program disagrees with the original";
  } else if (!same(native, staged)) {
    r.verdict = native.ok && !staged.ok ? Verdict::StagingError : Verdict::Mismatch;
    r.detail = std::string("staged execution disagrees (") +
               (mode == DiffMode::Concrete ? "concrete" : "staged_params") + " mode)";
  }
  return r;
}

FuzzSummary run_fuzz(std::uint64_t first, int count, const std::set<std::string>& features,
                     const std::string& artifact_dir) {
  FuzzSummary summary;
  std::mutex mu;
  std::atomic<int> next{0};
  std::atomic<int> runs{0};
  auto worker = [&] {
    for (int n = next++; n < count; n = next++) {
      const std::uint64_t seed = first + static_cast<std::uint64_t>(n);
      FuzzSpec spec;
      spec.seed = seed;
      spec.features = features;
      const auto prog = gen_program(spec);
      for (int idx = 0; idx < 3; ++idx) {
        bool failed = false;
        for (DiffMode mode : {DiffMode::Concrete, DiffMode::StagedParams}) {
          auto rep = diff_one(prog.source, prog.entry, gen_inputs(seed, idx), mode);
          ++runs;
          if (rep.verdict == Verdict::Match) continue;
          rep.detail += " [input " + std::to_string(idx) + "]";
          std::lock_guard<std::mutex> lock(mu);
          summary.failures.emplace_back(seed, rep);
          failed = true;
          break;
        }
        if (failed) break;
      }
    }
  };
  const unsigned hw = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < hw; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  summary.programs = count;
  summary.runs = runs;
  std::sort(summary.failures.begin(), summary.failures.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  if (!artifact_dir.empty() && !summary.failures.empty()) {
    std::filesystem::create_directories(artifact_dir);
    for (const auto& [seed, rep] : summary.failures) {
      const auto base = std::filesystem::path(artifact_dir) / std::to_string(seed);
      std::ofstream(base.string() + ".msl") << rep.program;
      std::ofstream(base.string() + ".report.txt") << rep.to_text();
    }
  }
  return summary;
}

}  // namespace stagekit::harness
