// stagekit command-line driver.
//
// Exit codes: 0 ok, 1 usage, 2 conversion, 3 staging, 4 runtime.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stagekit/analysis/dataflow.hpp"
#include "stagekit/error.hpp"
#include "stagekit/graph/gradient.hpp"
#include "stagekit/graph/sexpr.hpp"
#include "stagekit/harness/harness.hpp"
#include "stagekit/syntax/parser.hpp"
#include "stagekit/syntax/unparse.hpp"
#include "stagekit/transforms/transforms.hpp"

using namespace stagekit;

namespace {

constexpr int kUsage = 1;

int exit_code(Phase phase) {
  switch (phase) {
    case Phase::Conversion: return 2;
    case Phase::Staging: return 3;
    case Phase::Runtime: return 4;
  }
  return kUsage;
}

// Raised from inside a phase so main() can pick the exit code.
struct PhaseError {
  Error error;
  Phase phase;
};

template <typename F>
auto in_phase(Phase phase, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::UsageError) throw;
    throw PhaseError{e, phase};
  }
}

struct Options {
  std::string file;
  std::string entry = "f";
  std::vector<std::string> feeds;  // name=literal
  std::vector<std::string> args;   // positional literals
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::UsageError, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

syntax::NodePtr parse(const std::string& file) {
  const std::string text = read_file(file);
  return in_phase(Phase::Conversion, [&] { return syntax::parse_module(text, file); });
}

syntax::NodePtr convert(const syntax::NodePtr& module, transforms::PassConfig config = {}) {
  return in_phase(Phase::Conversion, [&] { return transforms::convert(*module, config).module; });
}

// Argument vector for `entry`: positional --arg values first, the rest by name.
std::vector<runtime::Value> arguments(const syntax::Node& module, const Options& o, Phase phase) {
  const auto names = in_phase(phase, [&] { return harness::param_names(module, o.entry); });
  std::map<std::string, runtime::Value> named;
  for (const auto& f : o.feeds) {
    const auto eq = f.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::UsageError, "feed '" + f + "' is not name=value");
    const std::string name = f.substr(0, eq);
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw Error(ErrorKind::UsageError, o.entry + "() has no parameter '" + name + "'");
    }
    named[name] = runtime::parse_feed(f.substr(eq + 1));
  }
  if (o.args.size() > names.size()) throw Error(ErrorKind::UsageError, "too many --arg values");
  std::vector<runtime::Value> out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (k < o.args.size()) {
      out.push_back(runtime::parse_feed(o.args[k]));
    } else if (auto it = named.find(names[k]); it != named.end()) {
      out.push_back(it->second);
    } else {
      throw PhaseError{Error(ErrorKind::MissingBinding, "no feed for parameter '" + names[k] + "'"), phase};
    }
  }
  return out;
}

runtime::Backend backend_named(const std::string& s) {
  return s == "sexpr" ? runtime::Backend::Sexpr : runtime::Backend::Graph;
}

struct Staged {
  graph::Graph graph;
  std::map<std::string, graph::RtValue> feeds;
};

Staged stage(const Options& o, runtime::Backend backend) {
  auto module = convert(parse(o.file));
  auto inputs = arguments(*module, o, Phase::Staging);
  return in_phase(Phase::Staging, [&] {
    auto plan = harness::plan_staging(*module, o.entry, inputs);
    runtime::SessionOptions opts;
    opts.backend = backend;
    runtime::Session s(opts);
    s.load(module);
    Staged out{s.trace(o.entry, plan.params), std::move(plan.feeds)};
    graph::validate(out.graph);
    return out;
  });
}

void print_outputs(const graph::ExecResult& r) {
  for (const auto& line : r.log) std::cout << line << "\n";
  for (const auto& v : r.outputs) std::cout << graph::format_rt(v) << "\n";
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("file", o.file, "MSL source file")->required();
  cmd->add_option("--entry", o.entry, "function to run");
  cmd->add_option("--feed", o.feeds, "name=dtype[shape]:values")->take_all();
  cmd->add_option("--arg", o.args, "positional argument literal")->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Staging compiler for a Python-syntax subset"};
  app.set_version_flag("--version", "stagekit " STAGEKIT_VERSION);
  app.require_subcommand(1);

  Options o;
  std::function<int()> action;

  auto* conv = app.add_subcommand("convert", "print the converted program");
  std::string emit = "source";
  std::vector<std::string> passes;
  bool shallow = false;
  conv->add_option("file", o.file)->required();
  conv->add_option("--emit", emit)->check(CLI::IsMember({"source", "ast"}));
  conv->add_option("--pass", passes, "run only these passes, in order")->take_all();
  conv->add_flag("--no-recursive", shallow, "convert only print, range and len calls");
  conv->callback([&] {
    action = [&] {
      transforms::PassConfig config;
      config.recursive = !shallow;
      if (!passes.empty()) {
        for (const auto& p : passes) transforms::check_pass_name(p);
        config.passes = passes;
      }
      auto out = convert(parse(o.file), config);
      std::cout << (emit == "ast" ? syntax::pretty_print(*out) : syntax::unparse(*out));
      return 0;
    };
  });

  auto* analyze = app.add_subcommand("analyze", "dump dataflow facts");
  std::string analysis = "liveness";
  analyze->add_option("file", o.file)->required();
  analyze->add_option("--pass", analysis)
      ->check(CLI::IsMember({"liveness", "reaching", "activity", "cfg"}));
  analyze->callback([&] {
    action = [&] {
      auto module = parse(o.file);
      auto facts = in_phase(Phase::Conversion, [&] { return analysis::analyze(*module); });
      std::cout << (analysis == "cfg" ? analysis::dump_cfg(*module, facts)
                                      : analysis::dump(*module, facts));
      return 0;
    };
  });

  auto* run = app.add_subcommand("run", "run a function natively or staged");
  std::string mode = "interpret";
  add_common(run, o);
  std::string run_backend = "graph";
  run->add_option("--mode", mode)->check(CLI::IsMember({"interpret", "staged"}));
  run->add_option("--backend", run_backend)->check(CLI::IsMember({"graph", "sexpr"}));
  run->callback([&] {
    action = [&] {
      if (mode == "staged") {
        auto st = stage(o, backend_named(run_backend));
        print_outputs(in_phase(Phase::Runtime, [&] { return graph::execute(st.graph, st.feeds); }));
        return 0;
      }
      auto module = parse(o.file);
      auto inputs = arguments(*module, o, Phase::Runtime);
      runtime::Session s;
      auto result = in_phase(Phase::Runtime, [&] {
        s.load(module);
        return runtime::flatten_result(s.call_function(o.entry, inputs));
      });
      print_outputs({result, s.log()});
      return 0;
    };
  });

  auto* graph_cmd = app.add_subcommand("graph", "trace a function and print the graph");
  std::string backend = "graph";
  std::string format = "sexpr";
  add_common(graph_cmd, o);
  graph_cmd->add_option("--backend", backend)->check(CLI::IsMember({"graph", "sexpr"}));
  graph_cmd->add_option("--emit", format)->check(CLI::IsMember({"sexpr", "dot"}));
  graph_cmd->callback([&] {
    action = [&] {
      auto st = stage(o, backend_named(backend));
      std::cout << (format == "dot" ? graph::to_dot(st.graph) : graph::to_sexpr(st.graph));
      return 0;
    };
  });

  auto* grad = app.add_subcommand("grad", "reverse-mode gradient of a scalar function");
  std::vector<std::string> wrt;
  add_common(grad, o);
  grad->add_option("--wrt", wrt, "parameters to differentiate by")->required()->delimiter(',');
  grad->add_option("--at", o.feeds, "alias of --feed")->take_all();
  grad->callback([&] {
    action = [&] {
      auto st = stage(o, runtime::Backend::Sexpr);
      auto g = in_phase(Phase::Staging, [&] {
        if (st.graph.main.outputs.empty()) throw Error(ErrorKind::UsageError, o.entry + "() returns nothing");
        return graph::gradient(st.graph, st.graph.main.outputs[0], wrt);
      });
      auto r = in_phase(Phase::Runtime, [&] { return graph::execute(g, st.feeds); });
      for (const auto& line : r.log) std::cout << line << "\n";
      std::cout << "value " << graph::format_rt(r.outputs[0]) << "\n";
      for (std::size_t k = 0; k < wrt.size(); ++k) {
        std::cout << "d/d" << wrt[k] << " " << graph::format_rt(r.outputs[k + 1]) << "\n";
      }
      return 0;
    };
  });

  auto* fuzz = app.add_subcommand("fuzz", "differential testing on generated programs");
  std::uint64_t seed = 0;
  int count = 100;
  std::string features;
  std::string out_dir = "fuzz-failures";
  fuzz->add_option("--seed", seed, "first seed");
  fuzz->add_option("--count", count)->check(CLI::NonNegativeNumber);
  fuzz->add_option("--features", features, "comma-separated feature subset");
  fuzz->add_option("--out", out_dir, "directory for failure artifacts");
  fuzz->callback([&] {
    action = [&] {
      auto set = features.empty() ? harness::FuzzSpec::all_features() : harness::parse_features(features);
      auto summary = harness::run_fuzz(seed, count, set, out_dir);
      for (const auto& [s, rep] : summary.failures) {
        std::cerr << out_dir << "/" << s << ".msl: " << harness::to_string(rep.verdict) << ": "
                  << rep.detail << "\n";
      }
      std::cout << summary.programs << " programs, " << summary.runs << " runs, "
                << summary.failures.size() << " failures\n";
      return summary.failures.empty() ? 0 : 4;
    };
  });

  auto* corpus = app.add_subcommand("corpus", "check the golden corpus");
  std::string dir;
  bool update = false;
  corpus->add_option("dir", dir)->required();
  corpus->add_flag("--update", update, "rewrite golden files");
  corpus->callback([&] {
    action = [&] {
      int failed = 0;
      for (const auto& r : harness::run_corpus(dir, update)) {
        std::cout << (r.ok ? "ok   " : "FAIL ") << r.name << "\n";
        for (const auto& p : r.problems) std::cerr << p << "\n";
        failed += r.ok ? 0 : 1;
      }
      return failed ? 4 : 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "stagekit: " << e.what() << "\n";
    return kUsage;
  }

  try {
    return action();
  } catch (const PhaseError& e) {
    std::cerr << diagnostic(e.error, e.phase, o.file) << "\n";
    return exit_code(e.phase);
  } catch (const Error& e) {
    std::cerr << "stagekit: " << e.message() << "\n";
    return e.kind() == ErrorKind::UsageError ? kUsage : exit_code(Phase::Runtime);
  }
}
