// Golden-file corpus: each manifest entry is converted, traced, rendered and
// executed, and the renderings are compared byte for byte.

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stagekit/error.hpp"
#include "stagekit/graph/sexpr.hpp"
#include "stagekit/harness/harness.hpp"
#include "stagekit/syntax/parser.hpp"
#include "stagekit/syntax/unparse.hpp"
#include "stagekit/transforms/transforms.hpp"

namespace stagekit::harness {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::UsageError, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

runtime::Backend backend_named(const std::string& s) {
  if (s == "graph") return runtime::Backend::Graph;
  if (s == "sexpr") return runtime::Backend::Sexpr;
  throw Error(ErrorKind::UsageError, "unknown backend '" + s + "'");
}

struct Golden {
  const char* suffix;
  std::string CorpusOutputs::*field;
};

constexpr Golden kGoldens[] = {
    {".converted.msl", &CorpusOutputs::converted},
    {".sexpr", &CorpusOutputs::sexpr},
    {".dot", &CorpusOutputs::dot},
};

}  // namespace

std::vector<CorpusCase> load_manifest(const std::string& dir) {
  const fs::path path = fs::path(dir) / "manifest.json";
  if (!fs::exists(path)) return {};
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(slurp(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::UsageError, path.string() + ": " + e.what());
  }
  std::vector<CorpusCase> cases;
  try {
    for (const auto& entry : doc.at("cases")) {
      CorpusCase c;
      c.name = entry.at("name").get<std::string>();
      c.file = entry.at("file").get<std::string>();
      c.entry = entry.at("entry").get<std::string>();
      c.backend = backend_named(entry.value("backend", std::string("graph")));
      if (entry.contains("feeds")) {
        for (const auto& [k, v] : entry.at("feeds").items()) c.feeds.emplace_back(k, v.get<std::string>());
      }
      cases.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::UsageError, path.string() + ": " + e.what());
  }
  return cases;
}

CorpusOutputs corpus_outputs(const std::string& dir, const CorpusCase& c) {
  const fs::path file = fs::path(dir) / c.file;
  const auto original = syntax::parse_module(slurp(file), file.string());
  transforms::PassConfig config;
  config.backend = c.backend == runtime::Backend::Sexpr ? transforms::Backend::Sexpr
                                                         : transforms::Backend::Graph;
  const auto converted = transforms::convert(*original, config).module;

  std::vector<runtime::Value> inputs;
  for (const auto& [name, lit] : c.feeds) inputs.push_back(runtime::parse_feed(lit));

  CorpusOutputs out;
  out.converted = syntax::unparse(*converted);
  {
    runtime::Session s;
    s.load(original);
    out.native = runtime::flatten_result(s.call_function(c.entry, inputs));
  }
  {
    runtime::Session s;
    s.load(converted);
    out.reconverted = runtime::flatten_result(s.call_function(c.entry, inputs));
  }
  const auto plan = plan_staging(*converted, c.entry, inputs);
  runtime::SessionOptions opts;
  opts.backend = c.backend;
  runtime::Session s(opts);
  s.load(converted);
  const graph::Graph g = s.trace(c.entry, plan.params);
  graph::validate(g);
  out.sexpr = graph::to_sexpr(g);
  out.dot = graph::to_dot(g);
  out.staged = graph::execute(g, plan.feeds).outputs;
  return out;
}

std::vector<CorpusResult> run_corpus(const std::string& dir, bool update) {
  std::vector<CorpusResult> results;
  const fs::path golden = fs::path(dir) / "golden";
  for (const auto& c : load_manifest(dir)) {
    CorpusResult r;
    r.name = c.name;
    auto problem = [&](std::string line) {
      r.ok = false;
      r.problems.push_back(std::move(line));
    };
    CorpusOutputs out;
    try {
      out = corpus_outputs(dir, c);
    } catch (const Error& e) {
      problem(c.file + ": " + e.what());
      results.push_back(std::move(r));
      continue;
    }
    if (!outputs_match(out.native, out.reconverted)) {
      problem(c.file + ": converted program gives " + format_outputs(out.reconverted) +
              ", original gives " + format_outputs(out.native));
    }
    if (!outputs_match(out.native, out.staged)) {
      problem(c.file + ": staged execution gives " + format_outputs(out.staged) +
              ", native gives " + format_outputs(out.native));
    }
    for (const auto& g : kGoldens) {
      const fs::path path = golden / (c.name + g.suffix);
      const std::string& actual = out.*g.field;
      if (update) {
        fs::create_directories(golden);
        std::ofstream(path, std::ios::binary) << actual;
        continue;
      }
      if (!fs::exists(path)) {
        problem(path.string() + ": missing golden file");
      } else if (slurp(path) != actual) {
        problem(path.string() + ": output differs from golden file");
      }
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace stagekit::harness
