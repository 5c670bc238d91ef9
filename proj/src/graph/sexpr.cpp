#include "stagekit/graph/sexpr.hpp"

#include <set>

#include "stagekit/error.hpp"

namespace stagekit::graph {

// ------------------------------------------------------------------ reader

namespace {

class Reader {
 public:
  explicit Reader(std::string_view s) : s_(s) {}

  std::vector<SExpr> all() {
    std::vector<SExpr> out;
    skip();
    while (pos_ < s_.size()) {
      out.push_back(one());
      skip();
    }
    return out;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\n' || s_[pos_] == '\t' ||
                                s_[pos_] == '\r')) {
      ++pos_;
    }
  }

  [[noreturn]] void error(const std::string& what) {
    throw Error(ErrorKind::SyntaxError, "s-expression: " + what + " at offset " + std::to_string(pos_));
  }

  SExpr one() {
    char c = s_[pos_];
    if (c == ')') error("unexpected ')'");
    if (c == '(') {
      ++pos_;
      std::vector<SExpr> items;
      for (;;) {
        skip();
        if (pos_ >= s_.size()) error("unclosed '('");
        if (s_[pos_] == ')') {
          ++pos_;
          return SExpr::list(std::move(items));
        }
        items.push_back(one());
      }
    }
    if (c == '"') {
      ++pos_;
      std::string text;
      for (;;) {
        if (pos_ >= s_.size()) error("unterminated string");
        char d = s_[pos_++];
        if (d == '"') return SExpr::string(std::move(text));
        if (d == '\\') {
          if (pos_ >= s_.size()) error("bad escape");
          char e = s_[pos_++];
          text += e == 'n' ? '\n' : e;
        } else {
          text += d;
        }
      }
    }
    std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != '(' && s_[pos_] != ')' && s_[pos_] != ' ' &&
           s_[pos_] != '\n' && s_[pos_] != '\t' && s_[pos_] != '\r' && s_[pos_] != '"') {
      ++pos_;
    }
    return SExpr::atom(std::string(s_.substr(start, pos_ - start)));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

const std::set<std::string, std::less<>> kBlockHeads{"def", "cond",  "while", "then",
                                                     "else", "test", "body",  "vars"};

std::size_t inline_prefix(const std::string& head) {
  if (head == "def") return 2;
  if (head == "cond") return 1;
  return 0;
}

bool broken(const SExpr& e) {
  if (e.is_atom) return false;
  if (!e.items.empty() && e.items[0].is_atom && kBlockHeads.count(e.items[0].text)) return true;
  for (const auto& x : e.items) {
    if (broken(x)) return true;
  }
  return false;
}

void write(const SExpr& e, int indent, std::string& out) {
  if (e.is_atom) {
    if (!e.quoted) {
      out += e.text;
      return;
    }
    out += '"';
    for (char c : e.text) {
      if (c == '"' || c == '\\') out += '\\';
      if (c == '\n') {
        out += "\\n";
        continue;
      }
      out += c;
    }
    out += '"';
    return;
  }
  out += '(';
  if (!broken(e)) {
    for (std::size_t k = 0; k < e.items.size(); ++k) {
      if (k) out += ' ';
      write(e.items[k], indent, out);
    }
    out += ')';
    return;
  }
  const std::string& head = e.items[0].text;
  out += head;
  if (kBlockHeads.count(head)) {
    const std::size_t prefix = inline_prefix(head);
    for (std::size_t k = 1; k < e.items.size(); ++k) {
      if (k <= prefix) {
        out += ' ';
        write(e.items[k], indent, out);
      } else {
        out += '\n' + std::string(static_cast<std::size_t>(indent + 2), ' ');
        write(e.items[k], indent + 2, out);
      }
    }
  } else {
    for (std::size_t k = 1; k < e.items.size(); ++k) {
      out += ' ';
      write(e.items[k], indent, out);
    }
  }
  out += ')';
}

}  // namespace

std::vector<SExpr> read_sexpr(std::string_view text) { return Reader(text).all(); }

std::string write_sexpr(const std::vector<SExpr>& forms) {
  std::string out;
  for (const auto& f : forms) {
    write(f, 0, out);
    out += '\n';
  }
  return out;
}

// ----------------------------------------------------------------- emitter

namespace {

SExpr A(std::string s) { return SExpr::atom(std::move(s)); }
SExpr L(std::vector<SExpr> xs) { return SExpr::list(std::move(xs)); }

SExpr scalar_atom(const Tensor& t, std::size_t k) {
  switch (t.dtype) {
    case DType::F64:
      return A(format_f64(t.f[k]));
    case DType::Bool:
      return A(t.i[k] ? "true" : "false");
    default:
      return A(std::to_string(t.i[k]));
  }
}

SExpr const_form(const Tensor& t) {
  std::vector<SExpr> xs{A("const")};
  if (t.is_scalar()) {
    xs.push_back(A(std::string(dtype_name(t.dtype))));
  } else {
    xs.push_back(A(TypeSig::tensor(t.dtype, t.shape).str()));
  }
  for (std::size_t k = 0; k < t.size(); ++k) xs.push_back(scalar_atom(t, k));
  return L(std::move(xs));
}

class Emitter {
 public:
  std::vector<SExpr> program(const Graph& g) {
    std::vector<SExpr> forms;
    for (const auto& name : g.function_order) {
      const Function& f = g.functions.at(name);
      std::vector<SExpr> params;
      std::vector<SExpr> atoms;
      for (int p : f.body->params) {
        const Node& pn = f.body->nodes[static_cast<std::size_t>(p)];
        params.push_back(A(pn.name + ":" + pn.out_types[0].str()));
        atoms.push_back(A(pn.name));
      }
      std::vector<SExpr> def{A("def"), A(name), L(std::move(params))};
      for (auto& x : body(*f.body, atoms)) def.push_back(std::move(x));
      forms.push_back(L(std::move(def)));
    }
    std::vector<SExpr> atoms;
    for (int p : g.main.params) atoms.push_back(A(g.main.nodes[static_cast<std::size_t>(p)].name));
    if (!g.main.nodes.empty() || !g.main.outputs.empty()) {
      for (auto& x : body(g.main, atoms)) forms.push_back(std::move(x));
    }
    return forms;
  }

 private:
  std::string fresh() { return "v" + std::to_string(counter_++); }

  // Renders the subgraph's nodes; the last form is its result.
  std::vector<SExpr> body(const Subgraph& sg, const std::vector<SExpr>& params) {
    const std::size_t n = sg.nodes.size();
    std::vector<int> uses(n, 0);
    std::vector<bool> pinned(n, false);
    for (const auto& node : sg.nodes) {
      for (const auto& r : node.inputs) {
        ++uses[static_cast<std::size_t>(r.node)];
        if (node.op == Op::Cond || node.op == Op::While) pinned[static_cast<std::size_t>(r.node)] = true;
      }
    }
    for (const auto& r : sg.outputs) ++uses[static_cast<std::size_t>(r.node)];

    std::vector<std::vector<SExpr>> refs(n);
    std::vector<SExpr> forms;
    for (std::size_t k = 0; k < n; ++k) {
      const Node& node = sg.nodes[k];
      if (node.op == Op::Param) {
        refs[k] = {params.at(static_cast<std::size_t>(node.index))};
        continue;
      }
      if (node.op == Op::Const) {
        refs[k] = {const_form(node.value)};
        continue;
      }
      auto in = [&](std::size_t j) {
        const auto& r = node.inputs[j];
        return refs[static_cast<std::size_t>(r.node)][static_cast<std::size_t>(r.index)];
      };
      SExpr e = render(node, in);
      if (is_effectful(node.op)) {
        forms.push_back(std::move(e));
        continue;
      }
      const bool block = node.op == Op::Cond || node.op == Op::While;
      if (!block && node.out_types.size() == 1 && uses[k] == 1 && !pinned[k]) {
        refs[k] = {std::move(e)};
        continue;
      }
      std::string name = fresh();
      forms.push_back(L({A("let"), A(name), std::move(e)}));
      if (node.out_types.size() == 1) {
        refs[k] = {A(name)};
      } else {
        for (std::size_t j = 0; j < node.out_types.size(); ++j) {
          refs[k].push_back(L({A("get"), A(name), A(std::to_string(j))}));
        }
      }
    }
    auto out_ref = [&](ValueRef r) {
      return refs[static_cast<std::size_t>(r.node)][static_cast<std::size_t>(r.index)];
    };
    if (sg.outputs.size() == 1) {
      forms.push_back(out_ref(sg.outputs[0]));
    } else {
      std::vector<SExpr> tuple{A("tuple")};
      for (const auto& r : sg.outputs) tuple.push_back(out_ref(r));
      forms.push_back(L(std::move(tuple)));
    }
    return forms;
  }

  template <typename In>
  SExpr render(const Node& node, In&& in) {
    std::vector<SExpr> xs;
    switch (node.op) {
      case Op::Cond: {
        std::vector<SExpr> caps;
        for (std::size_t j = 1; j < node.inputs.size(); ++j) caps.push_back(in(j));
        std::vector<SExpr> then{A("then")};
        for (auto& x : body(*node.subgraphs[0], caps)) then.push_back(std::move(x));
        std::vector<SExpr> els{A("else")};
        for (auto& x : body(*node.subgraphs[1], caps)) els.push_back(std::move(x));
        return L({A("cond"), in(0), L(std::move(then)), L(std::move(els))});
      }
      case Op::While: {
        const auto nv = static_cast<std::size_t>(node.ints[0]);
        std::vector<SExpr> vars{A("vars")};
        std::vector<SExpr> params;
        for (std::size_t j = 0; j < nv; ++j) {
          std::string name = fresh();
          vars.push_back(L({A(name), in(j)}));
          params.push_back(A(name));
        }
        for (std::size_t j = nv; j < node.inputs.size(); ++j) params.push_back(in(j));
        std::vector<SExpr> w{A("while"), L(std::move(vars))};
        if (node.max_iterations) {
          w.push_back(L({A("max_iterations"), A(std::to_string(*node.max_iterations))}));
        }
        std::vector<SExpr> test{A("test")};
        for (auto& x : body(*node.subgraphs[0], params)) test.push_back(std::move(x));
        std::vector<SExpr> loop{A("body")};
        for (auto& x : body(*node.subgraphs[1], params)) loop.push_back(std::move(x));
        w.push_back(L(std::move(test)));
        w.push_back(L(std::move(loop)));
        return L(std::move(w));
      }
      case Op::FuncCall:
        xs = {A("call"), A(node.name)};
        break;
      case Op::Print:
        xs = {A("print")};
        for (std::size_t j = 0; j < node.ints.size(); ++j) {
          xs.push_back(node.ints[j] < 0 ? SExpr::string(node.strings[j])
                                        : in(static_cast<std::size_t>(node.ints[j])));
        }
        return L(std::move(xs));
      case Op::Assert:
        return L({A("assert"), in(0), SExpr::string(node.strings.empty() ? "" : node.strings[0])});
      case Op::Zeros:
        xs = {A("zeros"), A(std::string(dtype_name(node.dtype)))};
        break;
      case Op::ListNew: {
        TypeSig elem = node.out_types[0];
        elem.list = false;
        xs = {A("list_new"), A(elem.str())};
        break;
      }
      default:
        xs = {A(std::string(op_name(node.op)))};
    }
    for (std::size_t j = 0; j < node.inputs.size(); ++j) xs.push_back(in(j));
    if (node.op == Op::Transpose && !node.ints.empty()) {
      std::vector<SExpr> perm{A("perm")};
      for (auto p : node.ints) perm.push_back(A(std::to_string(p)));
      xs.push_back(L(std::move(perm)));
    }
    return L(std::move(xs));
  }

  int counter_ = 0;
};

}  // namespace

std::string to_sexpr(const Graph& g) { return write_sexpr(Emitter().program(g)); }

// --------------------------------------------------------------------- dot

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

class DotWriter {
 public:
  std::string run(const Graph& g) {
    out_ = "digraph stagekit {\n";
    for (const auto& name : g.function_order) cluster(*g.functions.at(name).body, "fn " + name, 1);
    if (!g.main.nodes.empty()) cluster(g.main, "main", 1);
    out_ += "}\n";
    return out_;
  }

 private:
  void cluster(const Subgraph& sg, const std::string& label, int depth) {
    const std::string pad(static_cast<std::size_t>(depth * 2), ' ');
    out_ += pad + "subgraph cluster_" + std::to_string(clusters_++) + " {\n";
    out_ += pad + "  label=\"" + dot_escape(label) + "\";\n";
    std::vector<int> ids(sg.nodes.size());
    for (std::size_t k = 0; k < sg.nodes.size(); ++k) {
      const Node& n = sg.nodes[k];
      ids[k] = next_++;
      std::string text(op_name(n.op));
      if (n.origin.valid()) text += "@" + std::to_string(n.origin.start_line);
      out_ += pad + "  n" + std::to_string(ids[k]) + " [label=\"" + dot_escape(text) + "\"];\n";
      for (const auto& r : n.inputs) {
        out_ += pad + "  n" + std::to_string(ids[static_cast<std::size_t>(r.node)]) + " -> n" +
                std::to_string(ids[k]) + ";\n";
      }
      const std::string where = text;
      if (n.op == Op::Cond) {
        cluster(*n.subgraphs[0], where + " then", depth + 1);
        cluster(*n.subgraphs[1], where + " else", depth + 1);
      } else if (n.op == Op::While) {
        cluster(*n.subgraphs[0], where + " test", depth + 1);
        cluster(*n.subgraphs[1], where + " body", depth + 1);
      }
    }
    out_ += pad + "}\n";
  }

  std::string out_;
  int next_ = 0;
  int clusters_ = 0;
};

}  // namespace

std::string to_dot(const Graph& g) { return DotWriter().run(g); }

}  // namespace stagekit::graph
