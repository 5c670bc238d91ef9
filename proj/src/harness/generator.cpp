// Random, terminating, well-typed MSL programs for differential testing.

#include <random>
#include <sstream>

#include "stagekit/error.hpp"
#include "stagekit/harness/harness.hpp"

namespace stagekit::harness {

using runtime::Value;

namespace {

enum class Ty { F64, I64, Bool };

const char* const kFeatures[] = {"if",       "while",   "for",     "break", "continue",
                                 "lists",    "ternary", "logical", "calls"};

struct Var {
  std::string name;
  Ty ty;
  bool readonly = false;  // loop counters and targets
};

struct ListVar {
  std::string name;
  int length = 0;
};

class Generator {
 public:
  explicit Generator(const FuzzSpec& spec) : spec_(spec), rng_(spec.seed * 0x9E3779B97F4A7C15ULL + 17) {}

  std::string run() {
    std::ostringstream head;
    if (on("calls") && spec_.max_stmts > 0) {
      helpers_ = 1 + pick(2);
      for (int h = 0; h < helpers_; ++h) head << helper(h);
    }
    vars_ = {{"x", Ty::F64}, {"y", Ty::F64}, {"k", Ty::I64}, {"flag", Ty::Bool}};
    budget_ = spec_.max_stmts;
    std::string body;
    if (budget_ <= 0) {
      body = "    return 0\n";
    } else {
      body += "    v0 = x + 0.5\n";
      body += "    n0 = k % 7\n";
      vars_.push_back({"v0", Ty::F64});
      vars_.push_back({"n0", Ty::I64});
      block(body, 1, 0, false, true);
      body += "    return " + returns() + "\n";
    }
    head << "def f(x, y, k, flag):\n" << body;
    return head.str();
  }

 private:
  bool on(const char* feature) const { return spec_.features.count(feature) > 0; }
  int pick(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }
  bool chance(int percent) { return pick(100) < percent; }

  static std::string pad(int indent) { return std::string(static_cast<std::size_t>(indent) * 4, ' '); }

  std::string fresh(const char* prefix) { return prefix + std::to_string(names_++); }

  std::string helper(int h) {
    std::string s = "def h" + std::to_string(h) + "(p, q):\n";
    if (chance(50)) {
      s += "    if p > q:\n        r = p - q * 0.5\n    else:\n        r = q + 1.0\n";
    } else {
      s += "    r = p * 0.5 + q\n";
    }
    s += "    return r\n";
    return s;
  }

  std::string float_lit() {
    static const char* const lits[] = {"0.5", "1.0", "1.5", "2.0", "0.25", "3.0", "-1.0", "0.75"};
    return lits[pick(8)];
  }

  std::string int_lit() { return std::to_string(pick(7) - 2); }

  std::vector<const Var*> of(Ty t) const {
    std::vector<const Var*> out;
    for (const auto& v : vars_) {
      if (v.ty == t) out.push_back(&v);
    }
    return out;
  }

  std::string var_of(Ty t) {
    auto vs = of(t);
    return vs[static_cast<std::size_t>(pick(static_cast<int>(vs.size())))]->name;
  }

  std::string expr(Ty t, int depth) {
    const bool leaf = depth <= 0 || chance(30);
    switch (t) {
      case Ty::F64: {
        if (leaf) return chance(35) ? float_lit() : var_of(Ty::F64);
        switch (pick(10)) {
          case 0: return expr(t, depth - 1) + " + " + expr(t, depth - 1);
          case 1: return expr(t, depth - 1) + " - " + expr(t, depth - 1);
          case 2: return "(" + expr(t, depth - 1) + ") * " + float_lit();
          case 3: return "m.tanh(" + expr(t, depth - 1) + ")";
          case 4:  // guarded: the denominator lies in [2, 4)
            return "(" + expr(t, depth - 1) + ") / ((" + expr(t, depth - 1) + ") % 2.0 + 2.0)";
          case 5: return "-(" + expr(t, depth - 1) + ")";
          case 6:
            if (on("ternary")) {
              return "(" + expr(t, depth - 1) + " if " + expr(Ty::Bool, depth - 1) + " else " +
                     expr(t, depth - 1) + ")";
            }
            return var_of(t);
          case 7:
            if (helpers_ > 0) {
              return "h" + std::to_string(pick(helpers_)) + "(" + expr(t, depth - 1) + ", " +
                     expr(t, depth - 1) + ")";
            }
            return var_of(t);
          case 8:
            if (!lists_.empty()) {
              const auto& l = lists_[static_cast<std::size_t>(pick(static_cast<int>(lists_.size())))];
              if (l.length > 0) return l.name + "[" + std::to_string(pick(l.length)) + "]";
            }
            return var_of(t);
          default:
            return "(" + expr(Ty::I64, depth - 1) + ") / 4";
        }
      }
      case Ty::I64: {
        if (leaf) return chance(35) ? int_lit() : var_of(Ty::I64);
        switch (pick(6)) {
          case 0: return expr(t, depth - 1) + " + " + expr(t, depth - 1);
          case 1: return expr(t, depth - 1) + " - " + expr(t, depth - 1);
          case 2: return "(" + expr(t, depth - 1) + ") % 7 * " + std::to_string(1 + pick(3));
          case 3:  // divisor in [3, 5]
            return "(" + expr(t, depth - 1) + ") % ((" + expr(t, depth - 1) + ") % 3 + 3)";
          case 4:
            if (on("ternary")) {
              return "(" + expr(t, depth - 1) + " if " + expr(Ty::Bool, depth - 1) + " else " +
                     expr(t, depth - 1) + ")";
            }
            return var_of(t);
          default: return "-(" + expr(t, depth - 1) + ")";
        }
      }
      case Ty::Bool: {
        if (leaf) {
          if (chance(15)) return chance(50) ? "True" : "False";
          if (chance(50)) return var_of(Ty::Bool);
        }
        static const char* const cmp[] = {" < ", " > ", " <= ", " >= ", " == ", " != "};
        const int c = pick(on("logical") ? 9 : 6);
        if (c < 3) return expr(Ty::F64, depth - 1) + cmp[pick(4)] + expr(Ty::F64, depth - 1);
        if (c < 6) return expr(Ty::I64, depth - 1) + cmp[pick(6)] + expr(Ty::I64, depth - 1);
        if (c == 6) return "not (" + expr(Ty::Bool, depth - 1) + ")";
        return "(" + expr(Ty::Bool, depth - 1) + (c == 7 ? " and " : " or ") +
               expr(Ty::Bool, depth - 1) + ")";
      }
    }
    return "0";
  }

  // A writable variable of type t, or a new temp local to the current block.
  std::string target(Ty t, bool& created) {
    std::vector<const Var*> w;
    for (const auto* v : of(t)) {
      if (!v->readonly) w.push_back(v);
    }
    created = w.empty() || chance(20);
    if (created) return fresh(t == Ty::F64 ? "v" : t == Ty::I64 ? "n" : "b");
    return w[static_cast<std::size_t>(pick(static_cast<int>(w.size())))]->name;
  }

  Ty any_ty() { return static_cast<Ty>(pick(10) < 5 ? 0 : pick(10) < 6 ? 1 : 2); }

  void assignment(std::string& out, int indent) {
    const Ty t = any_ty();
    const std::string value = expr(t, 2);
    bool created = false;
    const std::string name = target(t, created);
    if (!created && t != Ty::Bool && chance(20)) {
      out += pad(indent) + name + (chance(50) ? " += " : " -= ") + value + "\n";
      return;
    }
    out += pad(indent) + name + " = " + value + "\n";
    if (created) vars_.push_back({name, t});
  }

  void list_stmt(std::string& out, int indent) {
    if (lists_.empty() || chance(30)) {
      const std::string name = fresh("l");
      const int n = 1 + pick(3);
      std::string items;
      for (int j = 0; j < n; ++j) items += (j ? ", " : "") + expr(Ty::F64, 1);
      out += pad(indent) + name + " = [" + items + "]\n";
      lists_.push_back({name, n});
      return;
    }
    auto& l = lists_[static_cast<std::size_t>(pick(static_cast<int>(lists_.size())))];
    const int op = pick(3);
    if (op == 0 || l.length == 0) {
      out += pad(indent) + l.name + ".append(" + expr(Ty::F64, 1) + ")\n";
      ++l.length;
    } else if (op == 1) {
      bool created = false;
      const std::string name = target(Ty::F64, created);
      out += pad(indent) + name + " = " + l.name + ".pop()\n";
      if (created) vars_.push_back({name, Ty::F64});
      --l.length;
    } else {
      out += pad(indent) + l.name + "[" + std::to_string(pick(l.length)) + "] = " +
             expr(Ty::F64, 1) + "\n";
    }
  }

  void nested(std::string& out, int indent, int depth, bool in_loop) {
    const std::size_t saved = vars_.size();
    block(out, indent, depth, in_loop, false);
    vars_.resize(saved);
  }

  void block(std::string& out, int indent, int depth, bool in_loop, bool top) {
    const int n = 1 + pick(3);
    for (int s = 0; s < n && budget_ > 0; ++s) {
      --budget_;
      const bool can_nest = depth < spec_.max_depth && budget_ > 0;
      const int c = pick(100);
      const int bound = spec_.max_loop_bound;
      if (can_nest && c < 18 && on("if")) {
        out += pad(indent) + "if " + expr(Ty::Bool, 2) + ":\n";
        nested(out, indent + 1, depth + 1, in_loop);
        if (chance(50) && budget_ > 0) {
          out += pad(indent) + "else:\n";
          nested(out, indent + 1, depth + 1, in_loop);
        }
      } else if (can_nest && c < 30 && on("while")) {
        const std::string i = fresh("i");
        out += pad(indent) + i + " = 0\n";
        out += pad(indent) + "while " + i + " < " + std::to_string(pick(bound + 1)) + ":\n";
        out += pad(indent + 1) + i + " = " + i + " + 1\n";
        vars_.push_back({i, Ty::I64, true});
        nested(out, indent + 1, depth + 1, true);
      } else if (can_nest && c < 42 && on("for")) {
        const std::string i = fresh("j");
        out += pad(indent) + "for " + i + " in range(" + std::to_string(pick(bound + 1)) + "):\n";
        const std::size_t saved = vars_.size();
        vars_.push_back({i, Ty::I64, true});
        nested(out, indent + 1, depth + 1, true);
        vars_.resize(saved);
      } else if (in_loop && c < 50 && (on("break") || on("continue"))) {
        const bool brk = on("break") && (!on("continue") || chance(50));
        out += pad(indent) + "if " + expr(Ty::Bool, 2) + ":\n";
        out += pad(indent + 1) + (brk ? "break" : "continue") + "\n";
      } else if (top && c < 62 && on("lists")) {
        list_stmt(out, indent);
      } else {
        assignment(out, indent);
      }
    }
    if (top) {
      // Spend what is left on straight-line code so the budget is honoured.
      while (budget_ > 0 && chance(50)) {
        --budget_;
        assignment(out, indent);
      }
    }
  }

  std::string returns() {
    std::vector<std::string> parts;
    for (const auto& v : vars_) parts.push_back(v.name);
    for (const auto& l : lists_) {
      for (int j = 0; j < l.length && j < 2; ++j) parts.push_back(l.name + "[" + std::to_string(j) + "]");
    }
    std::string s;
    for (std::size_t j = 0; j < parts.size(); ++j) s += (j ? ", " : "") + parts[j];
    return s;
  }

  const FuzzSpec& spec_;
  std::mt19937_64 rng_;
  std::vector<Var> vars_;
  std::vector<ListVar> lists_;
  int budget_ = 0;
  int names_ = 1;
  int helpers_ = 0;
};

}  // namespace

std::set<std::string> FuzzSpec::all_features() {
  return std::set<std::string>(std::begin(kFeatures), std::end(kFeatures));
}

std::set<std::string> parse_features(const std::string& list) {
  std::set<std::string> out;
  std::stringstream ss(list);
  std::string item;
  const auto all = FuzzSpec::all_features();
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (!all.count(item)) throw Error(ErrorKind::UsageError, "unknown fuzz feature '" + item + "'");
    out.insert(item);
  }
  return out;
}

GeneratedProgram gen_program(const FuzzSpec& spec) {
  using graph::DType;
  using graph::TypeSig;
  using runtime::ParamSpec;
  GeneratedProgram p;
  p.source = Generator(spec).run();
  p.params = {ParamSpec::tensor("x", TypeSig::scalar(DType::F64)),
              ParamSpec::tensor("y", TypeSig::scalar(DType::F64)),
              ParamSpec::tensor("k", TypeSig::scalar(DType::I64)),
              ParamSpec::tensor("flag", TypeSig::scalar(DType::Bool))};
  return p;
}

std::vector<Value> gen_inputs(std::uint64_t seed, int index) {
  std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(index) * 7919ULL + 1);
  std::uniform_real_distribution<double> real(-4.0, 4.0);
  std::uniform_int_distribution<int> ints(-6, 12);
  // Quarter steps keep printed inputs exact and replayable.
  auto quarter = [&] { return std::round(real(rng) * 4.0) / 4.0; };
  return {runtime::float_value(quarter()), runtime::float_value(quarter()),
          runtime::int_value(ints(rng)), runtime::bool_value(rng() % 2 == 0)};
}

}  // namespace stagekit::harness
