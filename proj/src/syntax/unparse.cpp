#include "stagekit/syntax/unparse.hpp"

#include <array>
#include <cmath>
#include <charconv>
#include <sstream>

#include "stagekit/error.hpp"

namespace stagekit::syntax {

std::string format_float_literal(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string s(buf.data(), ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

namespace {

enum Prec { kTernary = 1, kOr, kAnd, kNot, kCompare, kArith, kTerm, kUnary, kPostfix, kAtom };

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      default: out += c;
    }
  }
  return out + "\"";
}

int precedence(const Node& n) {
  switch (n.kind) {
    case Kind::Ternary: return kTernary;
    case Kind::BoolOp: return n.text == "or" ? kOr : kAnd;
    case Kind::UnaryOp: return n.text == "not" ? kNot : kUnary;
    case Kind::Compare: return kCompare;
    case Kind::BinOp: return (n.text == "+" || n.text == "-") ? kArith : kTerm;
    case Kind::Call:
    case Kind::Attribute:
    case Kind::Subscript: return kPostfix;
    case Kind::IntLit: return n.ival < 0 ? kUnary : kAtom;
    case Kind::FloatLit: return n.fval < 0 || (n.fval == 0 && std::signbit(n.fval)) ? kUnary : kAtom;
    default: return kAtom;
  }
}

void expr(std::ostream& os, const Node& n, int min_prec);

void expr_list(std::ostream& os, const NodeList& items, std::size_t from = 0) {
  for (std::size_t i = from; i < items.size(); ++i) {
    if (i > from) os << ", ";
    expr(os, *items[i], kTernary);
  }
}

void tuple_bare(std::ostream& os, const Node& n) {
  if (n.kind == Kind::Tuple && !n.kids.empty()) {
    expr_list(os, n.kids);
    if (n.kids.size() == 1) os << ",";
  } else {
    expr(os, n, kTernary);
  }
}

void expr(std::ostream& os, const Node& n, int min_prec) {
  int p = precedence(n);
  bool paren = p < min_prec;
  if (paren) os << "(";
  switch (n.kind) {
    case Kind::Name: os << n.text; break;
    case Kind::IntLit: os << n.ival; break;
    case Kind::FloatLit: os << format_float_literal(n.fval); break;
    case Kind::BoolLit: os << (n.bval ? "True" : "False"); break;
    case Kind::NoneLit: os << "None"; break;
    case Kind::StrLit: os << quote(n.text); break;
    case Kind::Attribute:
      expr(os, *n.kids.at(0), kPostfix);
      os << "." << n.text;
      break;
    case Kind::Subscript:
      expr(os, *n.kids.at(0), kPostfix);
      os << "[";
      expr(os, *n.kids.at(1), kTernary);
      os << "]";
      break;
    case Kind::Call:
      expr(os, *n.kids.at(0), kPostfix);
      os << "(";
      expr_list(os, n.kids, 1);
      os << ")";
      break;
    case Kind::ListLiteral:
      os << "[";
      expr_list(os, n.kids);
      os << "]";
      break;
    case Kind::Tuple:
      os << "(";
      expr_list(os, n.kids);
      if (n.kids.size() == 1) os << ",";
      os << ")";
      break;
    case Kind::BinOp:
      expr(os, *n.kids.at(0), p);
      os << " " << n.text << " ";
      expr(os, *n.kids.at(1), p + 1);
      break;
    case Kind::BoolOp:
      expr(os, *n.kids.at(0), p);
      os << " " << n.text << " ";
      expr(os, *n.kids.at(1), p + 1);
      break;
    case Kind::UnaryOp:
      if (n.text == "not") {
        os << "not ";
        expr(os, *n.kids.at(0), kNot);
      } else {
        os << "-";
        expr(os, *n.kids.at(0), kUnary);
      }
      break;
    case Kind::Compare:
      if (n.kids.size() != n.ops.size() + 1) {
        throw Error(ErrorKind::InternalError, "malformed Compare node", n.span);
      }
      expr(os, *n.kids[0], kArith);
      for (std::size_t i = 0; i < n.ops.size(); ++i) {
        os << " " << n.ops[i] << " ";
        expr(os, *n.kids[i + 1], kArith);
      }
      break;
    case Kind::Ternary:
      expr(os, *n.kids.at(0), kOr);
      os << " if ";
      expr(os, *n.kids.at(1), kOr);
      os << " else ";
      expr(os, *n.kids.at(2), kTernary);
      break;
    default:
      throw Error(ErrorKind::InternalError,
                  "cannot unparse " + std::string(kind_name(n.kind)) + " as expression", n.span);
  }
  if (paren) os << ")";
}

void stmt(std::ostream& os, const Node& n, int indent);

void block(std::ostream& os, const NodeList& stmts, int indent) {
  if (stmts.empty()) throw Error(ErrorKind::InternalError, "empty block");
  for (const auto& s : stmts) stmt(os, *s, indent);
}

void stmt(std::ostream& os, const Node& n, int indent) {
  std::string pad(static_cast<std::size_t>(indent) * 4, ' ');
  switch (n.kind) {
    case Kind::FunctionDef: {
      os << pad << "def " << n.text << "(";
      for (std::size_t i = 0; i < n.kids.size(); ++i) {
        if (i) os << ", ";
        os << n.kids[i]->text;
      }
      os << "):\n";
      block(os, n.body, indent + 1);
      break;
    }
    case Kind::If: {
      os << pad << "if ";
      expr(os, *n.kids.at(0), kTernary);
      os << ":\n";
      block(os, n.body, indent + 1);
      const Node* cur = &n;
      while (!cur->orelse.empty()) {
        if (cur->orelse.size() == 1 && cur->orelse[0]->kind == Kind::If) {
          cur = cur->orelse[0].get();
          os << pad << "elif ";
          expr(os, *cur->kids.at(0), kTernary);
          os << ":\n";
          block(os, cur->body, indent + 1);
        } else {
          os << pad << "else:\n";
          block(os, cur->orelse, indent + 1);
          break;
        }
      }
      break;
    }
    case Kind::While:
      os << pad << "while ";
      expr(os, *n.kids.at(0), kTernary);
      os << ":\n";
      block(os, n.body, indent + 1);
      break;
    case Kind::For:
      os << pad << "for " << n.kids.at(0)->text << " in ";
      expr(os, *n.kids.at(1), kTernary);
      os << ":\n";
      block(os, n.body, indent + 1);
      break;
    case Kind::Break: os << pad << "break\n"; break;
    case Kind::Continue: os << pad << "continue\n"; break;
    case Kind::Return:
      os << pad << "return";
      if (!n.kids.empty()) {
        os << " ";
        tuple_bare(os, *n.kids[0]);
      }
      os << "\n";
      break;
    case Kind::Assign:
      os << pad;
      tuple_bare(os, *n.kids.at(0));
      os << " = ";
      tuple_bare(os, *n.kids.at(1));
      os << "\n";
      break;
    case Kind::AugAssign:
      os << pad;
      expr(os, *n.kids.at(0), kTernary);
      os << " " << n.text << "= ";
      expr(os, *n.kids.at(1), kTernary);
      os << "\n";
      break;
    case Kind::ExprStmt:
      os << pad;
      tuple_bare(os, *n.kids.at(0));
      os << "\n";
      break;
    case Kind::Assert:
      os << pad << "assert ";
      expr(os, *n.kids.at(0), kTernary);
      if (n.kids.size() > 1) {
        os << ", ";
        expr(os, *n.kids[1], kTernary);
      }
      os << "\n";
      break;
    default:
      throw Error(ErrorKind::InternalError,
                  "cannot unparse " + std::string(kind_name(n.kind)) + " as statement", n.span);
  }
}

}  // namespace

std::string unparse_expr(const Node& node) {
  std::ostringstream os;
  expr(os, node, kTernary);
  return os.str();
}

std::string unparse(const Node& node) {
  std::ostringstream os;
  if (node.kind == Kind::Module) {
    for (const auto& s : node.body) stmt(os, *s, 0);
  } else if (is_statement(node.kind)) {
    stmt(os, node, 0);
  } else {
    expr(os, node, kTernary);
  }
  return os.str();
}

namespace {

bool is_leaf(const Node& n) {
  switch (n.kind) {
    case Kind::Name:
    case Kind::Param:
    case Kind::IntLit:
    case Kind::FloatLit:
    case Kind::BoolLit:
    case Kind::NoneLit:
    case Kind::StrLit:
    case Kind::Break:
    case Kind::Continue:
      return true;
    default:
      return false;
  }
}

std::string leaf_text(const Node& n) {
  std::string k(kind_name(n.kind));
  switch (n.kind) {
    case Kind::Name:
    case Kind::Param: return k + ": " + n.text;
    case Kind::IntLit: return k + ": " + std::to_string(n.ival);
    case Kind::FloatLit: return k + ": " + format_float_literal(n.fval);
    case Kind::BoolLit: return k + ": " + (n.bval ? "True" : "False");
    case Kind::StrLit: return k + ": " + quote(n.text);
    default: return k;
  }
}

class Dumper {
 public:
  std::string run(const Node& n) {
    node(n, 0, "");
    return os_.str();
  }

 private:
  static std::string bars(int depth) {
    std::string s;
    for (int i = 0; i < depth; ++i) s += "| ";
    return s;
  }

  void node(const Node& n, int depth, const std::string& prefix) {
    if (is_leaf(n)) {
      os_ << bars(depth) << prefix << leaf_text(n) << "\n";
      return;
    }
    os_ << bars(depth) << prefix << kind_name(n.kind) << ":\n";
    int d = depth + 1;
    auto one = [&](const char* field, const NodePtr& child) {
      if (child) {
        node(*child, d, std::string(field) + "=");
      } else {
        os_ << bars(d) << field << "=None\n";
      }
    };
    auto text = [&](const char* field, const std::string& v) {
      os_ << bars(d) << field << "=\"" << v << "\"\n";
    };
    auto many = [&](const char* field, const NodeList& items, std::size_t from = 0) {
      os_ << bars(d) << field << "=[";
      if (items.size() <= from) {
        os_ << "]\n";
        return;
      }
      os_ << "\n";
      for (std::size_t i = from; i < items.size(); ++i) node(*items[i], d + 1, "");
      os_ << bars(d) << "]\n";
    };
    auto kid = [&](std::size_t i) { return i < n.kids.size() ? n.kids[i] : NodePtr{}; };
    switch (n.kind) {
      case Kind::Module: many("body", n.body); break;
      case Kind::FunctionDef:
        text("name", n.text);
        many("params", n.kids);
        many("body", n.body);
        break;
      case Kind::If:
        one("test", kid(0));
        many("body", n.body);
        many("orelse", n.orelse);
        break;
      case Kind::While:
        one("test", kid(0));
        many("body", n.body);
        break;
      case Kind::For:
        one("target", kid(0));
        one("iter", kid(1));
        many("body", n.body);
        break;
      case Kind::Return: one("value", kid(0)); break;
      case Kind::Assign:
        one("target", kid(0));
        one("value", kid(1));
        break;
      case Kind::AugAssign:
        text("op", n.text);
        one("target", kid(0));
        one("value", kid(1));
        break;
      case Kind::ExprStmt: one("value", kid(0)); break;
      case Kind::Assert:
        one("test", kid(0));
        one("msg", kid(1));
        break;
      case Kind::Call:
        one("func", kid(0));
        many("args", n.kids, 1);
        break;
      case Kind::Attribute:
        one("value", kid(0));
        text("attr", n.text);
        break;
      case Kind::Subscript:
        one("value", kid(0));
        one("index", kid(1));
        break;
      case Kind::ListLiteral:
      case Kind::Tuple: many("elts", n.kids); break;
      case Kind::BinOp:
      case Kind::BoolOp:
        text("op", n.text);
        one("left", kid(0));
        one("right", kid(1));
        break;
      case Kind::UnaryOp:
        text("op", n.text);
        one("operand", kid(0));
        break;
      case Kind::Compare: {
        one("left", kid(0));
        std::string ops;
        for (std::size_t i = 0; i < n.ops.size(); ++i) ops += (i ? " " : "") + n.ops[i];
        text("ops", ops);
        many("comparators", n.kids, 1);
        break;
      }
      case Kind::Ternary:
        one("body", kid(0));
        one("test", kid(1));
        one("orelse", kid(2));
        break;
      default:
        break;
    }
    for (const auto& [k, v] : n.annotations) {
      os_ << bars(d) << "annotation " << k << "=\"" << v << "\"\n";
    }
  }

  std::ostringstream os_;
};

}  // namespace

std::string pretty_print(const Node& node) { return Dumper().run(node); }

}  // namespace stagekit::syntax
