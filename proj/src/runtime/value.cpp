#include "stagekit/runtime/value.hpp"

#include <cctype>
#include <cmath>

#include "stagekit/error.hpp"

namespace stagekit::runtime {

using graph::DType;
using graph::Tensor;

std::int64_t Range::size() const {
  if (step > 0) return stop > start ? (stop - start + step - 1) / step : 0;
  return start > stop ? (start - stop - step - 1) / (-step) : 0;
}

bool Value::is_staged() const { return is<Staged>() || is<StagedTree>(); }

Value make_list(std::vector<Value> items, std::optional<DType> elem) {
  auto l = std::make_shared<ListValue>();
  l->items = std::move(items);
  l->elem = elem;
  return List(std::move(l));
}

Value make_tuple(std::vector<Value> items) {
  return Tuple(std::make_shared<const std::vector<Value>>(std::move(items)));
}

Value make_tree(Value value, Tree left, Tree right) {
  auto n = std::make_shared<TreeNode>();
  n->value = std::move(value);
  n->left = std::move(left);
  n->right = std::move(right);
  return Tree{std::move(n)};
}

Value int_value(std::int64_t v) { return Tensor::scalar_i64(v); }
Value float_value(double v) { return Tensor::scalar_f64(v); }
Value bool_value(bool v) { return Tensor::scalar_bool(v); }

std::string type_name(const Value& v) {
  struct Visitor {
    std::string operator()(const None&) const { return "None"; }
    std::string operator()(const Tensor& t) const {
      if (t.is_scalar()) {
        switch (t.dtype) {
          case DType::Bool: return "bool";
          case DType::I64: return "int";
          default: return "float";
        }
      }
      return "tensor " + graph::TypeSig::tensor(t.dtype, t.shape).str();
    }
    std::string operator()(const std::string&) const { return "str"; }
    std::string operator()(const List&) const { return "list"; }
    std::string operator()(const Tuple&) const { return "tuple"; }
    std::string operator()(const Tree&) const { return "tree"; }
    std::string operator()(const StagedTree&) const { return "staged tree"; }
    std::string operator()(const Undefined& u) const { return "undefined '" + u.name + "'"; }
    std::string operator()(const std::shared_ptr<const Closure>&) const { return "function"; }
    std::string operator()(const Builtin&) const { return "builtin"; }
    std::string operator()(const Namespace&) const { return "namespace"; }
    std::string operator()(const Range&) const { return "range"; }
    std::string operator()(const LoopOptions&) const { return "loop options"; }
    std::string operator()(const DTypeValue&) const { return "dtype"; }
    std::string operator()(const Staged& s) const { return "staged " + s.type.str(); }
    std::string operator()(const NativeFn&) const { return "function"; }
  };
  return std::visit(Visitor{}, v.v);
}

namespace {

std::string join_items(const std::vector<Value>& items) {
  std::string out;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (k) out += ", ";
    out += repr_value(items[k]);
  }
  return out;
}

void format_tree_into(const Tree& t, std::string& out) {
  if (!t.root) {
    out += "()";
    return;
  }
  out += "(" + repr_value(t.root->value) + " ";
  format_tree_into(t.root->left, out);
  out += " ";
  format_tree_into(t.root->right, out);
  out += ")";
}

}  // namespace

std::string format_tree(const Tree& t) {
  std::string out;
  format_tree_into(t, out);
  return out;
}

std::string repr_value(const Value& v) {
  if (const auto* s = v.get<std::string>()) {
    std::string out = "'";
    for (char c : *s) {
      if (c == '\'' || c == '\\') out += '\\';
      out += c;
    }
    return out + "'";
  }
  return format_value(v);
}

std::string format_value(const Value& v) {
  if (const auto* t = v.get<Tensor>()) return graph::format_tensor(*t);
  if (const auto* s = v.get<std::string>()) return *s;
  if (v.is<None>()) return "None";
  if (const auto* l = v.get<List>()) return "[" + join_items((*l)->items) + "]";
  if (const auto* t = v.get<Tuple>()) {
    if ((*t)->size() == 1) return "(" + repr_value((**t)[0]) + ",)";
    return "(" + join_items(**t) + ")";
  }
  if (const auto* t = v.get<Tree>()) return "tree" + format_tree(*t);
  if (const auto* r = v.get<Range>()) {
    std::string out = "range(" + std::to_string(r->start) + ", " + std::to_string(r->stop);
    if (r->step != 1) out += ", " + std::to_string(r->step);
    return out + ")";
  }
  if (const auto* b = v.get<Builtin>()) return "<builtin " + b->name + ">";
  if (const auto* c = v.get<std::shared_ptr<const Closure>>()) return "<function " + (*c)->def->text + ">";
  if (const auto* d = v.get<DTypeValue>()) return std::string(graph::dtype_name(d->dtype));
  return "<" + type_name(v) + ">";
}

bool values_equal(const Value& a, const Value& b) {
  if (a.v.index() != b.v.index()) return false;
  if (const auto* t = a.get<Tensor>()) return graph::exactly_equal(*t, b.as<Tensor>());
  if (a.is<None>()) return true;
  if (const auto* s = a.get<std::string>()) return *s == b.as<std::string>();
  auto seq_equal = [](const std::vector<Value>& x, const std::vector<Value>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (!values_equal(x[k], y[k])) return false;
    }
    return true;
  };
  if (const auto* l = a.get<List>()) return seq_equal((*l)->items, b.as<List>()->items);
  if (const auto* t = a.get<Tuple>()) return seq_equal(**t, *b.as<Tuple>());
  if (const auto* t = a.get<Tree>()) {
    const Tree& u = b.as<Tree>();
    if (!t->root || !u.root) return !t->root && !u.root;
    return values_equal(t->root->value, u.root->value) && values_equal(t->root->left, u.root->left) &&
           values_equal(t->root->right, u.root->right);
  }
  if (const auto* r = a.get<Range>()) {
    const Range& q = b.as<Range>();
    return r->start == q.start && r->stop == q.stop && r->step == q.step;
  }
  if (const auto* u = a.get<Undefined>()) return u->name == b.as<Undefined>().name;
  if (const auto* c = a.get<std::shared_ptr<const Closure>>()) {
    return *c == b.as<std::shared_ptr<const Closure>>();
  }
  if (const auto* f = a.get<Builtin>()) return f->name == b.as<Builtin>().name;
  if (const auto* n = a.get<Namespace>()) return n->name == b.as<Namespace>().name;
  if (const auto* d = a.get<DTypeValue>()) return d->dtype == b.as<DTypeValue>().dtype;
  if (const auto* o = a.get<LoopOptions>()) return o->max_iterations == b.as<LoopOptions>().max_iterations;
  return false;
}

const Value* Env::find(const std::string& name) const {
  for (const Env* e = this; e; e = e->parent.get()) {
    for (const auto& [k, v] : e->vars) {
      if (k == name) return &v;
    }
  }
  return nullptr;
}

void Env::set(const std::string& name, Value v) {
  for (auto& [k, slot] : vars) {
    if (k == name) {
      slot = std::move(v);
      return;
    }
  }
  vars.emplace_back(name, std::move(v));
}

// ------------------------------------------------------------------- trees

namespace {

class TreeReader {
 public:
  explicit TreeReader(const std::string& s) : s_(s) {}

  Tree read() {
    Tree t = node();
    skip();
    if (pos_ != s_.size()) error();
    return t;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[noreturn]] void error() {
    throw Error(ErrorKind::UsageError, "malformed tree literal near offset " + std::to_string(pos_) +
                                           ": " + s_);
  }
  void expect(char c) {
    skip();
    if (pos_ >= s_.size() || s_[pos_] != c) error();
    ++pos_;
  }
  Tree node() {
    expect('(');
    skip();
    if (pos_ < s_.size() && s_[pos_] == ')') {
      ++pos_;
      return {};
    }
    std::size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) &&
           s_[pos_] != '(' && s_[pos_] != ')') {
      ++pos_;
    }
    std::string num = s_.substr(start, pos_ - start);
    double v;
    try {
      std::size_t used = 0;
      v = std::stod(num, &used);
      if (used != num.size()) error();
    } catch (const std::logic_error&) {
      error();
    }
    Tree l = node();
    Tree r = node();
    expect(')');
    return make_tree(float_value(v), std::move(l), std::move(r)).as<Tree>();
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

void encode(const Tree& t, TreeArrays& out, std::int64_t& slot) {
  if (!t.root) {
    slot = -1;
    return;
  }
  const auto id = static_cast<std::int64_t>(out.values.f.size());
  slot = id;
  const Tensor* v = t.root->value.get<Tensor>();
  if (!v || !v->is_scalar() || v->dtype == DType::Bool) {
    throw Error(ErrorKind::TypeError, "tree values must be numeric scalars");
  }
  out.values.f.push_back(v->as_f64(0));
  out.left.i.push_back(-1);
  out.right.i.push_back(-1);
  std::int64_t l = -1, r = -1;
  encode(t.root->left, out, l);
  encode(t.root->right, out, r);
  out.left.i[static_cast<std::size_t>(id)] = l;
  out.right.i[static_cast<std::size_t>(id)] = r;
}

}  // namespace

Tree parse_tree(const std::string& text) { return TreeReader(text).read(); }

TreeArrays encode_tree(const Tree& t) {
  TreeArrays out;
  out.values = Tensor::zeros(DType::F64, {0});
  out.left = Tensor::zeros(DType::I64, {0});
  out.right = Tensor::zeros(DType::I64, {0});
  std::int64_t root = -1;
  encode(t, out, root);
  const auto n = static_cast<std::int64_t>(out.values.f.size());
  out.values.shape = {n};
  out.left.shape = {n};
  out.right.shape = {n};
  out.node = Tensor::scalar_i64(root);
  return out;
}

}  // namespace stagekit::runtime
