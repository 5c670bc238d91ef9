#include "stagekit/analysis/cfg.hpp"

#include <deque>

#include "stagekit/error.hpp"

namespace stagekit::analysis {

using syntax::Kind;
using syntax::Node;
using syntax::NodeList;

int Cfg::node_of(const Node& stmt) const {
  auto it = index.find(stmt.id);
  if (it == index.end()) throw Error(ErrorKind::InternalError, "statement not in CFG");
  return it->second;
}

std::size_t Cfg::edge_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes) n += node.succ.size();
  return n;
}

std::string Cfg::label(int n) const {
  if (n == kEntry) return "entry";
  if (n == kExit) return "exit";
  const auto& s = nodes[static_cast<std::size_t>(n)].stmt->span;
  return std::to_string(s.start_line) + ":" + std::to_string(s.start_col);
}

namespace {

class Builder {
 public:
  explicit Builder(const Node& owner) {
    cfg_.owner = &owner;
    cfg_.nodes.resize(2);
  }

  Cfg run(const NodeList& body) {
    auto out = block(body, {Cfg::kEntry}, Cfg::kExit);
    for (int p : out) edge(p, Cfg::kExit);
    finish();
    return std::move(cfg_);
  }

 private:
  struct Loop {
    int header;
    std::vector<int> breaks;
  };

  int add(const Node& stmt) {
    int id = static_cast<int>(cfg_.nodes.size());
    cfg_.nodes.push_back({&stmt, {}, {}, false});
    cfg_.index[stmt.id] = id;
    return id;
  }

  void edge(int from, int to) {
    auto& succ = cfg_.nodes[static_cast<std::size_t>(from)].succ;
    for (int s : succ) {
      if (s == to) return;
    }
    succ.push_back(to);
    cfg_.nodes[static_cast<std::size_t>(to)].pred.push_back(from);
  }

  // Returns nodes whose normal completion falls through to `cont`. Nodes in
  // the block are not connected to `cont`; the caller does that.
  std::vector<int> block(const NodeList& stmts, std::vector<int> preds, int cont) {
    std::vector<int> first_nodes;
    for (std::size_t i = 0; i < stmts.size(); ++i) {
      const Node& s = *stmts[i];
      int n = add(s);
      first_nodes.push_back(n);
      for (int p : preds) edge(p, n);
      preds = statement(s, n);
    }
    // Follow targets: next statement or the block continuation.
    for (std::size_t i = 0; i < stmts.size(); ++i) {
      cfg_.follow[stmts[i]->id] = i + 1 < stmts.size() ? first_nodes[i + 1] : cont;
    }
    return preds;
  }

  std::vector<int> statement(const Node& s, int n) {
    switch (s.kind) {
      case Kind::If: {
        int cont = pending_follow(s);
        auto a = block(s.body, {n}, cont);
        std::vector<int> b = s.orelse.empty() ? std::vector<int>{n} : block(s.orelse, {n}, cont);
        a.insert(a.end(), b.begin(), b.end());
        return a;
      }
      case Kind::While:
      case Kind::For: {
        loops_.push_back({n, {}});
        auto tail = block(s.body, {n}, n);
        for (int t : tail) edge(t, n);
        Loop loop = std::move(loops_.back());
        loops_.pop_back();
        std::vector<int> out{n};
        out.insert(out.end(), loop.breaks.begin(), loop.breaks.end());
        return out;
      }
      case Kind::Break:
        if (loops_.empty()) throw Error(ErrorKind::InternalError, "break outside loop", s.span);
        loops_.back().breaks.push_back(n);
        return {};
      case Kind::Continue:
        if (loops_.empty()) throw Error(ErrorKind::InternalError, "continue outside loop", s.span);
        edge(n, loops_.back().header);
        return {};
      case Kind::Return:
        edge(n, Cfg::kExit);
        return {};
      default:
        return {n};
    }
  }

  // Branch blocks of an If continue wherever the If itself continues. That is
  // only known after the enclosing block is laid out, so it is patched later.
  int pending_follow(const Node& s) {
    pending_.push_back(&s);
    return -1;
  }

  void finish() {
    // Resolve If branch follows: last statement of a branch follows the If.
    // Outer Ifs are recorded first, so forward order sees resolved targets.
    for (const Node* s : pending_) {
      int target = cfg_.follow.at(s->id);
      for (const NodeList* list : {&s->body, &s->orelse}) {
        if (!list->empty()) cfg_.follow[list->back()->id] = target;
      }
    }
    std::vector<bool> seen(cfg_.nodes.size(), false);
    std::deque<int> work{Cfg::kEntry};
    seen[Cfg::kEntry] = true;
    while (!work.empty()) {
      int n = work.front();
      work.pop_front();
      for (int s : cfg_.nodes[static_cast<std::size_t>(n)].succ) {
        if (!seen[static_cast<std::size_t>(s)]) {
          seen[static_cast<std::size_t>(s)] = true;
          work.push_back(s);
        }
      }
    }
    for (std::size_t i = 2; i < cfg_.nodes.size(); ++i) cfg_.nodes[i].dead = !seen[i];
  }

  Cfg cfg_;
  std::vector<Loop> loops_;
  std::vector<const Node*> pending_;
};

}  // namespace

Cfg build_cfg(const Node& fn) {
  if (fn.kind != Kind::FunctionDef && fn.kind != Kind::Module) {
    throw Error(ErrorKind::InternalError, "build_cfg expects a function or module");
  }
  return Builder(fn).run(fn.body);
}

}  // namespace stagekit::analysis
