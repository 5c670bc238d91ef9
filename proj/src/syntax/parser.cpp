#include "stagekit/syntax/parser.hpp"

#include <charconv>
#include <set>
#include <vector>

#include "stagekit/error.hpp"

namespace stagekit::syntax {

namespace {

enum class Tok { Name, Keyword, Int, Float, String, Op, Newline, Indent, Dedent, End };

struct Token {
  Tok type;
  std::string text;
  int line, col, end_line, end_col;
};

const std::set<std::string, std::less<>> kKeywords = {
    "def",   "if",  "elif", "else", "while", "for", "in",   "break", "continue",
    "return", "assert", "and", "or", "not",   "True", "False", "None"};

// Python statements outside the language. Reported by name instead of as a
// generic parse error when they open a statement.
const std::set<std::string, std::less<>> kForeignStatements = {
    "class", "with",   "try",   "except", "finally", "raise", "import", "from",
    "global", "nonlocal", "del", "pass",  "yield",   "async", "lambda"};

class Lexer {
 public:
  Lexer(std::string_view src, std::shared_ptr<const std::string> file)
      : src_(src), file_(std::move(file)) {}

  std::vector<Token> run() {
    indents_.push_back(0);
    bool at_line_start = true;
    while (pos_ < src_.size()) {
      if (at_line_start && depth_ == 0) {
        if (!handle_indent()) continue;  // blank or comment-only line consumed
        at_line_start = false;
      }
      char c = src_[pos_];
      if (c == '\n') {
        if (depth_ == 0) emit(Tok::Newline, "\n", line_, col_, line_, col_ + 1);
        advance();
        at_line_start = true;
        continue;
      }
      if (c == ' ' || c == '\r') {
        advance();
        continue;
      }
      if (c == '\t') {
        if (depth_ == 0) error(ErrorKind::IndentationError, "tab character not allowed");
        advance();
        continue;
      }
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        continue;
      }
      if (c == '\\' && peek(1) == '\n') {
        advance();
        advance();
        continue;
      }
      if (is_ident_start(c)) {
        lex_name();
      } else if (is_digit(c) || (c == '.' && is_digit(peek(1)))) {
        lex_number();
      } else if (c == '"' || c == '\'') {
        lex_string();
      } else {
        lex_op();
      }
    }
    if (!tokens_.empty() && tokens_.back().type != Tok::Newline &&
        tokens_.back().type != Tok::Dedent && tokens_.back().type != Tok::Indent) {
      emit(Tok::Newline, "\n", line_, col_, line_, col_);
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(Tok::Dedent, "", line_, col_, line_, col_);
    }
    emit(Tok::End, "", line_, col_, line_, col_);
    return std::move(tokens_);
  }

 private:
  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  char peek(std::size_t k) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  [[noreturn]] void error(ErrorKind kind, const std::string& msg) {
    SourceSpan span{file_, line_, col_, line_, col_ + 1};
    throw Error(kind, msg, span);
  }

  void emit(Tok t, std::string text, int l, int c, int el, int ec) {
    tokens_.push_back(Token{t, std::move(text), l, c, el, ec});
  }

  // Returns false when the line was blank/comment-only and has been consumed.
  bool handle_indent() {
    int width = 0;
    std::size_t p = pos_;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\r')) {
      if (src_[p] == '\t') {
        while (pos_ < p) advance();
        error(ErrorKind::IndentationError, "tab character in indentation");
      }
      if (src_[p] == ' ') ++width;
      ++p;
    }
    if (p >= src_.size() || src_[p] == '\n' || src_[p] == '#') {
      while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      if (pos_ < src_.size()) advance();
      return false;
    }
    while (pos_ < p) advance();
    if (width > indents_.back()) {
      indents_.push_back(width);
      emit(Tok::Indent, "", line_, 1, line_, col_);
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        emit(Tok::Dedent, "", line_, 1, line_, col_);
      }
      if (width != indents_.back()) {
        error(ErrorKind::IndentationError, "unindent does not match any outer indentation level");
      }
    }
    return true;
  }

  void lex_name() {
    int l = line_, c = col_;
    std::size_t start = pos_;
    while (pos_ < src_.size() && (is_ident_start(src_[pos_]) || is_digit(src_[pos_]))) advance();
    std::string text(src_.substr(start, pos_ - start));
    emit(kKeywords.count(text) ? Tok::Keyword : Tok::Name, text, l, c, line_, col_);
  }

  void lex_number() {
    int l = line_, c = col_;
    std::size_t start = pos_;
    bool is_float = false;
    while (is_digit(peek(0))) advance();
    if (peek(0) == '.' && !is_ident_start(peek(1))) {
      is_float = true;
      advance();
      while (is_digit(peek(0))) advance();
    }
    if (peek(0) == 'e' || peek(0) == 'E') {
      std::size_t k = 1;
      if (peek(1) == '+' || peek(1) == '-') k = 2;
      if (is_digit(peek(k))) {
        is_float = true;
        for (std::size_t i = 0; i < k; ++i) advance();
        while (is_digit(peek(0))) advance();
      }
    }
    if (is_ident_start(peek(0))) error(ErrorKind::SyntaxError, "invalid number literal");
    emit(is_float ? Tok::Float : Tok::Int, std::string(src_.substr(start, pos_ - start)), l, c,
         line_, col_);
  }

  void lex_string() {
    int l = line_, c = col_;
    char quote = src_[pos_];
    advance();
    std::string value;
    while (true) {
      if (pos_ >= src_.size() || src_[pos_] == '\n') {
        error(ErrorKind::SyntaxError, "unterminated string literal");
      }
      char ch = src_[pos_];
      if (ch == quote) {
        advance();
        break;
      }
      if (ch == '\\') {
        advance();
        if (pos_ >= src_.size()) error(ErrorKind::SyntaxError, "unterminated string literal");
        char e = src_[pos_];
        switch (e) {
          case 'n': value += '\n'; break;
          case 't': value += '\t'; break;
          case '\\': value += '\\'; break;
          case '\'': value += '\''; break;
          case '"': value += '"'; break;
          default: error(ErrorKind::SyntaxError, "unsupported escape sequence");
        }
        advance();
        continue;
      }
      value += ch;
      advance();
    }
    emit(Tok::String, value, l, c, line_, col_);
  }

  void lex_op() {
    static const char* two[] = {"<=", ">=", "==", "!=", "+=", "-=", "*=", "/="};
    int l = line_, c = col_;
    for (const char* op : two) {
      if (src_.substr(pos_, 2) == op) {
        advance();
        advance();
        emit(Tok::Op, op, l, c, line_, col_);
        return;
      }
    }
    char ch = src_[pos_];
    static const std::string singles = "+-*/%<>=()[],.:";
    if (singles.find(ch) == std::string::npos) {
      error(ErrorKind::SyntaxError, std::string("unexpected character '") + ch + "'");
    }
    if (ch == '(' || ch == '[') ++depth_;
    if ((ch == ')' || ch == ']') && depth_ > 0) --depth_;
    advance();
    emit(Tok::Op, std::string(1, ch), l, c, line_, col_);
  }

  std::string_view src_;
  std::shared_ptr<const std::string> file_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  int depth_ = 0;
  std::vector<int> indents_;
  std::vector<Token> tokens_;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::shared_ptr<const std::string> file, ParseOptions opts)
      : toks_(std::move(toks)), file_(std::move(file)), opts_(opts) {}

  NodePtr module() {
    auto mod = start(Kind::Module, toks_.front());
    while (!at(Tok::End)) {
      if (at(Tok::Newline)) {
        ++pos_;
        continue;
      }
      mod->body.push_back(statement());
    }
    if (mod->body.empty()) {
      mod->span = SourceSpan{file_, 1, 1, 1, 1};
    } else {
      mod->span = SourceSpan{file_, 1, 1, mod->body.back()->span.end_line,
                             mod->body.back()->span.end_col};
    }
    mod->origin = Origin{mod->id, mod->span};
    return mod;
  }

  NodePtr lone_expression() {
    while (at(Tok::Newline)) ++pos_;
    auto e = exprlist();
    while (at(Tok::Newline)) ++pos_;
    if (!at(Tok::End)) syntax_error("unexpected trailing input");
    return e;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& prev() const { return toks_[pos_ - 1]; }
  bool at(Tok t) const { return cur().type == t; }
  bool at_op(std::string_view op) const { return cur().type == Tok::Op && cur().text == op; }
  bool at_kw(std::string_view kw) const {
    return cur().type == Tok::Keyword && cur().text == kw;
  }

  [[noreturn]] void syntax_error(const std::string& msg) {
    const Token& t = cur();
    throw Error(ErrorKind::SyntaxError, msg, SourceSpan{file_, t.line, t.col, t.end_line, t.end_col});
  }

  void expect_op(std::string_view op) {
    if (!at_op(op)) syntax_error("expected '" + std::string(op) + "'");
    ++pos_;
  }
  void expect_kw(std::string_view kw) {
    if (!at_kw(kw)) syntax_error("expected '" + std::string(kw) + "'");
    ++pos_;
  }
  void expect_newline() {
    if (at(Tok::End)) return;
    if (!at(Tok::Newline)) syntax_error("expected end of line");
    ++pos_;
  }

  std::string name_token() {
    if (!at(Tok::Name)) syntax_error("expected identifier");
    std::string id = cur().text;
    if (!opts_.allow_reserved && id.rfind("ag__", 0) == 0) {
      syntax_error("identifier '" + id + "' uses the reserved ag__ prefix");
    }
    ++pos_;
    return id;
  }

  NodePtr start(Kind kind, const Token& t) {
    auto n = std::make_shared<Node>(kind);
    n->span = SourceSpan{file_, t.line, t.col, t.end_line, t.end_col};
    return n;
  }

  NodePtr finish(NodePtr n) {
    const Token& last = prev();
    n->span.end_line = last.end_line;
    n->span.end_col = last.end_col;
    n->origin = Origin{n->id, n->span};
    return n;
  }

  // Starts node at the span of an existing child (for infix forms).
  NodePtr start_at(Kind kind, const Node& first) {
    auto n = std::make_shared<Node>(kind);
    n->span = first.span;
    return n;
  }

  NodeList block() {
    expect_op(":");
    if (!at(Tok::Newline)) syntax_error("expected newline before block");
    ++pos_;
    if (!at(Tok::Indent)) {
      throw Error(ErrorKind::IndentationError, "expected an indented block",
                  SourceSpan{file_, cur().line, cur().col, cur().end_line, cur().end_col});
    }
    ++pos_;
    NodeList stmts;
    while (!at(Tok::Dedent) && !at(Tok::End)) {
      if (at(Tok::Newline)) {
        ++pos_;
        continue;
      }
      stmts.push_back(statement());
    }
    if (at(Tok::Dedent)) ++pos_;
    return stmts;
  }

  NodePtr statement() {
    if (at(Tok::Indent)) {
      throw Error(ErrorKind::IndentationError, "unexpected indent",
                  SourceSpan{file_, cur().line, cur().col, cur().end_line, cur().end_col});
    }
    const Token& t = cur();
    if (t.type == Tok::Name && kForeignStatements.count(t.text) &&
        toks_[pos_ + 1].type != Tok::Op) {
      syntax_error("unsupported syntax: '" + t.text + "' is not part of the language");
    }
    if (t.type == Tok::Keyword) {
      if (t.text == "def") return funcdef();
      if (t.text == "if") return if_stmt();
      if (t.text == "while") return while_stmt();
      if (t.text == "for") return for_stmt();
      if (t.text == "break" || t.text == "continue") {
        if (loop_depth_ == 0) syntax_error("'" + t.text + "' outside loop");
        auto n = start(t.text == "break" ? Kind::Break : Kind::Continue, t);
        ++pos_;
        finish(n);
        expect_newline();
        return n;
      }
      if (t.text == "return") {
        if (fn_depth_ == 0) syntax_error("'return' outside function");
        auto n = start(Kind::Return, t);
        ++pos_;
        if (!at(Tok::Newline) && !at(Tok::End)) n->kids.push_back(exprlist());
        finish(n);
        expect_newline();
        return n;
      }
      if (t.text == "assert") {
        auto n = start(Kind::Assert, t);
        ++pos_;
        n->kids.push_back(expr());
        if (at_op(",")) {
          ++pos_;
          n->kids.push_back(expr());
        }
        finish(n);
        expect_newline();
        return n;
      }
    }
    return simple_statement();
  }

  NodePtr funcdef() {
    auto n = start(Kind::FunctionDef, cur());
    ++pos_;
    n->text = name_token();
    expect_op("(");
    std::set<std::string> seen;
    if (!at_op(")")) {
      while (true) {
        auto p = start(Kind::Param, cur());
        p->text = name_token();
        if (!seen.insert(p->text).second) syntax_error("duplicate parameter '" + p->text + "'");
        n->kids.push_back(finish(p));
        if (!at_op(",")) break;
        ++pos_;
      }
    }
    expect_op(")");
    int saved_loop = loop_depth_;
    loop_depth_ = 0;
    ++fn_depth_;
    n->body = block();
    --fn_depth_;
    loop_depth_ = saved_loop;
    return finish_block(n);
  }

  NodePtr finish_block(NodePtr n) {
    const Node* last = nullptr;
    if (!n->orelse.empty()) {
      last = n->orelse.back().get();
    } else if (!n->body.empty()) {
      last = n->body.back().get();
    }
    if (last) {
      n->span.end_line = last->span.end_line;
      n->span.end_col = last->span.end_col;
    }
    n->origin = Origin{n->id, n->span};
    return n;
  }

  NodePtr if_stmt() {
    auto n = start(Kind::If, cur());
    ++pos_;
    n->kids.push_back(expr());
    n->body = block();
    if (at_kw("elif")) {
      n->orelse.push_back(if_stmt());
    } else if (at_kw("else")) {
      ++pos_;
      n->orelse = block();
    }
    return finish_block(n);
  }

  NodePtr while_stmt() {
    auto n = start(Kind::While, cur());
    ++pos_;
    n->kids.push_back(expr());
    ++loop_depth_;
    n->body = block();
    --loop_depth_;
    return finish_block(n);
  }

  NodePtr for_stmt() {
    auto n = start(Kind::For, cur());
    ++pos_;
    auto target = start(Kind::Name, cur());
    target->text = name_token();
    n->kids.push_back(finish(target));
    expect_kw("in");
    n->kids.push_back(expr());
    ++loop_depth_;
    n->body = block();
    --loop_depth_;
    return finish_block(n);
  }

  void check_target(const Node& t, bool allow_tuple) {
    switch (t.kind) {
      case Kind::Name:
      case Kind::Attribute:
      case Kind::Subscript:
        return;
      case Kind::Tuple:
        if (allow_tuple && !t.kids.empty()) {
          for (const auto& k : t.kids) check_target(*k, false);
          return;
        }
        break;
      default:
        break;
    }
    throw Error(ErrorKind::SyntaxError, "cannot assign to expression", t.span);
  }

  NodePtr simple_statement() {
    auto first = exprlist();
    if (at_op("=")) {
      check_target(*first, true);
      ++pos_;
      auto n = start_at(Kind::Assign, *first);
      n->kids.push_back(first);
      n->kids.push_back(exprlist());
      if (at_op("=")) syntax_error("chained assignment is not supported");
      finish(n);
      expect_newline();
      return n;
    }
    if (at(Tok::Op) && (cur().text == "+=" || cur().text == "-=" || cur().text == "*=" ||
                        cur().text == "/=")) {
      check_target(*first, false);
      auto n = start_at(Kind::AugAssign, *first);
      n->text = cur().text.substr(0, 1);
      ++pos_;
      n->kids.push_back(first);
      n->kids.push_back(expr());
      finish(n);
      expect_newline();
      return n;
    }
    auto n = start_at(Kind::ExprStmt, *first);
    n->kids.push_back(first);
    finish(n);
    expect_newline();
    return n;
  }

  // expr { "," expr } [","] -- a Tuple when any comma is present.
  NodePtr exprlist() {
    auto first = expr();
    if (!at_op(",")) return first;
    auto t = start_at(Kind::Tuple, *first);
    t->kids.push_back(first);
    while (at_op(",")) {
      ++pos_;
      if (at(Tok::Newline) || at(Tok::End) || at_op("=") || at_op(")")) break;
      t->kids.push_back(expr());
    }
    return finish(t);
  }

  NodePtr expr() { return ternary(); }

  NodePtr ternary() {
    auto body = or_expr();
    if (at_kw("if")) {
      ++pos_;
      auto test = or_expr();
      expect_kw("else");
      auto orelse = ternary();
      auto n = start_at(Kind::Ternary, *body);
      n->kids = {body, test, orelse};
      return finish(n);
    }
    return body;
  }

  NodePtr or_expr() {
    auto lhs = and_expr();
    while (at_kw("or")) {
      ++pos_;
      auto n = start_at(Kind::BoolOp, *lhs);
      n->text = "or";
      n->kids = {lhs, and_expr()};
      lhs = finish(n);
    }
    return lhs;
  }

  NodePtr and_expr() {
    auto lhs = not_expr();
    while (at_kw("and")) {
      ++pos_;
      auto n = start_at(Kind::BoolOp, *lhs);
      n->text = "and";
      n->kids = {lhs, not_expr()};
      lhs = finish(n);
    }
    return lhs;
  }

  NodePtr not_expr() {
    if (at_kw("not")) {
      auto n = start(Kind::UnaryOp, cur());
      ++pos_;
      n->text = "not";
      n->kids.push_back(not_expr());
      return finish(n);
    }
    return comparison();
  }

  static bool is_cmp(const Token& t) {
    return t.type == Tok::Op && (t.text == "<" || t.text == ">" || t.text == "<=" ||
                                 t.text == ">=" || t.text == "==" || t.text == "!=");
  }

  NodePtr comparison() {
    auto lhs = arith();
    if (!is_cmp(cur())) return lhs;
    auto n = start_at(Kind::Compare, *lhs);
    n->kids.push_back(lhs);
    while (is_cmp(cur())) {
      n->ops.push_back(cur().text);
      ++pos_;
      n->kids.push_back(arith());
    }
    return finish(n);
  }

  NodePtr arith() {
    auto lhs = term();
    while (at_op("+") || at_op("-")) {
      auto n = start_at(Kind::BinOp, *lhs);
      n->text = cur().text;
      ++pos_;
      n->kids = {lhs, term()};
      lhs = finish(n);
    }
    return lhs;
  }

  NodePtr term() {
    auto lhs = unary();
    while (at_op("*") || at_op("/") || at_op("%")) {
      auto n = start_at(Kind::BinOp, *lhs);
      n->text = cur().text;
      ++pos_;
      n->kids = {lhs, unary()};
      lhs = finish(n);
    }
    return lhs;
  }

  NodePtr unary() {
    if (at_op("-")) {
      auto n = start(Kind::UnaryOp, cur());
      ++pos_;
      n->text = "-";
      n->kids.push_back(unary());
      return finish(n);
    }
    return postfix();
  }

  NodePtr postfix() {
    auto e = atom();
    while (true) {
      if (at_op("(")) {
        ++pos_;
        auto n = start_at(Kind::Call, *e);
        n->kids.push_back(e);
        if (!at_op(")")) {
          while (true) {
            n->kids.push_back(expr());
            if (!at_op(",")) break;
            ++pos_;
            if (at_op(")")) break;
          }
        }
        expect_op(")");
        e = finish(n);
      } else if (at_op(".")) {
        ++pos_;
        auto n = start_at(Kind::Attribute, *e);
        n->kids.push_back(e);
        if (!at(Tok::Name)) syntax_error("expected attribute name");
        n->text = name_token();
        e = finish(n);
      } else if (at_op("[")) {
        ++pos_;
        auto n = start_at(Kind::Subscript, *e);
        n->kids.push_back(e);
        n->kids.push_back(expr());
        if (at_op(":")) syntax_error("range slices are not supported");
        expect_op("]");
        e = finish(n);
      } else {
        return e;
      }
    }
  }

  NodePtr atom() {
    const Token& t = cur();
    switch (t.type) {
      case Tok::Name: {
        auto n = start(Kind::Name, t);
        n->text = name_token();
        return finish(n);
      }
      case Tok::Int: {
        auto n = start(Kind::IntLit, t);
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), n->ival);
        if (ec != std::errc()) syntax_error("integer literal out of range");
        ++pos_;
        return finish(n);
      }
      case Tok::Float: {
        auto n = start(Kind::FloatLit, t);
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), n->fval);
        if (ec != std::errc()) syntax_error("invalid float literal");
        ++pos_;
        return finish(n);
      }
      case Tok::String: {
        auto n = start(Kind::StrLit, t);
        n->text = t.text;
        ++pos_;
        return finish(n);
      }
      case Tok::Keyword: {
        if (t.text == "True" || t.text == "False") {
          auto n = start(Kind::BoolLit, t);
          n->bval = t.text == "True";
          ++pos_;
          return finish(n);
        }
        if (t.text == "None") {
          auto n = start(Kind::NoneLit, t);
          ++pos_;
          return finish(n);
        }
        break;
      }
      case Tok::Op: {
        if (t.text == "(") {
          auto open = start(Kind::Tuple, t);
          ++pos_;
          if (at_op(")")) {
            ++pos_;
            return finish(open);
          }
          auto first = expr();
          if (at_op(")")) {
            ++pos_;
            return first;
          }
          open->kids.push_back(first);
          while (at_op(",")) {
            ++pos_;
            if (at_op(")")) break;
            open->kids.push_back(expr());
          }
          expect_op(")");
          return finish(open);
        }
        if (t.text == "[") {
          auto n = start(Kind::ListLiteral, t);
          ++pos_;
          if (!at_op("]")) {
            while (true) {
              n->kids.push_back(expr());
              if (!at_op(",")) break;
              ++pos_;
              if (at_op("]")) break;
            }
          }
          expect_op("]");
          return finish(n);
        }
        break;
      }
      default:
        break;
    }
    syntax_error(t.type == Tok::Newline || t.type == Tok::End ? "unexpected end of line"
                                                              : "unexpected token '" + t.text + "'");
  }

  std::vector<Token> toks_;
  std::shared_ptr<const std::string> file_;
  ParseOptions opts_;
  std::size_t pos_ = 0;
  int loop_depth_ = 0;
  int fn_depth_ = 0;
};

}  // namespace

NodePtr parse_module(std::string_view source, const std::string& file_name, ParseOptions options) {
  auto file = std::make_shared<const std::string>(file_name);
  Lexer lexer(source, file);
  Parser parser(lexer.run(), file, options);
  return parser.module();
}

NodePtr parse_expression(std::string_view source, const std::string& file_name,
                         ParseOptions options) {
  auto file = std::make_shared<const std::string>(file_name);
  Lexer lexer(source, file);
  Parser parser(lexer.run(), file, options);
  return parser.lone_expression();
}

}  // namespace stagekit::syntax
