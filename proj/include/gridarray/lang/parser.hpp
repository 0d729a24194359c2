#pragma once

// Recursive-descent parser. Precedence, loosest first: or, and, not, comparison (== <, not
// chained), + - (left), * (left), unary -, call suffix. '-' followed by digits is a
// negative literal. Commands: skip, x = e,
// if b then c else c, while b do c, { c }, joined by ';' (right-nested). '//' starts a
// comment. put, get, R(...) and #oid literals are accepted only with futures enabled.

#include <cctype>
#include <charconv>
#include <string>
#include <vector>

#include "gridarray/lang/ast.hpp"

namespace gridarray::lang {

struct syntax_error : std::runtime_error {
  int line, col;
  syntax_error(int l, int c, const std::string& m)
      : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " + m), line(l), col(c) {}
};

namespace detail {

enum class Tok { ident, number, oid, sym, end };

struct Token {
  Tok t = Tok::end;
  std::string text;
  int line = 1, col = 1;
};

inline std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto adv = [&](std::size_t n) {
    for (std::size_t j = 0; j < n; ++j, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char ch = src[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      adv(1);
      continue;
    }
    if (ch == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') adv(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    std::size_t j = i;
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.t = Tok::ident;
    } else if (std::isdigit(static_cast<unsigned char>(ch))) {
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.t = Tok::number;
    } else if (ch == '#') {
      ++j;
      while (j < src.size() && std::isxdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j == i + 1) throw syntax_error(line, col, "expected hex digits after '#'");
      t.t = Tok::oid;
    } else if (ch == '=' && i + 1 < src.size() && src[i + 1] == '=') {
      j += 2;
      t.t = Tok::sym;
    } else if (std::string("=+-*<(){},;").find(ch) != std::string::npos) {
      ++j;
      t.t = Tok::sym;
    } else {
      throw syntax_error(line, col, std::string("unexpected character '") + ch + "'");
    }
    t.text = src.substr(i, j - i);
    adv(j - i);
    out.push_back(std::move(t));
  }
  Token e;
  e.line = line;
  e.col = col;
  out.push_back(e);
  return out;
}

inline bool is_keyword(const std::string& s) {
  static const char* kw[] = {"skip", "if",  "then", "else", "while", "do",  "True",
                             "False", "null", "not", "and", "or",    "put", "get"};
  for (const char* k : kw)
    if (s == k) return true;
  return false;
}

class Parser {
 public:
  Parser(const std::string& src, bool futures) : toks_(lex(src)), futures_(futures) {}

  CmdP program() {
    CmdP c = seq();
    if (peek().t != Tok::end) fail("expected ';' or end of input");
    return c;
  }

  ExprP expression() {
    ExprP e = expr();
    if (peek().t != Tok::end) fail("unexpected input after expression");
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  bool is(const char* text, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return (t.t == Tok::sym || t.t == Tok::ident) && t.text == text;
  }
  [[noreturn]] void fail(const std::string& m) const {
    const Token& t = peek();
    throw syntax_error(t.line, t.col, m + (t.t == Tok::end ? " (at end of input)" : " (at '" + t.text + "')"));
  }
  void expect(const char* text) {
    if (!is(text)) fail(std::string("expected '") + text + "'");
    ++pos_;
  }
  std::string ident() {
    if (peek().t != Tok::ident || is_keyword(peek().text) || peek().text == "R") fail("expected identifier");
    return toks_[pos_++].text;
  }

  CmdP seq() {
    CmdP c = simple();
    if (is(";")) {
      ++pos_;
      return mk::seq(c, seq());
    }
    return c;
  }

  CmdP simple() {
    if (is("skip")) {
      ++pos_;
      return mk::skip();
    }
    if (is("{")) {
      ++pos_;
      CmdP c = seq();
      expect("}");
      return c;
    }
    if (is("if")) {
      ++pos_;
      ExprP b = expr();
      expect("then");
      CmdP t = simple();
      expect("else");
      return mk::if_(b, t, simple());
    }
    if (is("while")) {
      ++pos_;
      ExprP b = expr();
      expect("do");
      return mk::while_(b, simple());
    }
    std::string x = ident();
    expect("=");
    return mk::assign(x, expr());
  }

  ExprP expr() { return disj(); }

  ExprP disj() {
    ExprP e = conj();
    while (is("or")) {
      ++pos_;
      e = mk::binop(Op::or_, e, conj());
    }
    return e;
  }

  ExprP conj() {
    ExprP e = negation();
    while (is("and")) {
      ++pos_;
      e = mk::binop(Op::and_, e, negation());
    }
    return e;
  }

  ExprP negation() {
    if (is("not")) {
      ++pos_;
      return mk::unop(Op::not_, negation());
    }
    return comparison();
  }

  ExprP comparison() {
    ExprP e = additive();
    if (is("==") || is("<")) {
      Op op = is("==") ? Op::eq : Op::lt;
      ++pos_;
      e = mk::binop(op, e, additive());
      if (is("==") || is("<")) fail("comparisons do not chain; add parentheses");
    }
    return e;
  }

  ExprP additive() {
    ExprP e = term();
    while (is("+") || is("-")) {
      Op op = is("+") ? Op::add : Op::sub;
      ++pos_;
      e = mk::binop(op, e, term());
    }
    return e;
  }

  ExprP term() {
    ExprP e = unary();
    while (is("*")) {
      ++pos_;
      e = mk::binop(Op::mul, e, unary());
    }
    return e;
  }

  // '-' directly before a digit string is a negative literal; any other '-' is negation.
  ExprP unary() {
    if (is("-") && peek(1).t == Tok::number) {
      const Token& t = peek(1);
      std::uint64_t v = 0;
      auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (r.ec != std::errc() || v > (std::uint64_t{1} << 63)) fail("integer literal out of range");
      pos_ += 2;
      return postfix_of(mk::num(static_cast<std::int64_t>(0 - v)));
    }
    if (is("-")) {
      ++pos_;
      return mk::unop(Op::neg, unary());
    }
    return postfix();
  }

  std::vector<ExprP> args() {
    expect("(");
    std::vector<ExprP> a;
    if (!is(")")) {
      a.push_back(expr());
      while (is(",")) {
        ++pos_;
        a.push_back(expr());
      }
    }
    expect(")");
    return a;
  }

  ExprP postfix() { return postfix_of(primary()); }

  ExprP postfix_of(ExprP e) {
    while (is("(")) e = mk::call(e, args());
    return e;
  }

  // ident '(' ident, ... ')' '{' ... : a function literal; anything else starting with an
  // identifier is a variable.
  bool at_func_literal() const {
    if (peek().t != Tok::ident || is_keyword(peek().text) || peek().text == "R" || !is("(", 1)) return false;
    std::size_t j = 2;
    if (!is(")", j)) {
      for (;;) {
        if (peek(j).t != Tok::ident) return false;
        ++j;
        if (is(")", j)) break;
        if (!is(",", j)) return false;
        ++j;
      }
    }
    return is("{", j + 1);
  }

  ExprP func_literal() {
    std::string name = ident();
    expect("(");
    std::vector<std::string> params;
    if (!is(")")) {
      params.push_back(ident());
      while (is(",")) {
        ++pos_;
        params.push_back(ident());
      }
    }
    expect(")");
    expect("{");
    ExprP body = expr();
    expect("}");
    return mk::func(name, params, body);
  }

  ExprP primary() {
    const Token& t = peek();
    if (t.t == Tok::number) {
      std::int64_t v = 0;
      auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (r.ec != std::errc()) fail("integer literal out of range");
      ++pos_;
      return mk::num(v);
    }
    if (t.t == Tok::oid) {
      if (!futures_) fail("object ids need the futures extension");
      std::uint64_t v = 0;
      auto r = std::from_chars(t.text.data() + 1, t.text.data() + t.text.size(), v, 16);
      if (r.ec != std::errc()) fail("object id out of range");
      ++pos_;
      return mk::oid(v);
    }
    if (is("True") || is("False")) {
      bool v = is("True");
      ++pos_;
      return mk::boolean(v);
    }
    if (is("null")) {
      ++pos_;
      return mk::null();
    }
    if (is("(")) {
      ++pos_;
      ExprP e = expr();
      expect(")");
      return e;
    }
    if (is("put") || is("get") || is("R")) {
      if (!futures_) fail("'" + t.text + "' needs the futures extension");
      std::string which = t.text;
      ++pos_;
      if (which == "R") {
        expect("(");
        ExprP r;
        if (at_func_literal()) {
          r = mk::remote(func_literal());
        } else {
          const Token& o = peek();
          if (o.t != Tok::sym && o.t != Tok::ident) fail("expected an operator or function literal");
          try {
            r = mk::remote_op(parse_remote_op(o.text));
          } catch (const std::invalid_argument&) {
            fail("expected an operator or function literal");
          }
          ++pos_;
        }
        expect(")");
        return r;
      }
      auto a = args();
      if (a.size() != 1) fail(which + " takes one argument");
      return which == "put" ? mk::put(a[0]) : mk::get(a[0]);
    }
    if (at_func_literal()) return func_literal();
    if (t.t == Tok::ident) return mk::var(ident());
    fail("expected an expression");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  bool futures_;
};

}  // namespace detail

inline CmdP parse(const std::string& src, bool futures = false) { return detail::Parser(src, futures).program(); }
inline ExprP parse_expr(const std::string& src, bool futures = false) {
  return detail::Parser(src, futures).expression();
}

}  // namespace gridarray::lang
