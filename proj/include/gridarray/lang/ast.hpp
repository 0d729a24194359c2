#pragma once

// Syntax trees for the serial language and its futures extension, runtime values, and a
// fully parenthesized printer whose output parses back to the same tree.

#include <cstdint>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridarray::lang {

enum class Op { add, sub, mul, eq, lt, and_, or_, neg, not_ };

inline bool is_unary(Op op) { return op == Op::neg || op == Op::not_; }

inline const char* op_symbol(Op op) {
  switch (op) {
    case Op::add: return "+";
    case Op::sub: return "-";
    case Op::mul: return "*";
    case Op::eq: return "==";
    case Op::lt: return "<";
    case Op::and_: return "and";
    case Op::or_: return "or";
    case Op::neg: return "-";
    case Op::not_: return "not";
  }
  return "?";
}

// Name used inside R(...); unary minus is spelled neg so it differs from subtraction.
inline const char* op_remote_name(Op op) { return op == Op::neg ? "neg" : op_symbol(op); }

inline Op parse_remote_op(const std::string& s) {
  for (Op op : {Op::add, Op::sub, Op::mul, Op::eq, Op::lt, Op::and_, Op::or_, Op::neg, Op::not_})
    if (s == op_remote_name(op)) return op;
  throw std::invalid_argument("unknown operator " + s);
}

struct Expr;
using ExprP = std::shared_ptr<const Expr>;

// Int, Bool, Null and Oid are literals; Func is f(x...){body}; Call holds callee then args;
// Remote is R(f) over a function literal (kids[0]) or an operator.
enum class EK { Int, Bool, Null, Var, Unop, Binop, Func, Call, Put, Get, Remote, Oid };

struct Expr {
  EK k = EK::Null;
  std::int64_t i = 0;
  bool b = false;
  std::uint64_t oid = 0;
  Op op = Op::add;
  std::string name;
  std::vector<std::string> params;
  std::vector<ExprP> kids;
};

inline bool operator==(const Expr& a, const Expr& b);
inline bool same(const ExprP& a, const ExprP& b) { return a == b || (a && b && *a == *b); }

inline bool operator==(const Expr& a, const Expr& b) {
  if (a.k != b.k || a.kids.size() != b.kids.size()) return false;
  switch (a.k) {
    case EK::Int: return a.i == b.i;
    case EK::Bool: return a.b == b.b;
    case EK::Null: return true;
    case EK::Oid: return a.oid == b.oid;
    case EK::Var: return a.name == b.name;
    case EK::Unop:
    case EK::Binop: if (a.op != b.op) return false; break;
    case EK::Func: if (a.name != b.name || a.params != b.params) return false; break;
    case EK::Remote: if (a.kids.empty() && a.op != b.op) return false; break;
    default: break;
  }
  for (std::size_t j = 0; j < a.kids.size(); ++j)
    if (!same(a.kids[j], b.kids[j])) return false;
  return true;
}

namespace mk {
inline ExprP node(Expr e) { return std::make_shared<const Expr>(std::move(e)); }
inline ExprP num(std::int64_t v) { Expr e; e.k = EK::Int; e.i = v; return node(std::move(e)); }
inline ExprP boolean(bool v) { Expr e; e.k = EK::Bool; e.b = v; return node(std::move(e)); }
inline ExprP null() { return node(Expr{}); }
inline ExprP oid(std::uint64_t o) { Expr e; e.k = EK::Oid; e.oid = o; return node(std::move(e)); }
inline ExprP var(std::string x) { Expr e; e.k = EK::Var; e.name = std::move(x); return node(std::move(e)); }
inline ExprP unop(Op op, ExprP a) { Expr e; e.k = EK::Unop; e.op = op; e.kids = {std::move(a)}; return node(std::move(e)); }
inline ExprP binop(Op op, ExprP a, ExprP b) {
  Expr e; e.k = EK::Binop; e.op = op; e.kids = {std::move(a), std::move(b)}; return node(std::move(e));
}
inline ExprP func(std::string name, std::vector<std::string> params, ExprP body) {
  Expr e; e.k = EK::Func; e.name = std::move(name); e.params = std::move(params); e.kids = {std::move(body)};
  return node(std::move(e));
}
inline ExprP call(ExprP callee, std::vector<ExprP> args) {
  Expr e; e.k = EK::Call; e.kids.push_back(std::move(callee));
  for (auto& a : args) e.kids.push_back(std::move(a));
  return node(std::move(e));
}
inline ExprP put(ExprP a) { Expr e; e.k = EK::Put; e.kids = {std::move(a)}; return node(std::move(e)); }
inline ExprP get(ExprP a) { Expr e; e.k = EK::Get; e.kids = {std::move(a)}; return node(std::move(e)); }
inline ExprP remote(ExprP f) { Expr e; e.k = EK::Remote; e.kids = {std::move(f)}; return node(std::move(e)); }
inline ExprP remote_op(Op op) { Expr e; e.k = EK::Remote; e.op = op; return node(std::move(e)); }
}  // namespace mk

enum class CK { Skip, Seq, Assign, If, While };

struct Cmd;
using CmdP = std::shared_ptr<const Cmd>;

struct Cmd {
  CK k = CK::Skip;
  std::string var;
  ExprP e;  // assigned value or condition
  CmdP c1, c2;
};

inline bool operator==(const Cmd& a, const Cmd& b);
inline bool same(const CmdP& a, const CmdP& b) { return a == b || (a && b && *a == *b); }
inline bool operator==(const Cmd& a, const Cmd& b) {
  return a.k == b.k && a.var == b.var && same(a.e, b.e) && same(a.c1, b.c1) && same(a.c2, b.c2);
}

namespace mk {
inline CmdP cnode(Cmd c) { return std::make_shared<const Cmd>(std::move(c)); }
inline CmdP skip() { return cnode(Cmd{}); }
inline CmdP seq(CmdP a, CmdP b) { Cmd c; c.k = CK::Seq; c.c1 = std::move(a); c.c2 = std::move(b); return cnode(std::move(c)); }
inline CmdP assign(std::string x, ExprP e) { Cmd c; c.k = CK::Assign; c.var = std::move(x); c.e = std::move(e); return cnode(std::move(c)); }
inline CmdP if_(ExprP b, CmdP t, CmdP f) {
  Cmd c; c.k = CK::If; c.e = std::move(b); c.c1 = std::move(t); c.c2 = std::move(f); return cnode(std::move(c));
}
inline CmdP while_(ExprP b, CmdP body) { Cmd c; c.k = CK::While; c.e = std::move(b); c.c1 = std::move(body); return cnode(std::move(c)); }
}  // namespace mk

// ---- printer ----

inline std::string oid_text(std::uint64_t o) {
  std::ostringstream os;
  os << '#' << std::hex << std::setw(16) << std::setfill('0') << o;
  return os.str();
}

inline void print_expr(std::ostream& os, const Expr& e);

inline void print_args(std::ostream& os, const std::vector<ExprP>& kids, std::size_t from) {
  os << '(';
  for (std::size_t j = from; j < kids.size(); ++j) {
    if (j > from) os << ", ";
    print_expr(os, *kids[j]);
  }
  os << ')';
}

inline void print_expr(std::ostream& os, const Expr& e) {
  switch (e.k) {
    case EK::Int: if (e.i < 0) os << "(-" << -static_cast<std::uint64_t>(e.i) << ')'; else os << e.i; break;
    case EK::Bool: os << (e.b ? "True" : "False"); break;
    case EK::Null: os << "null"; break;
    case EK::Oid: os << oid_text(e.oid); break;
    case EK::Var: os << e.name; break;
    case EK::Unop: {
      // Negating a non-negative literal keeps inner parentheses so it does not read back
      // as a negative literal.
      bool guard = e.op == Op::neg && e.kids[0]->k == EK::Int && e.kids[0]->i >= 0;
      os << '(' << op_symbol(e.op) << (e.op == Op::not_ ? " " : "") << (guard ? "(" : "");
      print_expr(os, *e.kids[0]);
      os << (guard ? "))" : ")");
      break;
    }
    case EK::Binop:
      os << '(';
      print_expr(os, *e.kids[0]);
      os << ' ' << op_symbol(e.op) << ' ';
      print_expr(os, *e.kids[1]);
      os << ')';
      break;
    case EK::Func:
      os << e.name << '(';
      for (std::size_t j = 0; j < e.params.size(); ++j) os << (j ? ", " : "") << e.params[j];
      os << "){";
      print_expr(os, *e.kids[0]);
      os << '}';
      break;
    case EK::Call: {
      const Expr& c = *e.kids[0];
      bool wrap = c.k != EK::Var && c.k != EK::Func && c.k != EK::Remote && c.k != EK::Call;
      if (wrap) os << '(';
      print_expr(os, c);
      if (wrap) os << ')';
      print_args(os, e.kids, 1);
      break;
    }
    case EK::Put: os << "put"; print_args(os, e.kids, 0); break;
    case EK::Get: os << "get"; print_args(os, e.kids, 0); break;
    case EK::Remote:
      os << "R(";
      if (e.kids.empty()) os << op_remote_name(e.op); else print_expr(os, *e.kids[0]);
      os << ')';
      break;
  }
}

inline void print_cmd(std::ostream& os, const Cmd& c) {
  auto block = [&](const Cmd& b) {
    os << "{ ";
    print_cmd(os, b);
    os << " }";
  };
  switch (c.k) {
    case CK::Skip: os << "skip"; break;
    case CK::Seq:
      // A left-nested sequence keeps its braces so the tree shape survives a reparse.
      if (c.c1->k == CK::Seq) block(*c.c1); else print_cmd(os, *c.c1);
      os << "; ";
      print_cmd(os, *c.c2);
      break;
    case CK::Assign: os << c.var << " = "; print_expr(os, *c.e); break;
    case CK::If:
      os << "if ";
      print_expr(os, *c.e);
      os << " then ";
      block(*c.c1);
      os << " else ";
      block(*c.c2);
      break;
    case CK::While:
      os << "while ";
      print_expr(os, *c.e);
      os << " do ";
      block(*c.c1);
      break;
  }
}

inline std::string to_string(const ExprP& e) { std::ostringstream os; print_expr(os, *e); return os.str(); }
inline std::string to_string(const CmdP& c) { std::ostringstream os; print_cmd(os, *c); return os.str(); }

// ---- values ----

enum class VK { Int, Bool, Null, Func, Remote, Oid, Error };

// Func holds a function literal closed over its locals; Remote holds an R(...) expression.
struct Value {
  VK k = VK::Null;
  std::int64_t i = 0;
  bool b = false;
  std::uint64_t oid = 0;
  ExprP fn;
  std::string msg;

  static Value integer(std::int64_t v) { Value x; x.k = VK::Int; x.i = v; return x; }
  static Value boolean(bool v) { Value x; x.k = VK::Bool; x.b = v; return x; }
  static Value null() { return {}; }
  static Value func(ExprP f) { Value x; x.k = VK::Func; x.fn = std::move(f); return x; }
  static Value remote(ExprP r) { Value x; x.k = VK::Remote; x.fn = std::move(r); return x; }
  static Value object(std::uint64_t o) { Value x; x.k = VK::Oid; x.oid = o; return x; }
  static Value error(std::string m) { Value x; x.k = VK::Error; x.msg = std::move(m); return x; }

  bool is_error() const { return k == VK::Error; }
  bool operator==(const Value& o) const {
    if (k != o.k) return false;
    switch (k) {
      case VK::Int: return i == o.i;
      case VK::Bool: return b == o.b;
      case VK::Null: return true;
      case VK::Func:
      case VK::Remote: return same(fn, o.fn);
      case VK::Oid: return oid == o.oid;
      case VK::Error: return true;
    }
    return false;
  }
};

// The literal expression denoting v; errors have none.
inline ExprP value_expr(const Value& v) {
  switch (v.k) {
    case VK::Int: return mk::num(v.i);
    case VK::Bool: return mk::boolean(v.b);
    case VK::Null: return mk::null();
    case VK::Func:
    case VK::Remote: return v.fn;
    case VK::Oid: return mk::oid(v.oid);
    case VK::Error: break;
  }
  throw std::logic_error("error has no literal form");
}

inline std::string to_string(const Value& v) {
  if (v.k == VK::Error) return "error(" + v.msg + ")";
  return to_string(value_expr(v));
}

}  // namespace gridarray::lang
