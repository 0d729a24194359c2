#pragma once

// Seeded generators of well-typed programs. Terminating programs use loops with dedicated
// counters the body never writes, and closed non-recursive functions over int parameters.

#include <random>

#include "gridarray/lang/ast.hpp"

namespace gen {

using namespace gridarray::lang;

class Programs {
 public:
  explicit Programs(std::uint64_t seed) : rng_(seed) {}

  // An int or bool expression with no free variables; calls apply inline literals.
  ExprP closed_expr(bool want_bool, int depth) {
    scope_ = {};
    return want_bool ? bexpr(depth) : iexpr(depth);
  }

  CmdP terminating() {
    scope_ = {};
    int ni = 1 + below(3), nb = 1 + below(2), nf = below(3);
    std::vector<CmdP> cmds;
    for (int j = 0; j < ni; ++j) {
      scope_.ints.push_back("i" + std::to_string(j));
      cmds.push_back(mk::assign(scope_.ints.back(), lit_int()));
    }
    for (int j = 0; j < nb; ++j) {
      scope_.bools.push_back("b" + std::to_string(j));
      cmds.push_back(mk::assign(scope_.bools.back(), mk::boolean(coin())));
    }
    for (int j = 0; j < nf; ++j) {
      std::string name = "f" + std::to_string(j);
      int arity = 1 + below(2);
      cmds.push_back(mk::assign(name, func_literal(name, arity)));
      scope_.funcs.push_back({name, arity});
    }
    int n = 1 + below(5);
    for (int j = 0; j < n; ++j) cmds.push_back(stmt(2));
    return join(cmds);
  }

  // Exceeds any fuel: a while True or a self-recursive call, after a terminating prefix.
  CmdP nonterminating() {
    CmdP prefix = terminating();
    CmdP tail;
    if (coin()) {
      tail = mk::while_(mk::boolean(true), mk::assign("i0", mk::binop(Op::add, mk::var("i0"), mk::num(1))));
    } else {
      ExprP body = mk::binop(Op::add, mk::call(mk::var("g"), {mk::var("n")}), mk::num(1));
      tail = mk::seq(mk::assign("g", mk::func("g", {"n"}, body)), mk::assign("i0", mk::call(mk::var("g"), {mk::num(1)})));
    }
    return mk::seq(prefix, tail);
  }

 private:
  struct Scope {
    std::vector<std::string> ints, bools;
    std::vector<std::pair<std::string, int>> funcs;
    int counters = 0;
  };

  int below(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }
  bool coin() { return rng_() & 1; }
  ExprP lit_int() { return mk::num(below(21) - 10); }

  static CmdP join(const std::vector<CmdP>& cs) {
    CmdP out = cs.back();
    for (std::size_t j = cs.size() - 1; j-- > 0;) out = mk::seq(cs[j], out);
    return out;
  }

  ExprP func_literal(const std::string& name, int arity) {
    Scope saved = scope_;
    scope_ = {};
    std::vector<std::string> params;
    for (int j = 0; j < arity; ++j) {
      params.push_back("p" + std::to_string(j));
      scope_.ints.push_back(params.back());
    }
    ExprP body = iexpr(2);
    scope_ = saved;
    return mk::func(name, params, body);
  }

  ExprP iexpr(int depth) {
    int pick = below(depth > 0 ? 7 : 2);
    switch (pick) {
      case 0: return lit_int();
      case 1:
        if (!scope_.ints.empty()) return mk::var(scope_.ints[below(static_cast<int>(scope_.ints.size()))]);
        return lit_int();
      case 2: return mk::binop(Op::add, iexpr(depth - 1), iexpr(depth - 1));
      case 3: return mk::binop(Op::sub, iexpr(depth - 1), iexpr(depth - 1));
      case 4: return mk::binop(Op::mul, iexpr(depth - 1), iexpr(depth - 1));
      case 5: return mk::unop(Op::neg, iexpr(depth - 1));
      default: {
        std::vector<ExprP> args;
        if (!scope_.funcs.empty() && coin()) {
          auto [f, arity] = scope_.funcs[below(static_cast<int>(scope_.funcs.size()))];
          for (int j = 0; j < arity; ++j) args.push_back(iexpr(depth - 1));
          return mk::call(mk::var(f), args);
        }
        int arity = 1 + below(2);
        ExprP lit = func_literal("h", arity);
        for (int j = 0; j < arity; ++j) args.push_back(iexpr(depth - 1));
        return mk::call(lit, args);
      }
    }
  }

  ExprP bexpr(int depth) {
    int pick = below(depth > 0 ? 7 : 2);
    switch (pick) {
      case 0: return mk::boolean(coin());
      case 1:
        if (!scope_.bools.empty()) return mk::var(scope_.bools[below(static_cast<int>(scope_.bools.size()))]);
        return mk::boolean(coin());
      case 2: return mk::unop(Op::not_, bexpr(depth - 1));
      case 3: return mk::binop(coin() ? Op::and_ : Op::or_, bexpr(depth - 1), bexpr(depth - 1));
      case 4: return mk::binop(Op::lt, iexpr(depth - 1), iexpr(depth - 1));
      case 5: return mk::binop(Op::eq, iexpr(depth - 1), iexpr(depth - 1));
      default: return mk::binop(Op::eq, bexpr(depth - 1), bexpr(depth - 1));
    }
  }

  CmdP stmt(int depth) {
    int pick = below(depth > 0 ? 6 : 3);
    switch (pick) {
      case 0:
      case 1: return mk::assign(scope_.ints[below(static_cast<int>(scope_.ints.size()))], iexpr(2));
      case 2: return mk::assign(scope_.bools[below(static_cast<int>(scope_.bools.size()))], bexpr(2));
      case 3: return mk::if_(bexpr(2), stmt(depth - 1), stmt(depth - 1));
      case 4: return mk::seq(stmt(depth - 1), stmt(depth - 1));
      default: {
        // c = 0; while c < n do { body; c = c + 1 }, with c outside the writable scope.
        std::string c = "c" + std::to_string(scope_.counters++);
        CmdP step = mk::assign(c, mk::binop(Op::add, mk::var(c), mk::num(1)));
        CmdP loop = mk::while_(mk::binop(Op::lt, mk::var(c), mk::num(1 + below(4))), mk::seq(stmt(depth - 1), step));
        return mk::seq(mk::assign(c, mk::num(0)), loop);
      }
    }
  }

  std::mt19937_64 rng_;
  Scope scope_;
};

}  // namespace gen
