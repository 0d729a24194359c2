#pragma once

// The serial-to-futures translation operator, by structural recursion. Function bodies stay
// serial: a worker evaluates them whole. A call keeps its translated callee, so a variable
// bound to R(f) is called as r(...), and a literal callee becomes R(f)(...).

#include "gridarray/lang/ast.hpp"

namespace gridarray::lang {

inline ExprP translate(const ExprP& e) {
  switch (e->k) {
    case EK::Int:
    case EK::Bool:
    case EK::Null: return mk::put(e);
    case EK::Var: return e;
    case EK::Func: return mk::remote(e);
    case EK::Remote: return e;
    case EK::Unop: return mk::call(mk::remote_op(e->op), {translate(e->kids[0])});
    case EK::Binop: return mk::call(mk::remote_op(e->op), {translate(e->kids[0]), translate(e->kids[1])});
    case EK::Call: {
      std::vector<ExprP> args;
      for (std::size_t j = 1; j < e->kids.size(); ++j) args.push_back(translate(e->kids[j]));
      return mk::call(translate(e->kids[0]), std::move(args));
    }
    case EK::Put:
    case EK::Get:
    case EK::Oid: break;
  }
  throw std::invalid_argument("translate: input is already a futures program");
}

inline CmdP translate(const CmdP& c) {
  switch (c->k) {
    case CK::Skip: return c;
    case CK::Seq: return mk::seq(translate(c->c1), translate(c->c2));
    case CK::Assign: return mk::assign(c->var, translate(c->e));
    case CK::If: return mk::if_(mk::get(translate(c->e)), translate(c->c1), translate(c->c2));
    case CK::While: return mk::while_(mk::get(translate(c->e)), translate(c->c1));
  }
  throw std::logic_error("translate: unknown command");
}

}  // namespace gridarray::lang
