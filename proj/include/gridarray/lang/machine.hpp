#pragma once

// CEK-style evaluator shared by the serial interpreter, the futures driver and the
// workers. Continuations live on the heap so deep recursion cannot overflow the C++ stack.
//
// Fuel: a while loop whose guard still holds after `fuel` iterations sends the state to
// bottom, and a call nested deeper than `fuel` evaluates to error. Both are the bounded
// forms of the non-termination rules, so serial and futures runs agree on bottom.
// max_steps is a separate safety cap on total transitions; hitting it throws.

#include <map>
#include <optional>
#include <set>
#include <variant>

#include "gridarray/lang/ast.hpp"

namespace gridarray::lang {

struct Limits {
  std::int64_t fuel = 100000;
  std::int64_t max_steps = 50000000;
};

struct step_limit_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Store = std::map<std::string, Value>;

// A variable store or bottom.
struct SerialState {
  bool bottom = false;
  Store vars;
  std::string reason;  // why bottom was reached

  bool operator==(const SerialState& o) const { return bottom == o.bottom && (bottom || vars == o.vars); }
};

// ---- object ids ----

// 64-bit FNV-1a over a canonical encoding. Collisions are treated as impossible at the
// scale of these programs.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t oid_of(const Value& v) {
  if (v.is_error()) throw std::invalid_argument("oid_of: error has no id");
  return fnv1a("v:" + to_string(v));
}

// Identity of a remote invocation: the function's canonical text plus its argument ids.
inline std::uint64_t oid_of_call(const std::string& fn, const std::vector<std::uint64_t>& args) {
  std::string s = "c:" + fn;
  for (auto a : args) s += "," + oid_text(a);
  return fnv1a(s);
}

// ---- substitution ----

// Replaces free occurrences of bound names in e by their value literals.
inline ExprP substitute(const ExprP& e, const Store& env, const std::set<std::string>& shadow = {}) {
  switch (e->k) {
    case EK::Var: {
      if (shadow.count(e->name)) return e;
      auto it = env.find(e->name);
      return it == env.end() ? e : value_expr(it->second);
    }
    case EK::Func: {
      std::set<std::string> inner = shadow;
      inner.insert(e->name);
      inner.insert(e->params.begin(), e->params.end());
      ExprP body = substitute(e->kids[0], env, inner);
      return body == e->kids[0] ? e : mk::func(e->name, e->params, body);
    }
    default: {
      if (e->kids.empty()) return e;
      Expr copy = *e;
      bool changed = false;
      for (auto& kid : copy.kids) {
        ExprP n = substitute(kid, env, shadow);
        changed |= n != kid;
        kid = std::move(n);
      }
      return changed ? mk::node(std::move(copy)) : e;
    }
  }
}

// ---- primitive operators ----

inline Value apply_op(Op op, const std::vector<Value>& a) {
  auto want = [&](std::size_t n) -> std::optional<Value> {
    if (a.size() != n) return Value::error(std::string("operator ") + op_remote_name(op) + " takes " + std::to_string(n) + " arguments");
    return std::nullopt;
  };
  auto type_error = [&] { return Value::error(std::string("type error in ") + op_remote_name(op)); };
  // Wrapping arithmetic keeps overflow defined.
  auto wrap = [](std::uint64_t v) { return Value::integer(static_cast<std::int64_t>(v)); };
  if (is_unary(op)) {
    if (auto e = want(1)) return *e;
    if (op == Op::neg) return a[0].k == VK::Int ? wrap(0 - static_cast<std::uint64_t>(a[0].i)) : type_error();
    return a[0].k == VK::Bool ? Value::boolean(!a[0].b) : type_error();
  }
  if (auto e = want(2)) return *e;
  const Value &x = a[0], &y = a[1];
  switch (op) {
    case Op::eq: return Value::boolean(x == y);
    case Op::and_:
    case Op::or_:
      if (x.k != VK::Bool || y.k != VK::Bool) return type_error();
      return Value::boolean(op == Op::and_ ? (x.b && y.b) : (x.b || y.b));
    default: break;
  }
  if (x.k != VK::Int || y.k != VK::Int) return type_error();
  auto ux = static_cast<std::uint64_t>(x.i), uy = static_cast<std::uint64_t>(y.i);
  switch (op) {
    case Op::add: return wrap(ux + uy);
    case Op::sub: return wrap(ux - uy);
    case Op::mul: return wrap(ux * uy);
    case Op::lt: return Value::boolean(x.i < y.i);
    default: return type_error();
  }
}

// ---- machine ----

// A request the machine cannot serve itself; the futures driver answers it with resume().
struct Effect {
  enum Kind { put, get, rcall } kind = put;
  Value value;                        // put payload
  std::uint64_t oid = 0;              // get target
  ExprP remote;                       // rcall: the R(...) expression
  std::vector<std::uint64_t> args;    // rcall argument ids
};

class Machine {
 public:
  enum class World { serial, driver };
  enum class Status { running, effect, done };

  Machine(World w, Limits lim) : world_(w), lim_(lim) {}

  void start(CmdP c, Store globals = {}) {
    reset();
    sigma_.vars = std::move(globals);
    ctl_ = ExecC{std::move(c)};
    is_cmd_ = true;
  }

  void start_expr(ExprP e, Store globals = {}) {
    reset();
    sigma_.vars = std::move(globals);
    ctl_ = EvalE{std::move(e), nullptr};
    is_cmd_ = false;
  }

  // Starts f(args) as a top-level expression; no globals are visible.
  void start_apply(const Value& f, std::vector<Value> args) {
    reset();
    is_cmd_ = false;
    apply(f, std::move(args));
  }

  Status status() const { return status_; }
  const Effect& effect() const { return effect_; }
  const SerialState& state() const { return sigma_; }
  const Value& result() const { return result_; }
  std::int64_t steps() const { return steps_; }

  // One small step.
  Status step() {
    if (status_ != Status::running) return status_;
    if (++steps_ > lim_.max_steps) throw step_limit_error("step limit exceeded");
    Control c = std::move(ctl_);  // handlers overwrite ctl_
    std::visit([this](auto& x) { this->on(x); }, c);
    return status_;
  }

  Status run() {
    while (status_ == Status::running) step();
    return status_;
  }

  void resume(Value v) {
    if (status_ != Status::effect) throw std::logic_error("machine is not waiting on an effect");
    status_ = Status::running;
    ctl_ = RetV{std::move(v)};
  }

 private:
  using Env = std::shared_ptr<const Store>;  // locals; null at top level
  struct EvalE { ExprP e; Env env; };
  struct ExecC { CmdP c; };
  struct RetV { Value v; };
  struct RetC {};
  using Control = std::variant<EvalE, ExecC, RetV, RetC>;

  struct FOp { Op op; std::vector<Value> done; std::vector<ExprP> rest; Env env; };
  struct FCall { Value fn; bool have_fn = false; std::vector<Value> done; std::vector<ExprP> rest; Env env; };
  struct FRet {};
  struct FPut {};
  struct FGet {};
  struct FAssign { std::string x; };
  struct FIf { CmdP t, f; };
  struct FWhileCond { CmdP w; std::int64_t left; };
  struct FWhileBody { CmdP w; std::int64_t left; };
  struct FSeq { CmdP next; };
  using Frame = std::variant<FOp, FCall, FRet, FPut, FGet, FAssign, FIf, FWhileCond, FWhileBody, FSeq>;

  void reset() {
    frames_.clear();
    sigma_ = {};
    result_ = {};
    status_ = Status::running;
    depth_ = 0;
    steps_ = 0;
  }

  void finish_bottom(const std::string& why) {
    sigma_.bottom = true;
    sigma_.vars.clear();
    sigma_.reason = why;
    frames_.clear();
    status_ = Status::done;
  }

  // An error value takes the whole surrounding context with it.
  void raise(const std::string& msg) {
    frames_.clear();
    if (is_cmd_) {
      finish_bottom(msg);
    } else {
      result_ = Value::error(msg);
      status_ = Status::done;
    }
  }

  std::optional<Value> lookup(const std::string& x, const Env& env) const {
    if (env) {
      auto it = env->find(x);
      if (it != env->end()) return it->second;
    }
    auto it = sigma_.vars.find(x);
    if (it != sigma_.vars.end()) return it->second;
    return std::nullopt;
  }

  void apply(const Value& f, std::vector<Value> args) {
    if (f.k == VK::Func) {
      const Expr& lit = *f.fn;
      if (lit.params.size() != args.size()) {
        raise(lit.name + " expects " + std::to_string(lit.params.size()) + " arguments, got " + std::to_string(args.size()));
        return;
      }
      if (depth_ >= lim_.fuel) {
        raise("call depth exceeded fuel");
        return;
      }
      auto env = std::make_shared<Store>();
      (*env)[lit.name] = f;
      for (std::size_t j = 0; j < args.size(); ++j) (*env)[lit.params[j]] = std::move(args[j]);
      ++depth_;
      frames_.push_back(FRet{});
      ctl_ = EvalE{lit.kids[0], std::move(env)};
      return;
    }
    if (f.k == VK::Remote) {
      const Expr& r = *f.fn;
      if (world_ == World::serial) {
        // A worker applying R(op) to plain values computes the operator directly.
        if (r.kids.empty()) {
          ctl_ = RetV{apply_op(r.op, args)};
          return;
        }
        raise("remote call outside the futures runtime");
        return;
      }
      Effect e;
      e.kind = Effect::rcall;
      e.remote = f.fn;
      for (const auto& a : args) {
        if (a.k != VK::Oid) {
          raise("remote call argument is not an object id");
          return;
        }
        e.args.push_back(a.oid);
      }
      effect_ = std::move(e);
      status_ = Status::effect;
      return;
    }
    raise("call of a non-function value " + to_string(f));
  }

  void on(EvalE& c) {
    const Expr& e = *c.e;
    switch (e.k) {
      case EK::Int: ctl_ = RetV{Value::integer(e.i)}; return;
      case EK::Bool: ctl_ = RetV{Value::boolean(e.b)}; return;
      case EK::Null: ctl_ = RetV{Value::null()}; return;
      case EK::Oid:
        if (world_ == World::serial) return raise("object id outside the futures runtime");
        ctl_ = RetV{Value::object(e.oid)};
        return;
      case EK::Var: {
        if (is_cmd_ && sigma_.bottom) return raise("read on bottom");
        auto v = lookup(e.name, c.env);
        if (!v) return raise("unbound variable " + e.name);
        ctl_ = RetV{*v};
        return;
      }
      case EK::Func:
        ctl_ = RetV{Value::func(c.env ? substitute(c.e, *c.env) : c.e)};
        return;
      case EK::Remote:
        if (world_ == World::serial) return raise("R(...) outside the futures runtime");
        ctl_ = RetV{Value::remote(c.env ? substitute(c.e, *c.env) : c.e)};
        return;
      case EK::Unop:
      case EK::Binop:
        frames_.push_back(FOp{e.op, {}, {e.kids.begin() + 1, e.kids.end()}, c.env});
        ctl_ = EvalE{e.kids[0], c.env};
        return;
      case EK::Call:
        frames_.push_back(FCall{{}, false, {}, {e.kids.begin() + 1, e.kids.end()}, c.env});
        ctl_ = EvalE{e.kids[0], c.env};
        return;
      case EK::Put:
      case EK::Get:
        if (world_ == World::serial) return raise(std::string(e.k == EK::Put ? "put" : "get") + " outside the futures runtime");
        if (e.k == EK::Put) frames_.push_back(FPut{}); else frames_.push_back(FGet{});
        ctl_ = EvalE{e.kids[0], c.env};
        return;
    }
  }

  void on(ExecC& c) {
    const Cmd& cmd = *c.c;
    switch (cmd.k) {
      case CK::Skip: ctl_ = RetC{}; return;
      case CK::Seq:
        frames_.push_back(FSeq{cmd.c2});
        ctl_ = ExecC{cmd.c1};
        return;
      case CK::Assign:
        frames_.push_back(FAssign{cmd.var});
        ctl_ = EvalE{cmd.e, nullptr};
        return;
      case CK::If:
        frames_.push_back(FIf{cmd.c1, cmd.c2});
        ctl_ = EvalE{cmd.e, nullptr};
        return;
      case CK::While:
        frames_.push_back(FWhileCond{c.c, lim_.fuel});
        ctl_ = EvalE{cmd.e, nullptr};
        return;
    }
  }

  void on(RetC&) {
    if (frames_.empty()) {
      status_ = Status::done;
      return;
    }
    Frame f = std::move(frames_.back());
    frames_.pop_back();
    if (auto* s = std::get_if<FSeq>(&f)) {
      ctl_ = ExecC{s->next};
    } else if (auto* w = std::get_if<FWhileBody>(&f)) {
      frames_.push_back(FWhileCond{w->w, w->left});
      ctl_ = EvalE{w->w->e, nullptr};
    } else {
      throw std::logic_error("command finished under an expression frame");
    }
  }

  void on(RetV& r) {
    if (r.v.is_error()) return raise(r.v.msg);
    if (frames_.empty()) {
      result_ = std::move(r.v);
      status_ = Status::done;
      return;
    }
    Frame& top = frames_.back();
    if (auto* op = std::get_if<FOp>(&top)) {
      op->done.push_back(std::move(r.v));
      if (!op->rest.empty()) {
        ExprP next = op->rest.front();
        op->rest.erase(op->rest.begin());
        ctl_ = EvalE{next, op->env};
        return;
      }
      Value out = apply_op(op->op, op->done);
      frames_.pop_back();
      ctl_ = RetV{std::move(out)};
      return;
    }
    if (auto* call = std::get_if<FCall>(&top)) {
      if (!call->have_fn) {
        call->fn = std::move(r.v);
        call->have_fn = true;
      } else {
        call->done.push_back(std::move(r.v));
      }
      if (!call->rest.empty()) {
        ExprP next = call->rest.front();
        call->rest.erase(call->rest.begin());
        ctl_ = EvalE{next, call->env};
        return;
      }
      FCall done = std::move(*call);
      frames_.pop_back();
      apply(done.fn, std::move(done.done));
      return;
    }
    Frame f = std::move(top);
    frames_.pop_back();
    if (std::holds_alternative<FRet>(f)) {
      --depth_;
      ctl_ = RetV{std::move(r.v)};
    } else if (std::holds_alternative<FPut>(f)) {
      effect_ = Effect{};
      effect_.kind = Effect::put;
      effect_.value = std::move(r.v);
      status_ = Status::effect;
    } else if (std::holds_alternative<FGet>(f)) {
      if (r.v.k != VK::Oid) return raise("get of a non-object value");
      effect_ = Effect{};
      effect_.kind = Effect::get;
      effect_.oid = r.v.oid;
      status_ = Status::effect;
    } else if (auto* a = std::get_if<FAssign>(&f)) {
      sigma_.vars[a->x] = std::move(r.v);
      ctl_ = RetC{};
    } else if (auto* i = std::get_if<FIf>(&f)) {
      if (r.v.k != VK::Bool) return raise("if guard is not a boolean");
      ctl_ = ExecC{r.v.b ? i->t : i->f};
    } else if (auto* w = std::get_if<FWhileCond>(&f)) {
      if (r.v.k != VK::Bool) return raise("while guard is not a boolean");
      if (!r.v.b) {
        ctl_ = RetC{};
      } else if (w->left == 0) {
        finish_bottom("while loop exceeded fuel");
      } else {
        frames_.push_back(FWhileBody{w->w, w->left - 1});
        ctl_ = ExecC{w->w->c1};
      }
    }
  }

  World world_;
  Limits lim_;
  Control ctl_;
  std::vector<Frame> frames_;
  SerialState sigma_;
  Value result_;
  Effect effect_;
  Status status_ = Status::done;
  bool is_cmd_ = true;
  std::int64_t depth_ = 0;
  std::int64_t steps_ = 0;
};

// ---- serial entry points ----

inline SerialState eval_serial(const CmdP& program, Limits lim = {}) {
  Machine m(Machine::World::serial, lim);
  m.start(program);
  m.run();
  return m.state();
}

inline Value eval_expr(const ExprP& e, Limits lim = {}, Store globals = {}) {
  Machine m(Machine::World::serial, lim);
  m.start_expr(e, std::move(globals));
  m.run();
  return m.result();
}

// f applied to values with no visible globals; what a worker computes for one call.
inline Value apply_function(const Value& f, std::vector<Value> args, Limits lim = {}) {
  Machine m(Machine::World::serial, lim);
  m.start_apply(f, std::move(args));
  m.run();
  return m.result();
}

}  // namespace gridarray::lang
