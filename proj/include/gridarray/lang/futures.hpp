#pragma once

// Process-system runtime for futures programs, simulated on one thread.
//
// Processes: the driver M, workers W_1..k, store readers S^r_0..k and the store writer S^w.
// Channels are unbounded FIFOs: alpha_i carries seals into S^w (alpha_0 from M, alpha_i from
// W_i), beta_i carries calls from M to W_i, gamma_i carries get requests to S^r_i and the
// replies back (client 0 is M, client i is W_i). Each transition fires one enabled process
// step picked uniformly by a seeded generator; the same generator draws rand(k).
// Local driver computation up to its next channel operation is one transition, since no
// other process can observe it.

#include <algorithm>
#include <deque>
#include <random>
#include <set>

#include "gridarray/lang/machine.hpp"
#include "gridarray/lang/translate.hpp"

namespace gridarray::lang {

struct FuturesOptions {
  int workers = 1;
  std::uint64_t seed = 0;
  Limits limits;
  std::int64_t max_transitions = 10000000;
};

struct FuturesResult {
  bool deadlock = false;
  bool bottom = false;        // driver state sigma''
  Store sigma;
  bool mu_bottom = false;     // object store mu
  std::map<std::uint64_t, Value> mu;
  std::size_t store_violations = 0;    // a key rewritten with a different value, or mu shrinking
  std::size_t channel_violations = 0;  // a message written by a process not allowed to
  std::size_t transitions = 0;
  std::string reason;
};

namespace detail {

// Process identities for channel instrumentation.
struct Pid {
  enum Kind { driver, worker, reader, writer } kind;
  int index = 0;
  bool operator==(const Pid& o) const { return kind == o.kind && index == o.index; }
};

struct Call {
  Value fn;  // the R(...) value
  std::uint64_t out;
  std::vector<std::uint64_t> args;
};

struct Seal {
  std::uint64_t oid;
  Value value;
};

template <class T>
struct Channel {
  std::vector<Pid> writers;  // allowed senders
  std::deque<T> q;
  std::size_t* violations;

  void send(const Pid& from, T msg) {
    if (std::find(writers.begin(), writers.end(), from) == writers.end()) ++*violations;
    q.push_back(std::move(msg));
  }
  T take() {
    T m = std::move(q.front());
    q.pop_front();
    return m;
  }
  bool ready() const { return !q.empty(); }
};

class World {
 public:
  World(const CmdP& program, const FuturesOptions& opt)
      : opt_(opt), rng_(opt.seed), driver_(Machine::World::driver, opt.limits) {
    if (opt.workers < 1) throw std::invalid_argument("futures runtime needs at least one worker");
    const int k = opt.workers;
    auto* cv = &res_.channel_violations;
    alpha_.resize(k + 1);
    beta_.resize(k + 1);
    request_.resize(k + 1);
    reply_.resize(k + 1);
    for (int i = 0; i <= k; ++i) {
      Pid client = i == 0 ? Pid{Pid::driver, 0} : Pid{Pid::worker, i};
      alpha_[i] = {{client}, {}, cv};
      beta_[i] = {{Pid{Pid::driver, 0}}, {}, cv};
      request_[i] = {{client}, {}, cv};
      reply_[i] = {{Pid{Pid::reader, i}}, {}, cv};
    }
    workers_.resize(k + 1);
    readers_.resize(k + 1);
    driver_.start(program);
  }

  FuturesResult run() {
    for (;;) {
      auto enabled = collect();
      if (enabled.empty()) break;
      if (res_.transitions++ >= static_cast<std::size_t>(opt_.max_transitions))
        throw step_limit_error("futures transition limit exceeded");
      std::uniform_int_distribution<std::size_t> pick(0, enabled.size() - 1);
      fire(enabled[pick(rng_)]);
    }
    if (!driver_done_) {
      res_.deadlock = true;
      if (res_.reason.empty()) res_.reason = "deadlock: no process can move and the driver is not finished";
    }
    res_.bottom = sigma_bottom_;
    if (!sigma_bottom_) res_.sigma = driver_.state().vars;
    res_.mu_bottom = mu_bottom_;
    if (!mu_bottom_) res_.mu = mu_;
    return std::move(res_);
  }

 private:
  enum class T { driver, worker, reader, writer, main_error, store_error };
  struct Move {
    T t;
    int i = 0;
  };

  struct WorkerState {
    enum { idle, fetching } st = idle;
    Call job;
    std::vector<Value> vals;
  };

  struct ReaderState {
    bool waiting = false;
    std::uint64_t oid = 0;
  };

  std::vector<Move> collect() const {
    std::vector<Move> out;
    const int k = opt_.workers;
    if (!driver_done_ && (!driver_waiting_ || reply_[0].ready())) out.push_back({T::driver});
    for (int i = 1; i <= k; ++i) {
      const auto& w = workers_[i];
      if (w.st == WorkerState::idle ? beta_[i].ready() : reply_[i].ready()) out.push_back({T::worker, i});
    }
    for (int i = 0; i <= k; ++i) {
      const auto& r = readers_[i];
      if (r.waiting ? (mu_bottom_ || mu_.count(r.oid)) : request_[i].ready()) out.push_back({T::reader, i});
    }
    if (std::any_of(alpha_.begin(), alpha_.end(), [](const auto& c) { return c.ready(); })) out.push_back({T::writer});
    if (sigma_bottom_ && !mu_bottom_) out.push_back({T::main_error});
    if (mu_bottom_ && !sigma_bottom_) out.push_back({T::store_error});
    return out;
  }

  void fire(const Move& m) {
    switch (m.t) {
      case T::driver: return step_driver();
      case T::worker: return step_worker(m.i);
      case T::reader: return step_reader(m.i);
      case T::writer: return step_writer();
      case T::main_error:  // the driver diverged: the store follows
        mu_bottom_ = true;
        mu_.clear();
        return;
      case T::store_error:  // the store diverged: the driver follows
        set_sigma_bottom("object store reached bottom");
        return;
    }
  }

  void set_sigma_bottom(const std::string& why) {
    sigma_bottom_ = true;
    driver_done_ = true;
    driver_waiting_ = false;
    if (res_.reason.empty()) res_.reason = why;
  }

  void step_driver() {
    const Pid me{Pid::driver, 0};
    if (driver_waiting_) {
      driver_waiting_ = false;
      driver_.resume(reply_[0].take());  // an error reply sends the driver to bottom
    }
    auto s = driver_.run();
    if (s == Machine::Status::done) {
      driver_done_ = true;
      if (driver_.state().bottom) set_sigma_bottom(driver_.state().reason);
      return;
    }
    const Effect& e = driver_.effect();
    switch (e.kind) {
      case Effect::put: {
        std::uint64_t o = oid_of(e.value);
        alpha_[0].send(me, Seal{o, e.value});
        driver_.resume(Value::object(o));
        return;
      }
      case Effect::get:
        request_[0].send(me, e.oid);
        driver_waiting_ = true;
        return;
      case Effect::rcall: {
        std::uint64_t o = oid_of_call(to_string(e.remote), e.args);
        std::uniform_int_distribution<int> rand_k(1, opt_.workers);
        int i = rand_k(rng_);
        beta_[i].send(me, Call{Value::remote(e.remote), o, e.args});
        driver_.resume(Value::object(o));
        return;
      }
    }
  }

  // Receives a call, then issues its gets one at a time, then evaluates and seals.
  void step_worker(int i) {
    const Pid me{Pid::worker, i};
    auto& w = workers_[i];
    if (w.st == WorkerState::idle) {
      w.job = beta_[i].take();
      w.vals.clear();
      w.st = WorkerState::fetching;
    } else {
      w.vals.push_back(reply_[i].take());
    }
    if (w.vals.size() < w.job.args.size()) {
      request_[i].send(me, w.job.args[w.vals.size()]);
      return;
    }
    alpha_[i].send(me, Seal{w.job.out, evaluate(w.job.fn, w.vals)});
    w.st = WorkerState::idle;
  }

  Value evaluate(const Value& remote, const std::vector<Value>& args) const {
    for (const auto& a : args)
      if (a.is_error()) return a;
    const Expr& r = *remote.fn;
    if (r.kids.empty()) return apply_op(r.op, args);
    return apply_function(Value::func(r.kids[0]), args, opt_.limits);
  }

  // wait(o) until sealed, then snd(mu(o)); a bottom store answers error.
  void step_reader(int i) {
    auto& r = readers_[i];
    if (!r.waiting) {
      r.oid = request_[i].take();
      r.waiting = true;
      return;
    }
    r.waiting = false;
    reply_[i].send(Pid{Pid::reader, i}, mu_bottom_ ? Value::error("read from a bottom store") : mu_.at(r.oid));
  }

  void step_writer() {
    std::vector<int> ready;
    for (int j = 0; j < static_cast<int>(alpha_.size()); ++j)
      if (alpha_[j].ready()) ready.push_back(j);
    std::shuffle(ready.begin(), ready.end(), rng_);
    Seal s = alpha_[ready.front()].take();
    if (mu_bottom_) return;
    if (s.value.is_error()) {
      mu_bottom_ = true;
      mu_.clear();
      if (res_.reason.empty()) res_.reason = "sealed an error: " + s.value.msg;
      return;
    }
    std::size_t before = mu_.size();
    auto [it, fresh] = mu_.emplace(s.oid, s.value);
    if (!fresh && !(it->second == s.value)) ++res_.store_violations;
    if (mu_.size() < before) ++res_.store_violations;
  }

  FuturesOptions opt_;
  std::mt19937_64 rng_;
  FuturesResult res_;
  Machine driver_;
  bool driver_done_ = false;
  bool driver_waiting_ = false;
  bool sigma_bottom_ = false;
  bool mu_bottom_ = false;
  std::map<std::uint64_t, Value> mu_;
  std::vector<Channel<Seal>> alpha_;
  std::vector<Channel<Call>> beta_;
  std::vector<Channel<std::uint64_t>> request_;
  std::vector<Channel<Value>> reply_;
  std::vector<WorkerState> workers_;
  std::vector<ReaderState> readers_;
};

}  // namespace detail

inline FuturesResult eval_futures(const CmdP& program, const FuturesOptions& opt = {}) {
  return detail::World(program, opt).run();
}

// Serial state sigma' against the futures result: both bottom, or every serial binding is
// reachable through the store. A function binding matches R over the same literal.
inline bool check_equivalence(const SerialState& serial, const FuturesResult& fut) {
  if (fut.deadlock) return false;
  if (serial.bottom) return fut.bottom && fut.mu_bottom;
  if (fut.bottom || fut.mu_bottom) return false;
  for (const auto& [x, v] : serial.vars) {
    auto it = fut.sigma.find(x);
    if (it == fut.sigma.end()) return false;
    const Value& f = it->second;
    if (v.k == VK::Func) {
      if (f.k != VK::Remote || f.fn->kids.empty() || !same(f.fn->kids[0], v.fn)) return false;
      continue;
    }
    if (f.k != VK::Oid) return false;
    auto m = fut.mu.find(f.oid);
    if (m == fut.mu.end() || !(m->second == v)) return false;
  }
  return true;
}

struct Verdict {
  SerialState serial;
  FuturesResult futures;
  bool equivalent = false;
};

// Runs p serially and its translation in the futures world, then compares.
inline Verdict run_both(const CmdP& p, const FuturesOptions& opt = {}) {
  Verdict v;
  v.serial = eval_serial(p, opt.limits);
  v.futures = eval_futures(translate(p), opt);
  v.equivalent = check_equivalence(v.serial, v.futures);
  return v;
}

}  // namespace gridarray::lang
