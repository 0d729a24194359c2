#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridarray/cluster.hpp"
#include "gridarray/exec.hpp"
#include "gridarray/graph.hpp"
#include "gridarray/scheduler.hpp"

namespace gridarray {

// p blocks of n elements over k nodes with r workers each; p = k * r.
struct OpProfile {
  Index p = 1;
  Index k = 1;
  Index r = 1;
  Index n = 1;
  CostParams params;

  static OpProfile of(Index k, Index r, Index n, CostParams c = {}) { return {k * r, k, r, n, c}; }
  void validate() const {
    if (k < 1 || r < 1 || n < 1 || p != k * r)
      throw std::invalid_argument("profile needs k, r, n >= 1 and p = k*r");
    params.validate();
  }
};

inline double log2d(double x) { return std::log2(x); }

inline Index exact_sqrt(Index v) {
  auto s = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v))));
  if (s * s != v) throw std::invalid_argument(std::to_string(v) + " is not a perfect square");
  return s;
}

// Ray mode includes one R(n) for the store write of each block's output.
inline double lb_elementwise(const OpProfile& f, CommMode mode = CommMode::dask) {
  double t = f.params.gamma * static_cast<double>(f.p);
  if (mode == CommMode::ray) t += f.params.R(static_cast<double>(f.n));
  return t;
}

inline double lb_reduce(const OpProfile& f) {
  const auto& c = f.params;
  auto n = static_cast<double>(f.n);
  return c.gamma * static_cast<double>(f.p - 1) + log2d(static_cast<double>(f.r)) * c.R(n) +
         log2d(static_cast<double>(f.k)) * c.C(n);
}

inline double lb_inner(const OpProfile& f) {
  const auto& c = f.params;
  auto n = static_cast<double>(f.n);
  return c.gamma * static_cast<double>(2 * f.p - 1) + log2d(static_cast<double>(f.k)) * c.C(n) +
         (1 + log2d(static_cast<double>(f.r))) * c.R(n);
}

inline double lb_outer(const OpProfile& f) {
  double sk = static_cast<double>(exact_sqrt(f.k));
  return f.params.gamma * static_cast<double>(f.p) +
         2 * (sk - 1) * static_cast<double>(f.r) * f.params.C(static_cast<double>(f.n));
}

// Diagonal terms ignored; no gamma term.
inline double lb_matmul(const OpProfile& f) {
  double sk = std::sqrt(static_cast<double>(f.k)), sr = std::sqrt(static_cast<double>(f.r));
  auto n = static_cast<double>(f.n);
  return (sk + log2d(sk)) * static_cast<double>(f.r) * f.params.C(n) + log2d(sr) * f.params.R(n);
}

// Before dropping the diagonal terms: (k-1)/sqrt(k) in place of sqrt(k). Zero network at k=1.
inline double lb_matmul_precise(const OpProfile& f) {
  double sk = std::sqrt(static_cast<double>(f.k)), sr = std::sqrt(static_cast<double>(f.r));
  auto n = static_cast<double>(f.n);
  return ((static_cast<double>(f.k) - 1) / sk + log2d(sk)) * static_cast<double>(f.r) * f.params.C(n) +
         log2d(sr) * f.params.R(n);
}

// 2 sqrt(kr) log2(sqrt(kr)) C(n).
inline double summa_cost(const OpProfile& f) {
  double sp = std::sqrt(static_cast<double>(f.k * f.r));
  return 2 * sp * log2d(sp) * f.params.C(static_cast<double>(f.n));
}

// The split into node and worker terms, 2 sqrt(k) log2(sqrt(k)) C(n) + 2 sqrt(r) log2(sqrt(r)) C(n).
// Not equal to summa_cost in general; reported separately.
inline double summa_split_cost(const OpProfile& f) {
  double sk = std::sqrt(static_cast<double>(f.k)), sr = std::sqrt(static_cast<double>(f.r));
  double c = f.params.C(static_cast<double>(f.n));
  return 2 * sk * log2d(sk) * c + 2 * sr * log2d(sr) * c;
}

enum class Family { unary, binary, reduce, inner, outer, matmul };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::unary: return "unary";
    case Family::binary: return "binary";
    case Family::reduce: return "reduce";
    case Family::inner: return "inner";
    case Family::outer: return "outer";
    case Family::matmul: return "matmul";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  for (Family f : {Family::unary, Family::binary, Family::reduce, Family::inner, Family::outer,
                   Family::matmul})
    if (s == family_name(f)) return f;
  throw std::invalid_argument("unknown op family: " + s);
}

inline double lower_bound(Family fam, const OpProfile& f, CommMode mode) {
  switch (fam) {
    case Family::unary:
    case Family::binary: return lb_elementwise(f, mode);
    case Family::reduce: return lb_reduce(f);
    case Family::inner: return lb_inner(f);
    case Family::outer: return lb_outer(f);
    case Family::matmul: return lb_matmul(f);
  }
  return 0;
}

// A built instance: context with inputs placed by the layout, plus the op's output.
struct Instance {
  Context ctx;
  GraphArray out;
};

// Square b x b blocks with b*b = n. Elementwise, reduce and inner use p row blocks on a
// k x 1 node grid; outer and matmul use a sqrt(k) x sqrt(k) node grid.
inline Instance build_instance(Family fam, const OpProfile& f, std::uint64_t seed = 1) {
  f.validate();
  Index b = exact_sqrt(f.n);
  auto r = static_cast<int>(f.r);
  switch (fam) {
    case Family::unary:
    case Family::binary:
    case Family::reduce:
    case Family::inner: {
      Instance in{Context(NodeGrid({f.k, 1}, r)), {}};
      auto x = in.ctx.random({f.p * b, b}, {f.p, 1}, seed);
      if (fam == Family::unary) {
        in.out = ew_unary(UnaryOp::neg, x);
      } else if (fam == Family::reduce) {
        in.out = block_sum(x, 0);
      } else {
        auto y = in.ctx.random({f.p * b, b}, {f.p, 1}, seed + 1);
        in.out = fam == Family::binary ? ew_binary(BinaryOp::add, x, y) : matmul(transpose(x), y);
      }
      return in;
    }
    case Family::outer:
    case Family::matmul: {
      Index sk = exact_sqrt(f.k), sp = exact_sqrt(f.p);
      Instance in{Context(NodeGrid({sk, sk}, r)), {}};
      if (fam == Family::outer) {
        auto x = in.ctx.random({sp * b, b}, {sp, 1}, seed);
        auto y = in.ctx.random({sp * b, b}, {sp, 1}, seed + 1);
        in.out = matmul(x, transpose(y));
      } else {
        auto x = in.ctx.random({sp * b, sp * b}, {sp, sp}, seed);
        auto y = in.ctx.random({sp * b, sp * b}, {sp, sp}, seed + 1);
        in.out = matmul(x, y);
      }
      return in;
    }
  }
  throw std::logic_error("unknown family");
}

struct SimResult {
  double seconds = 0;
  Index internode_elements = 0;
  std::size_t internode_transfers = 0;
  std::size_t tasks = 0;
  Schedule schedule;
};

inline SimResult simulate(Family fam, const OpProfile& f, CommMode mode,
                          SchedulerKind sched = SchedulerKind::lshs, std::uint64_t seed = 0) {
  Instance in = build_instance(fam, f);
  SimResult s;
  s.schedule = in.ctx.plan({in.out}, sched, seed);
  auto recs = s.schedule.records();
  s.seconds = comm_time(recs, f.params, mode);
  s.internode_elements = internode_elements(recs);
  s.internode_transfers = internode_transfers(recs);
  s.tasks = recs.size();
  return s;
}

struct CompareRow {
  std::string op;
  Family family = Family::unary;
  Index k = 1, r = 1, n = 1;
  double bound_s = 0;
  double sim_s = 0;
  bool below_bound = false;  // simulation beat the stated lower bound
  bool attains = false;      // equal within 1e-9 relative

  double ratio() const { return bound_s > 0 ? sim_s / bound_s : (sim_s == 0 ? 1.0 : INFINITY); }
};

inline bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

inline CompareRow compare(const std::string& op, Family fam, const OpProfile& f, double sim_s,
                          CommMode mode) {
  CompareRow row;
  row.op = op;
  row.family = fam;
  row.k = f.k;
  row.r = f.r;
  row.n = f.n;
  row.bound_s = lower_bound(fam, f, mode);
  row.sim_s = sim_s;
  row.attains = nearly_equal(sim_s, row.bound_s);
  row.below_bound = !row.attains && sim_s < row.bound_s;
  return row;
}

inline void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
  os << "op,family,k,r,n,bound_s,sim_s,ratio\n";
  os.precision(12);
  for (const auto& r : rows)
    os << r.op << ',' << family_name(r.family) << ',' << r.k << ',' << r.r << ',' << r.n << ','
       << r.bound_s << ',' << r.sim_s << ',' << r.ratio() << '\n';
}

}  // namespace gridarray
