#pragma once

// Logistic regression by Newton's method on row-partitioned arrays, plus synthetic data
// and CSV ingestion.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gridarray/exec.hpp"

namespace gridarray {

// X is n x d on a q x 1 grid; y is (n,) on (q,). d is small so beta, g and H are one block each.
struct GlmProblem {
  GraphArray X;
  GraphArray y;
  double eps = 1e-6;
  int max_iter = 50;
};

inline void check_problem(const GlmProblem& p) {
  if (p.X.rank() != 2 || p.y.rank() != 1) throw shape_error("glm: X must be 2-D and y 1-D");
  if (p.X.shape[0] != p.y.shape[0]) throw shape_error("glm: X has " + std::to_string(p.X.shape[0]) +
                                                      " rows but y has " + std::to_string(p.y.shape[0]));
  if (p.X.grid[1] != 1 || p.X.grid[0] != p.y.grid[0]) throw shape_error("glm: X and y need matching q x 1 row grids");
  if (!(p.eps > 0) || p.max_iter < 0) throw std::invalid_argument("glm: eps must be > 0 and max_iter >= 0");
}

// mu = sigmoid(X beta); beta is a single block that LSHS broadcasts to X's nodes.
inline GraphArray logistic_mu(const GraphArray& X, const GraphArray& beta) {
  if (beta.rank() != 1 || beta.grid != Grid{1}) throw shape_error("logistic_mu: beta must be one 1-D block");
  return ew_unary(UnaryOp::sigmoid, matmul(X, beta));
}

// g = X^T (mu - y), reduced to one block.
inline GraphArray logistic_grad(const GraphArray& X, const GraphArray& y, const GraphArray& mu) {
  return matmul(transpose(X), ew_binary(BinaryOp::sub, mu, y));
}

// H = X^T (c * X) with c = mu * (1 - mu) applied to every column of X.
inline GraphArray logistic_hess(const GraphArray& X, const GraphArray& mu) {
  GraphArray c = ew_binary(BinaryOp::mul, mu, ew_unary(UnaryOp::one_minus, mu));
  return matmul(transpose(X), mul_columns(X, c));
}

struct NewtonOptions {
  SchedulerKind scheduler = SchedulerKind::lshs;
  std::uint64_t seed = 0;
};

struct NewtonIter {
  double grad_norm = 0;
  Index internode_elements = 0;
  std::size_t internode_transfers = 0;
  bool damped = false;
  Schedule schedule;
};

struct NewtonResult {
  Tensor beta;
  int iterations = 0;  // beta updates performed
  double grad_norm = 0;
  bool converged = false;
  std::vector<NewtonIter> history;  // one entry per gradient evaluation
  std::vector<Tensor> betas;        // beta before each gradient evaluation
  LoadTrace trace;
};

struct SolveResult {
  Eigen::VectorXd x;
  bool damped = false;
};

// Solves H s = g by Cholesky; on failure retries with H + lambda I, lambda = 1e-8 trace(H) / d.
inline SolveResult solve_spd(const Eigen::MatrixXd& H, const Eigen::VectorXd& g) {
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() == Eigen::Success) return {llt.solve(g), false};
  double lambda = 1e-8 * H.trace() / static_cast<double>(H.rows());
  Eigen::MatrixXd Hd = H;
  Hd.diagonal().array() += lambda;
  llt.compute(Hd);
  if (llt.info() != Eigen::Success || !(lambda > 0)) throw std::runtime_error("glm: Hessian is singular after damping");
  return {llt.solve(g), true};
}

// Each iteration is one schedule and execute of {g, H}; the solve and the beta update
// run on the driver and beta is re-created on node 0.
inline NewtonResult newton(Context& ctx, const GlmProblem& p, NewtonOptions opt = {}) {
  check_problem(p);
  const Index d = p.X.shape[1];
  NewtonResult res;
  res.beta = Tensor(Shape{d}, 0.0);
  for (int it = 0;; ++it) {
    GraphArray beta = ctx.from_dense(res.beta, {1});
    GraphArray mu = logistic_mu(p.X, beta);
    std::vector<GraphArray> outs{logistic_grad(p.X, p.y, mu), logistic_hess(p.X, mu)};
    RunInfo info;
    auto vals = ctx.compute(outs, opt.scheduler, opt.seed + static_cast<std::uint64_t>(it), &info);
    Tensor g = ctx.to_dense(vals[0]), H = ctx.to_dense(vals[1]);
    Eigen::Map<const Eigen::VectorXd> gv(g.data.data(), d);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Hm(H.data.data(), d, d);

    NewtonIter rec;
    rec.grad_norm = gv.norm();
    rec.internode_elements = info.schedule.internode_elements();
    for (const auto& st : info.schedule.steps) rec.internode_transfers += st.transfers.size();
    res.trace.steps.insert(res.trace.steps.end(), info.trace.steps.begin(), info.trace.steps.end());
    res.betas.push_back(res.beta);
    res.grad_norm = rec.grad_norm;
    if (rec.grad_norm <= p.eps || it == p.max_iter) {
      res.converged = rec.grad_norm <= p.eps;
      rec.schedule = std::move(info.schedule);
      res.history.push_back(std::move(rec));
      return res;
    }
    SolveResult step = solve_spd(Hm, gv);
    rec.damped = step.damped;
    rec.schedule = std::move(info.schedule);
    res.history.push_back(std::move(rec));
    for (Index i = 0; i < d; ++i) res.beta[i] -= step.x(i);
    res.iterations = it + 1;
  }
}

// ---- data ----

struct Dataset {
  Tensor X;  // n x d
  Tensor y;  // (n,) of 0/1
};

// Label 1 with probability 0.25. Class 0 features ~ N(10, 2), class 1 ~ N(30, 4) (variances).
inline Dataset synth_bimodal(Index n, Index d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("synth_bimodal: n and d must be >= 1");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution label(0.25);
  std::normal_distribution<double> c0(10.0, std::sqrt(2.0)), c1(30.0, 2.0);
  Dataset ds{Tensor(Shape{n, d}), Tensor(Shape{n})};
  for (Index i = 0; i < n; ++i) {
    bool one = label(rng);
    ds.y[i] = one ? 1.0 : 0.0;
    for (Index j = 0; j < d; ++j) ds.X.at2(i, j) = one ? c1(rng) : c0(rng);
  }
  return ds;
}

// Prepends a column of ones.
inline Tensor with_intercept(const Tensor& X) {
  Index n = X.shape[0], d = X.shape[1];
  Tensor out(Shape{n, d + 1});
  for (Index i = 0; i < n; ++i) {
    out.at2(i, 0) = 1.0;
    for (Index j = 0; j < d; ++j) out.at2(i, j + 1) = X.at2(i, j);
  }
  return out;
}

// Fraction of rows where sigmoid(x beta) >= 0.5 agrees with the label.
inline double accuracy(const Tensor& X, const Tensor& y, const Tensor& beta) {
  Index n = X.shape[0], d = X.shape[1];
  if (beta.size() != d || y.size() != n) throw shape_error("accuracy: dimension mismatch");
  Index hit = 0;
  for (Index i = 0; i < n; ++i) {
    double z = 0;
    for (Index j = 0; j < d; ++j) z += X.at2(i, j) * beta[j];
    if ((z >= 0) == (y[i] >= 0.5)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(n);
}

struct csv_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline bool parse_number(const std::string& cell, double& v) {
  std::size_t b = cell.find_first_not_of(" \t"), e = cell.find_last_not_of(" \t");
  if (b == std::string::npos) return false;
  const char* first = cell.data() + b;
  const char* last = cell.data() + e + 1;
  if (*first == '+') ++first;
  auto r = std::from_chars(first, last, v);
  return r.ec == std::errc() && r.ptr == last;
}

}  // namespace detail

// Numeric CSV; a first line with any non-numeric cell is a header. Errors name line and column.
inline Tensor parse_csv(std::istream& in, const std::string& name = "<csv>") {
  std::vector<double> data;
  Index cols = -1, rows = 0;
  std::string line;
  for (Index lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty() || line == "\r") continue;
    auto cells = detail::split_cells(line);
    std::vector<double> row(cells.size());
    std::size_t bad = cells.size();
    for (std::size_t c = 0; c < cells.size() && bad == cells.size(); ++c)
      if (!detail::parse_number(cells[c], row[c])) bad = c;
    if (bad != cells.size()) {
      if (lineno == 1) continue;
      throw csv_error(name + ":" + std::to_string(lineno) + ":" + std::to_string(bad + 1) +
                      ": non-numeric cell '" + cells[bad] + "'");
    }
    if (cols < 0) cols = static_cast<Index>(cells.size());
    if (static_cast<Index>(cells.size()) != cols)
      throw csv_error(name + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) + " cells, got " +
                      std::to_string(cells.size()));
    data.insert(data.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw csv_error(name + ": no data rows");
  return Tensor(Shape{rows, cols}, std::move(data));
}

inline Tensor read_csv_dense(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw csv_error(path + ": cannot open");
  return parse_csv(f, path);
}

// Rows are split into row_blocks blocks placed by the context's creation policy.
inline GraphArray read_csv(Context& ctx, const std::string& path, Index row_blocks) {
  Tensor t = read_csv_dense(path);
  return ctx.from_dense(t, {row_blocks, 1});
}

inline void write_csv(std::ostream& os, const Tensor& t) {
  if (t.rank() != 2) throw shape_error("write_csv: need a 2-D tensor");
  os << std::setprecision(17);
  for (Index i = 0; i < t.shape[0]; ++i)
    for (Index j = 0; j < t.shape[1]; ++j)
      os << t.at2(i, j) << (j + 1 == t.shape[1] ? '\n' : ',');
}

// Last column is the label.
inline Dataset split_label(const Tensor& t) {
  if (t.rank() != 2 || t.shape[1] < 2) throw shape_error("split_label: need at least two columns");
  Index n = t.shape[0], d = t.shape[1] - 1;
  Dataset ds{Tensor(Shape{n, d}), Tensor(Shape{n})};
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) ds.X.at2(i, j) = t.at2(i, j);
    ds.y[i] = t.at2(i, d);
  }
  return ds;
}

}  // namespace gridarray
