#pragma once

// Serial reference evaluation on whole arrays. Deliberately written with explicit
// index loops and no use of the library kernels.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gridarray/core.hpp"

namespace oracle {

using gridarray::Index;
using gridarray::Shape;
using gridarray::Tensor;

inline Tensor map(const Tensor& x, double (*f)(double)) {
  Tensor out(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = f(x.data[i]);
  return out;
}

inline double neg_fn(double v) { return -v; }
inline double sigmoid_fn(double v) { return 1.0 / (1.0 + std::exp(-v)); }
inline double one_minus_fn(double v) { return 1.0 - v; }

inline Tensor neg(const Tensor& x) { return map(x, neg_fn); }
inline Tensor sigmoid(const Tensor& x) { return map(x, sigmoid_fn); }
inline Tensor one_minus(const Tensor& x) { return map(x, one_minus_fn); }

inline Tensor zip(const Tensor& a, const Tensor& b, int op) {
  if (a.shape != b.shape) throw std::invalid_argument("oracle: shape mismatch");
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double x = a.data[i], y = b.data[i];
    out.data[i] = op == 0 ? x + y : op == 1 ? x - y : x * y;
  }
  return out;
}
inline Tensor add(const Tensor& a, const Tensor& b) { return zip(a, b, 0); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return zip(a, b, 1); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return zip(a, b, 2); }

inline Tensor mul_cols(const Tensor& a, const Tensor& c) {
  Tensor out(a.shape);
  Index n = a.shape[0], d = a.shape[1];
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j)
      out.data[static_cast<std::size_t>(i * d + j)] =
          a.data[static_cast<std::size_t>(i * d + j)] * c.data[static_cast<std::size_t>(i)];
  return out;
}

inline Tensor transpose(const Tensor& a) {
  if (a.shape.size() == 1) return a;
  Index n = a.shape[0], m = a.shape[1];
  Tensor out(Shape{m, n});
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j)
      out.data[static_cast<std::size_t>(j * n + i)] = a.data[static_cast<std::size_t>(i * m + j)];
  return out;
}

// C[i][j] += A[i][h] * B[h][j]; vectors act as a column (rhs) or row (lhs).
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  bool av = a.shape.size() == 1, bv = b.shape.size() == 1;
  Index n = av ? 1 : a.shape[0], q = av ? a.shape[0] : a.shape[1];
  Index m = bv ? 1 : b.shape[1];
  if (b.shape[0] != q) throw std::invalid_argument("oracle: inner dims");
  std::vector<double> c(static_cast<std::size_t>(n * m), 0.0);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j)
      for (Index h = 0; h < q; ++h)
        c[static_cast<std::size_t>(i * m + j)] +=
            a.data[static_cast<std::size_t>(i * q + h)] * b.data[static_cast<std::size_t>(h * m + j)];
  Shape s;
  if (!av) s.push_back(n);
  if (!bv) s.push_back(m);
  if (s.empty()) s = {1};
  return Tensor(s, c);
}

inline Tensor sum_axis(const Tensor& x, int axis) {
  Shape s;
  for (std::size_t a = 0; a < x.shape.size(); ++a)
    if (static_cast<int>(a) != axis) s.push_back(x.shape[a]);
  if (s.empty()) s = {1};
  Tensor out(s);
  auto st = gridarray::strides_of(x.shape);
  for (Index f = 0; f < x.size(); ++f) {
    Index o = 0, rem = f;
    for (std::size_t a = 0; a < x.shape.size(); ++a) {
      Index c = rem / st[a];
      rem %= st[a];
      if (static_cast<int>(a) != axis) o = o * x.shape[a] + c;
    }
    out.data[static_cast<std::size_t>(o)] += x.data[static_cast<std::size_t>(f)];
  }
  return out;
}

// Sums g equal slabs of x along axis.
inline Tensor slab_sum(const Tensor& x, int axis, Index g) {
  Shape s = x.shape;
  auto a = static_cast<std::size_t>(axis);
  Index c = s[a] / g;
  s[a] = c;
  Tensor out(s);
  auto st = gridarray::strides_of(x.shape);
  auto ost = gridarray::strides_of(s);
  for (Index f = 0; f < x.size(); ++f) {
    Index o = 0, rem = f;
    for (std::size_t b = 0; b < x.shape.size(); ++b) {
      Index idx = rem / st[b];
      rem %= st[b];
      o += (b == a ? idx % c : idx) * ost[b];
    }
    out.data[static_cast<std::size_t>(o)] += x.data[static_cast<std::size_t>(f)];
  }
  return out;
}

// Contract trailing n axes of a with leading n axes of b.
inline Tensor tensordot(const Tensor& a, const Tensor& b, int n) {
  Shape oa(a.shape.begin(), a.shape.end() - n), ob(b.shape.begin() + n, b.shape.end());
  Index P = 1, Q = 1, K = 1;
  for (Index d : oa) P *= d;
  for (Index d : ob) Q *= d;
  for (int i = 0; i < n; ++i) K *= b.shape[static_cast<std::size_t>(i)];
  Shape s = oa;
  s.insert(s.end(), ob.begin(), ob.end());
  if (s.empty()) s = {1};
  Tensor out(s);
  for (Index p = 0; p < P; ++p)
    for (Index q = 0; q < Q; ++q) {
      double acc = 0;
      for (Index k = 0; k < K; ++k)
        acc += a.data[static_cast<std::size_t>(p * K + k)] * b.data[static_cast<std::size_t>(k * Q + q)];
      out.data[static_cast<std::size_t>(p * Q + q)] = acc;
    }
  return out;
}

// out[i][f] = sum over j,k of X[i][j][k] * B[i][f] * C[j][f].
inline Tensor mttkrp(const Tensor& x, const Tensor& bm, const Tensor& cm) {
  Index I = x.shape[0], J = x.shape[1], K = x.shape[2], F = bm.shape[1];
  Tensor out(Shape{I, F});
  for (Index i = 0; i < I; ++i)
    for (Index f = 0; f < F; ++f) {
      double acc = 0;
      for (Index j = 0; j < J; ++j)
        for (Index k = 0; k < K; ++k)
          acc += x.data[static_cast<std::size_t>((i * J + j) * K + k)] *
                 bm.data[static_cast<std::size_t>(i * F + f)] *
                 cm.data[static_cast<std::size_t>(j * F + f)];
      out.data[static_cast<std::size_t>(i * F + f)] = acc;
    }
  return out;
}

// max |a-b| / max(1, max |b|).
inline double rel_err(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) return INFINITY;
  double num = 0, den = 1;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    num = std::max(num, std::abs(a.data[i] - b.data[i]));
    den = std::max(den, std::abs(b.data[i]));
  }
  return num / den;
}

}  // namespace oracle
