#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gridarray/core.hpp"
#include "gridarray/graph.hpp"

namespace gridarray {

// What a scheduled task computes; Reduce partial sums run as binary adds.
struct KernelDesc {
  Kind kind = Kind::binary;
  UnaryOp uop = UnaryOp::neg;
  BinaryOp bop = BinaryOp::add;
  bool bcast_col = false;
  int axes = 0;
  int axis = 0;

  static KernelDesc of(const Vertex& v) {
    KernelDesc k;
    k.kind = v.kind == Kind::reduce ? Kind::binary : v.kind;
    k.uop = v.uop;
    k.bop = v.bop;
    k.bcast_col = v.bcast_col;
    k.axes = v.axes;
    k.axis = v.axis;
    return k;
  }
  bool operator==(const KernelDesc&) const = default;
};

struct KernelArg {
  const Tensor* t = nullptr;
  bool transposed = false;
};

namespace kernel {

inline double apply_unary(UnaryOp op, double x) {
  switch (op) {
    case UnaryOp::neg: return -x;
    case UnaryOp::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case UnaryOp::one_minus: return 1.0 - x;
  }
  return x;
}

inline double apply_binary(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::add: return a + b;
    case BinaryOp::sub: return a - b;
    case BinaryOp::mul: return a * b;
  }
  return a;
}

inline Tensor unary(UnaryOp op, const Tensor& x) {
  Tensor out = x;
  for (auto& e : out.data) e = apply_unary(op, e);
  return out;
}

inline Tensor binary(BinaryOp op, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape)
    throw shape_error("binary kernel shapes " + dims_str(a.shape) + " vs " + dims_str(b.shape));
  Tensor out(a.shape);
  for (Index i = 0; i < a.size(); ++i) out[i] = apply_binary(op, a[i], b[i]);
  return out;
}

// out[i,j] = a[i,j] op c[i].
inline Tensor binary_cols(BinaryOp op, const Tensor& a, const Tensor& c) {
  if (a.rank() != 2 || c.rank() != 1 || a.shape[0] != c.shape[0])
    throw shape_error("column broadcast kernel shapes " + dims_str(a.shape) + " vs " +
                      dims_str(c.shape));
  Tensor out(a.shape);
  for (Index i = 0; i < a.shape[0]; ++i)
    for (Index j = 0; j < a.shape[1]; ++j) out.at2(i, j) = apply_binary(op, a.at2(i, j), c[i]);
  return out;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[0])
    throw shape_error("matmul kernel shapes " + dims_str(a.shape) + " @ " + dims_str(b.shape));
  Index m = a.shape[0], q = a.shape[1], n = b.shape[1];
  Tensor out(Shape{m, n});
  for (Index i = 0; i < m; ++i)
    for (Index h = 0; h < q; ++h) {
      double x = a.at2(i, h);
      for (Index j = 0; j < n; ++j) out.at2(i, j) += x * b.at2(h, j);
    }
  return out;
}

// Contracts the trailing n axes of a with the leading n axes of b; scalar results are (1,).
inline Tensor tensordot(const Tensor& a, const Tensor& b, int n) {
  auto ra = static_cast<int>(a.rank()), rb = static_cast<int>(b.rank());
  if (n < 1 || n > ra || n > rb) throw shape_error("tensordot kernel: invalid axis count");
  for (int i = 0; i < n; ++i)
    if (a.shape[static_cast<std::size_t>(ra - n + i)] != b.shape[static_cast<std::size_t>(i)])
      throw shape_error("tensordot kernel shapes " + dims_str(a.shape) + " . " +
                        dims_str(b.shape));
  Shape outer_a(a.shape.begin(), a.shape.end() - n);
  Shape outer_b(b.shape.begin() + n, b.shape.end());
  Index P = product(outer_a), Q = product(outer_b);
  Index K = a.size() / P;
  Shape s = outer_a;
  s.insert(s.end(), outer_b.begin(), outer_b.end());
  if (s.empty()) s = {1};
  Tensor out(s);
  for (Index i = 0; i < P; ++i)
    for (Index k = 0; k < K; ++k) {
      double x = a[i * K + k];
      for (Index j = 0; j < Q; ++j) out[i * Q + j] += x * b[k * Q + j];
    }
  return out;
}

// out[i,f] = sum_{j,k} x[i,j,k] * bm[i,f] * cm[j,f].
inline Tensor mttkrp(const Tensor& x, const Tensor& bm, const Tensor& cm) {
  if (x.rank() != 3 || bm.rank() != 2 || cm.rank() != 2 || x.shape[0] != bm.shape[0] ||
      x.shape[1] != cm.shape[0] || bm.shape[1] != cm.shape[1])
    throw shape_error("mttkrp kernel shapes " + dims_str(x.shape) + ", " + dims_str(bm.shape) +
                      ", " + dims_str(cm.shape));
  Index I = x.shape[0], J = x.shape[1], K = x.shape[2], F = bm.shape[1];
  Tensor out(Shape{I, F});
  for (Index i = 0; i < I; ++i)
    for (Index j = 0; j < J; ++j) {
      double s = 0;
      for (Index k = 0; k < K; ++k) s += x[(i * J + j) * K + k];
      for (Index f = 0; f < F; ++f) out.at2(i, f) += s * bm.at2(i, f) * cm.at2(j, f);
    }
  return out;
}

inline Tensor sum_axis(const Tensor& x, int axis) {
  if (axis < 0 || axis >= x.rank()) throw shape_error("sum_axis kernel: invalid axis");
  auto a = static_cast<std::size_t>(axis);
  Index outer = 1, inner = 1;
  for (std::size_t i = 0; i < a; ++i) outer *= x.shape[i];
  for (std::size_t i = a + 1; i < x.shape.size(); ++i) inner *= x.shape[i];
  Shape s = x.shape;
  s.erase(s.begin() + axis);
  if (s.empty()) s = {1};
  Tensor out(s);
  Index len = x.shape[a];
  for (Index o = 0; o < outer; ++o)
    for (Index h = 0; h < len; ++h)
      for (Index i = 0; i < inner; ++i) out[o * inner + i] += x[(o * len + h) * inner + i];
  return out;
}

}  // namespace kernel

inline Tensor run_kernel(const KernelDesc& k, const std::vector<KernelArg>& args) {
  std::vector<Tensor> owned;
  std::vector<const Tensor*> in;
  owned.reserve(args.size());
  for (const auto& a : args) {
    if (!a.t) throw std::logic_error("kernel argument missing");
    if (a.transposed && a.t->rank() == 2) {
      owned.push_back(transpose2(*a.t));
      in.push_back(&owned.back());
    } else {
      in.push_back(a.t);
    }
  }
  auto need = [&](std::size_t n) {
    if (in.size() != n) throw std::logic_error("kernel arity mismatch");
  };
  switch (k.kind) {
    case Kind::unary: need(1); return kernel::unary(k.uop, *in[0]);
    case Kind::binary:
      need(2);
      return k.bcast_col ? kernel::binary_cols(k.bop, *in[0], *in[1])
                         : kernel::binary(k.bop, *in[0], *in[1]);
    case Kind::matmul: need(2); return kernel::matmul(*in[0], *in[1]);
    case Kind::tensordot: need(2); return kernel::tensordot(*in[0], *in[1], k.axes);
    case Kind::einsum: need(3); return kernel::mttkrp(*in[0], *in[1], *in[2]);
    case Kind::reduce_axis: need(1); return kernel::sum_axis(*in[0], k.axis);
    case Kind::leaf:
    case Kind::reduce: break;
  }
  throw std::logic_error("no kernel for vertex kind");
}

}  // namespace gridarray
