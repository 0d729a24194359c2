#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridarray {

using Index = std::int64_t;
using Shape = std::vector<Index>;    // elements per axis
using Grid = std::vector<Index>;     // blocks per axis
using BlockId = std::vector<Index>;  // block coordinate per axis

struct Range {
  Index lo = 0;
  Index hi = 0;
  Index size() const { return hi - lo; }
  bool operator==(const Range&) const = default;
};
using BlockExtent = std::vector<Range>;

class shape_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string dims_str(const std::vector<Index>& d, char sep = 'x') {
  std::ostringstream os;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) os << sep;
    os << d[i];
  }
  return os.str();
}

inline Index product(const std::vector<Index>& d) {
  return std::accumulate(d.begin(), d.end(), Index{1}, std::multiplies<>());
}

inline Index divup(Index n, Index k) {
  if (n < 1 || k < 1) throw std::invalid_argument("divup: arguments must be >= 1");
  return (n + k - 1) / k;
}

inline void check_shape(const Shape& s) {
  if (s.empty()) throw shape_error("shape must have at least one axis");
  for (Index d : s)
    if (d < 1) throw shape_error("shape dims must be >= 1: " + dims_str(s));
}

inline void check_grid(const Shape& s, const Grid& g) {
  check_shape(s);
  if (g.size() != s.size())
    throw shape_error("grid rank " + std::to_string(g.size()) + " != shape rank " +
                      std::to_string(s.size()));
  for (std::size_t a = 0; a < s.size(); ++a)
    if (g[a] < 1 || g[a] > s[a])
      throw shape_error("grid " + dims_str(g) + " incompatible with shape " + dims_str(s));
}

// Softmax over the dims, p^sigma per axis, round, clamp to [1, dim], then shrink
// the largest grid dim until the product fits in p.
inline Grid auto_grid(const Shape& shape, Index p) {
  check_shape(shape);
  if (p < 1) throw std::invalid_argument("auto_grid: p must be >= 1");
  double mx = static_cast<double>(*std::max_element(shape.begin(), shape.end()));
  std::vector<double> e(shape.size());
  double z = 0;
  for (std::size_t a = 0; a < shape.size(); ++a) {
    e[a] = std::exp(static_cast<double>(shape[a]) - mx);
    z += e[a];
  }
  Grid g(shape.size());
  for (std::size_t a = 0; a < shape.size(); ++a) {
    double v = std::round(std::pow(static_cast<double>(p), e[a] / z));
    g[a] = std::clamp(static_cast<Index>(v), Index{1}, shape[a]);
  }
  while (product(g) > p) {
    auto it = std::max_element(g.begin(), g.end());
    --*it;
  }
  // Ceil-split leaves trailing blocks empty when g does not divide nicely (5 over 4).
  for (std::size_t a = 0; a < g.size(); ++a)
    while (g[a] > 1 && (g[a] - 1) * divup(shape[a], g[a]) >= shape[a]) --g[a];
  return g;
}

inline Index num_blocks(const Grid& g) { return product(g); }

inline std::vector<Index> strides_of(const std::vector<Index>& dims) {
  std::vector<Index> st(dims.size(), 1);
  for (std::size_t a = dims.size(); a-- > 1;) st[a - 1] = st[a] * dims[a];
  return st;
}

inline Index flat_index(const BlockId& id, const Grid& g) {
  Index f = 0;
  for (std::size_t a = 0; a < g.size(); ++a) f = f * g[a] + id[a];
  return f;
}

inline BlockId unflat_index(Index f, const Grid& g) {
  BlockId id(g.size());
  for (std::size_t a = g.size(); a-- > 0;) {
    id[a] = f % g[a];
    f /= g[a];
  }
  return id;
}

// All block ids of a grid in row-major order.
inline std::vector<BlockId> block_ids(const Grid& g) {
  std::vector<BlockId> out;
  Index n = num_blocks(g);
  out.reserve(static_cast<std::size_t>(n));
  for (Index f = 0; f < n; ++f) out.push_back(unflat_index(f, g));
  return out;
}

inline BlockExtent block_extent(const Shape& shape, const Grid& grid, const BlockId& id) {
  check_grid(shape, grid);
  if (id.size() != grid.size()) throw shape_error("block id rank mismatch");
  BlockExtent ext(shape.size());
  for (std::size_t a = 0; a < shape.size(); ++a) {
    if (id[a] < 0 || id[a] >= grid[a])
      throw std::out_of_range("block id " + dims_str(id, ',') + " outside grid " + dims_str(grid));
    Index c = divup(shape[a], grid[a]);
    ext[a] = Range{id[a] * c, std::min((id[a] + 1) * c, shape[a])};
  }
  return ext;
}

inline Shape extent_shape(const BlockExtent& e) {
  Shape s(e.size());
  for (std::size_t a = 0; a < e.size(); ++a) s[a] = e[a].size();
  return s;
}

inline Shape block_shape(const Shape& shape, const Grid& grid, const BlockId& id) {
  return extent_shape(block_extent(shape, grid, id));
}

// Grids that leave an empty trailing block are rejected.
inline void check_nonempty_blocks(const Shape& shape, const Grid& grid) {
  check_grid(shape, grid);
  for (std::size_t a = 0; a < shape.size(); ++a)
    if ((grid[a] - 1) * divup(shape[a], grid[a]) >= shape[a])
      throw shape_error("grid " + dims_str(grid) + " leaves empty blocks for shape " +
                        dims_str(shape));
}

// Dense row-major float64 tensor.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0)
      : shape(std::move(s)), data(static_cast<std::size_t>(product(shape)), fill) {}
  Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<Index>(data.size()) != product(shape))
      throw shape_error("tensor data size does not match shape " + dims_str(shape));
  }

  Index size() const { return static_cast<Index>(data.size()); }
  Index rank() const { return static_cast<Index>(shape.size()); }
  double& operator[](Index i) { return data[static_cast<std::size_t>(i)]; }
  double operator[](Index i) const { return data[static_cast<std::size_t>(i)]; }
  double& at2(Index i, Index j) { return data[static_cast<std::size_t>(i * shape[1] + j)]; }
  double at2(Index i, Index j) const { return data[static_cast<std::size_t>(i * shape[1] + j)]; }
  bool operator==(const Tensor&) const = default;
};

// Copies the sub-tensor covered by ext.
inline Tensor slice(const Tensor& t, const BlockExtent& ext) {
  Tensor out(extent_shape(ext));
  auto src_st = strides_of(t.shape);
  auto dst_st = strides_of(out.shape);
  std::vector<Index> idx(ext.size(), 0);
  for (Index f = 0; f < out.size(); ++f) {
    Index rem = f, src = 0;
    for (std::size_t a = 0; a < ext.size(); ++a) {
      Index c = rem / dst_st[a];
      rem %= dst_st[a];
      src += (ext[a].lo + c) * src_st[a];
    }
    out[f] = t[src];
  }
  return out;
}

inline void paste(Tensor& dst, const Tensor& block, const BlockExtent& ext) {
  auto dst_st = strides_of(dst.shape);
  auto blk_st = strides_of(block.shape);
  for (Index f = 0; f < block.size(); ++f) {
    Index rem = f, off = 0;
    for (std::size_t a = 0; a < ext.size(); ++a) {
      Index c = rem / blk_st[a];
      rem %= blk_st[a];
      off += (ext[a].lo + c) * dst_st[a];
    }
    dst[off] = block[f];
  }
}

// 1-D tensors transpose to themselves.
inline Tensor transpose2(const Tensor& t) {
  if (t.rank() == 1) return t;
  if (t.rank() != 2) throw shape_error("transpose needs rank <= 2");
  Tensor out(Shape{t.shape[1], t.shape[0]});
  for (Index i = 0; i < t.shape[0]; ++i)
    for (Index j = 0; j < t.shape[1]; ++j) out.at2(j, i) = t.at2(i, j);
  return out;
}

inline Shape transposed_shape(const Shape& s) { return Shape(s.rbegin(), s.rend()); }

}  // namespace gridarray
