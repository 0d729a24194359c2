#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "gridarray/cluster.hpp"
#include "gridarray/core.hpp"

namespace gridarray {

using VertexId = std::int64_t;

enum class Kind { leaf, unary, binary, matmul, tensordot, einsum, reduce, reduce_axis };
enum class UnaryOp { neg, sigmoid, one_minus };
enum class BinaryOp { add, sub, mul };

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::leaf: return "Leaf";
    case Kind::unary: return "Unary";
    case Kind::binary: return "BinaryEW";
    case Kind::matmul: return "BlockMatMul";
    case Kind::tensordot: return "BlockTensorDot";
    case Kind::einsum: return "BlockEinsum";
    case Kind::reduce: return "Reduce";
    case Kind::reduce_axis: return "ReduceAxis";
  }
  return "?";
}

inline const char* unary_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::neg: return "neg";
    case UnaryOp::sigmoid: return "sigmoid";
    case UnaryOp::one_minus: return "one_minus";
  }
  return "?";
}

inline const char* binary_name(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "add";
    case BinaryOp::sub: return "sub";
    case BinaryOp::mul: return "mul";
  }
  return "?";
}

// A child reference; t marks a lazily transposed operand.
struct Ref {
  VertexId id = -1;
  bool t = false;
  bool operator==(const Ref&) const = default;
};

struct Vertex {
  Kind kind = Kind::leaf;
  std::vector<Ref> children;
  Shape shape;        // output block shape
  BlockExtent extent; // global extent of the output block this vertex contributes to
  UnaryOp uop = UnaryOp::neg;
  BinaryOp bop = BinaryOp::add;
  bool bcast_col = false;  // binary: rhs is a vector scaling every column of lhs
  int axes = 0;            // tensordot: contracted axis count
  int axis = 0;            // reduce_axis
  ObjectId object = 0;     // leaf payload

  Index out_size() const { return product(shape); }
  bool is_op() const { return kind != Kind::leaf; }
};

struct Graph {
  std::vector<Vertex> v;

  VertexId add(Vertex x) {
    v.push_back(std::move(x));
    return static_cast<VertexId>(v.size()) - 1;
  }
  const Vertex& at(VertexId id) const { return v.at(static_cast<std::size_t>(id)); }
  Shape ref_shape(const Ref& r) const {
    const auto& s = at(r.id).shape;
    return r.t ? transposed_shape(s) : s;
  }
};

struct GraphArray {
  std::shared_ptr<Graph> g;
  Shape shape;
  Grid grid;
  std::vector<Ref> roots;  // row-major over grid

  const Ref& root(const BlockId& id) const {
    return roots.at(static_cast<std::size_t>(flat_index(id, grid)));
  }
  bool materialized() const {
    for (const auto& r : roots)
      if (g->at(r.id).kind != Kind::leaf) return false;
    return true;
  }
  Index rank() const { return static_cast<Index>(shape.size()); }
};

inline void same_graph(const GraphArray& a, const GraphArray& b) {
  if (a.g != b.g) throw std::invalid_argument("operands belong to different graphs");
}

// Leaf-only array over existing objects, one per block in row-major order.
inline GraphArray make_leaf_array(std::shared_ptr<Graph> g, Shape shape, Grid grid,
                                  const std::vector<ObjectId>& objects) {
  check_nonempty_blocks(shape, grid);
  GraphArray out{g, shape, grid, {}};
  auto ids = block_ids(grid);
  if (ids.size() != objects.size()) throw std::invalid_argument("object count != block count");
  for (std::size_t b = 0; b < ids.size(); ++b) {
    Vertex v;
    v.kind = Kind::leaf;
    v.extent = block_extent(shape, grid, ids[b]);
    v.shape = extent_shape(v.extent);
    v.object = objects[b];
    out.roots.push_back({g->add(std::move(v)), false});
  }
  return out;
}

inline GraphArray transpose(const GraphArray& x) {
  if (x.rank() > 2) throw shape_error("transpose needs rank <= 2");
  if (x.rank() == 1) return x;
  GraphArray out{x.g, transposed_shape(x.shape), transposed_shape(x.grid), {}};
  for (const auto& id : block_ids(out.grid)) {
    Ref r = x.root({id[1], id[0]});
    r.t = !r.t;
    out.roots.push_back(r);
  }
  return out;
}

namespace detail {

inline BlockExtent out_extent(const Shape& shape, const Grid& grid, const BlockId& id) {
  return block_extent(shape, grid, id);
}

// Sums children with a Reduce vertex; a single child is returned unchanged.
inline Ref reduce_children(Graph& g, std::vector<Ref> kids, const BlockExtent& ext) {
  if (kids.empty()) throw std::logic_error("reduce over no children");
  if (kids.size() == 1) return kids[0];
  Vertex v;
  v.kind = Kind::reduce;
  v.bop = BinaryOp::add;
  v.shape = g.ref_shape(kids[0]);
  for (const auto& k : kids)
    if (g.ref_shape(k) != v.shape) throw shape_error("reduce children differ in shape");
  v.extent = ext;
  v.children = std::move(kids);
  return {g.add(std::move(v)), false};
}

}  // namespace detail

inline GraphArray ew_unary(UnaryOp op, const GraphArray& x) {
  GraphArray out{x.g, x.shape, x.grid, {}};
  auto ids = block_ids(x.grid);
  for (std::size_t b = 0; b < ids.size(); ++b) {
    Vertex v;
    v.kind = Kind::unary;
    v.uop = op;
    v.children = {x.roots[b]};
    v.shape = x.g->ref_shape(x.roots[b]);
    v.extent = detail::out_extent(x.shape, x.grid, ids[b]);
    out.roots.push_back({x.g->add(std::move(v)), false});
  }
  return out;
}

inline GraphArray ew_binary(BinaryOp op, const GraphArray& x, const GraphArray& y) {
  same_graph(x, y);
  if (x.shape != y.shape || x.grid != y.grid)
    throw shape_error("elementwise operands need equal shape and grid: " + dims_str(x.shape) +
                      "/" + dims_str(x.grid) + " vs " + dims_str(y.shape) + "/" +
                      dims_str(y.grid));
  GraphArray out{x.g, x.shape, x.grid, {}};
  auto ids = block_ids(x.grid);
  for (std::size_t b = 0; b < ids.size(); ++b) {
    Vertex v;
    v.kind = Kind::binary;
    v.bop = op;
    v.children = {x.roots[b], y.roots[b]};
    v.shape = x.g->ref_shape(x.roots[b]);
    v.extent = detail::out_extent(x.shape, x.grid, ids[b]);
    out.roots.push_back({x.g->add(std::move(v)), false});
  }
  return out;
}

// x (n, d) times vector c (n,) applied to every column: out[i,j] = x[i,j] * c[i].
inline GraphArray mul_columns(const GraphArray& x, const GraphArray& c) {
  same_graph(x, c);
  if (x.rank() != 2 || c.rank() != 1 || x.shape[0] != c.shape[0] || x.grid[0] != c.grid[0])
    throw shape_error("column broadcast needs x (n,d) and c (n,) with matching row grids");
  GraphArray out{x.g, x.shape, x.grid, {}};
  for (const auto& id : block_ids(x.grid)) {
    Vertex v;
    v.kind = Kind::binary;
    v.bop = BinaryOp::mul;
    v.bcast_col = true;
    v.children = {x.root(id), c.root({id[0]})};
    v.shape = x.g->ref_shape(x.root(id));
    v.extent = detail::out_extent(x.shape, x.grid, id);
    out.roots.push_back({x.g->add(std::move(v)), false});
  }
  return out;
}

// Blockwise ReduceAxis, then a Reduce across the blocks of that axis.
inline GraphArray sum_axis(const GraphArray& x, int axis) {
  if (axis < 0 || axis >= x.rank()) throw std::out_of_range("sum_axis: invalid axis");
  Shape oshape;
  Grid ogrid;
  for (Index a = 0; a < x.rank(); ++a)
    if (a != axis) {
      oshape.push_back(x.shape[static_cast<std::size_t>(a)]);
      ogrid.push_back(x.grid[static_cast<std::size_t>(a)]);
    }
  if (oshape.empty()) {
    oshape = {1};
    ogrid = {1};
  }
  GraphArray out{x.g, oshape, ogrid, {}};
  for (const auto& oid : block_ids(ogrid)) {
    std::vector<Ref> kids;
    for (Index h = 0; h < x.grid[static_cast<std::size_t>(axis)]; ++h) {
      BlockId xid;
      std::size_t k = 0;
      for (Index a = 0; a < x.rank(); ++a)
        xid.push_back(a == axis ? h : (x.rank() == 1 ? 0 : oid[k++]));
      Vertex v;
      v.kind = Kind::reduce_axis;
      v.axis = axis;
      Ref xr = x.root(xid);
      v.children = {xr};
      Shape s = x.g->ref_shape(xr);
      s.erase(s.begin() + axis);
      if (s.empty()) s = {1};
      v.shape = s;
      v.extent = detail::out_extent(oshape, ogrid, oid);
      kids.push_back({x.g->add(std::move(v)), false});
    }
    out.roots.push_back(detail::reduce_children(*x.g, kids, detail::out_extent(oshape, ogrid, oid)));
  }
  return out;
}

// Sums the blocks of x along a grid axis (a Reduce over whole blocks). The axis must
// split evenly; the result has that axis reduced to one block's extent.
inline GraphArray block_sum(const GraphArray& x, int axis) {
  if (axis < 0 || axis >= x.rank()) throw std::out_of_range("block_sum: invalid axis");
  auto a = static_cast<std::size_t>(axis);
  if (x.shape[a] % x.grid[a] != 0) throw shape_error("block_sum needs an even split");
  Shape oshape = x.shape;
  Grid ogrid = x.grid;
  oshape[a] = x.shape[a] / x.grid[a];
  ogrid[a] = 1;
  GraphArray out{x.g, oshape, ogrid, {}};
  for (const auto& oid : block_ids(ogrid)) {
    std::vector<Ref> kids;
    for (Index h = 0; h < x.grid[a]; ++h) {
      BlockId xid = oid;
      xid[a] = h;
      kids.push_back(x.root(xid));
    }
    out.roots.push_back(detail::reduce_children(*x.g, kids, detail::out_extent(oshape, ogrid, oid)));
  }
  return out;
}

// Contracts the trailing n axes of x with the leading n axes of y.
inline GraphArray tensordot(const GraphArray& x, const GraphArray& y, int n) {
  same_graph(x, y);
  auto rx = static_cast<int>(x.rank()), ry = static_cast<int>(y.rank());
  if (n < 1 || n > rx || n > ry) throw shape_error("tensordot: invalid axis count");
  for (int a = 0; a < n; ++a) {
    auto xa = static_cast<std::size_t>(rx - n + a), ya = static_cast<std::size_t>(a);
    if (x.shape[xa] != y.shape[ya] || x.grid[xa] != y.grid[ya])
      throw shape_error("tensordot: contracted axes differ in size or grid");
  }
  Shape oshape(x.shape.begin(), x.shape.end() - n);
  Grid ogrid(x.grid.begin(), x.grid.end() - n);
  oshape.insert(oshape.end(), y.shape.begin() + n, y.shape.end());
  ogrid.insert(ogrid.end(), y.grid.begin() + n, y.grid.end());
  if (oshape.empty()) {
    oshape = {1};
    ogrid = {1};
  }
  Grid kgrid(y.grid.begin(), y.grid.begin() + n);
  bool use_matmul = rx == 2 && ry == 2 && n == 1;
  GraphArray out{x.g, oshape, ogrid, {}};
  for (const auto& oid : block_ids(ogrid)) {
    std::vector<Ref> kids;
    BlockExtent ext = detail::out_extent(oshape, ogrid, oid);
    for (const auto& kid : block_ids(kgrid)) {
      BlockId xid(oid.begin(), oid.begin() + (rx - n));
      if (rx - n == 0 && !xid.empty()) xid.clear();
      xid.insert(xid.end(), kid.begin(), kid.end());
      BlockId yid = kid;
      if (rx + ry - 2 * n > 0) yid.insert(yid.end(), oid.begin() + (rx - n), oid.end());
      Ref xr = x.root(xid), yr = y.root(yid);
      Shape xs = x.g->ref_shape(xr), ys = x.g->ref_shape(yr);
      Vertex v;
      v.kind = use_matmul ? Kind::matmul : Kind::tensordot;
      v.axes = n;
      v.children = {xr, yr};
      Shape s(xs.begin(), xs.end() - n);
      s.insert(s.end(), ys.begin() + n, ys.end());
      if (s.empty()) s = {1};
      v.shape = s;
      v.extent = ext;
      kids.push_back({x.g->add(std::move(v)), false});
    }
    out.roots.push_back(detail::reduce_children(*x.g, kids, ext));
  }
  return out;
}

// Output block (i,j) sums q BlockMatMul products; vectors use a one-axis tensordot.
inline GraphArray matmul(const GraphArray& x, const GraphArray& y) {
  if (x.rank() > 2 || y.rank() > 2) throw shape_error("matmul needs rank <= 2 operands");
  return tensordot(x, y, 1);
}

// Only "ik,kj->ij" (matmul) and "ijk,if,jf->if" are supported.
inline GraphArray einsum(const std::string& pattern, const std::vector<GraphArray>& ops) {
  if (pattern == "ik,kj->ij") {
    if (ops.size() != 2) throw std::invalid_argument("einsum ik,kj->ij takes 2 operands");
    if (ops[0].rank() != 2 || ops[1].rank() != 2) throw shape_error("einsum ik,kj->ij needs matrices");
    return matmul(ops[0], ops[1]);
  }
  if (pattern != "ijk,if,jf->if")
    throw std::invalid_argument("unsupported einsum pattern: " + pattern);
  if (ops.size() != 3) throw std::invalid_argument("einsum ijk,if,jf->if takes 3 operands");
  const auto &x = ops[0], &b = ops[1], &c = ops[2];
  same_graph(x, b);
  same_graph(x, c);
  if (x.rank() != 3 || b.rank() != 2 || c.rank() != 2) throw shape_error("einsum operand ranks");
  auto eq = [](const GraphArray& p, int pa, const GraphArray& q, int qa) {
    return p.shape[static_cast<std::size_t>(pa)] == q.shape[static_cast<std::size_t>(qa)] &&
           p.grid[static_cast<std::size_t>(pa)] == q.grid[static_cast<std::size_t>(qa)];
  };
  if (!eq(x, 0, b, 0) || !eq(x, 1, c, 0) || !eq(b, 1, c, 1))
    throw shape_error("einsum ijk,if,jf->if: index extents or grids disagree");
  Shape oshape{x.shape[0], b.shape[1]};
  Grid ogrid{x.grid[0], b.grid[1]};
  GraphArray out{x.g, oshape, ogrid, {}};
  for (const auto& oid : block_ids(ogrid)) {
    std::vector<Ref> kids;
    BlockExtent ext = detail::out_extent(oshape, ogrid, oid);
    for (Index j = 0; j < x.grid[1]; ++j)
      for (Index k = 0; k < x.grid[2]; ++k) {
        Vertex v;
        v.kind = Kind::einsum;
        v.children = {x.root({oid[0], j, k}), b.root({oid[0], oid[1]}), c.root({j, oid[1]})};
        v.shape = {x.g->ref_shape(v.children[0])[0], x.g->ref_shape(v.children[1])[1]};
        v.extent = ext;
        kids.push_back({x.g->add(std::move(v)), false});
      }
    out.roots.push_back(detail::reduce_children(*x.g, kids, ext));
  }
  return out;
}

// Every op vertex reachable from the roots, children before parents.
inline std::vector<VertexId> reachable_ops(const std::vector<GraphArray>& arrays) {
  std::vector<VertexId> order;
  std::set<VertexId> seen;
  if (arrays.empty()) return order;
  const Graph& g = *arrays[0].g;
  std::vector<std::pair<VertexId, bool>> stack;
  for (const auto& a : arrays)
    for (const auto& r : a.roots) stack.push_back({r.id, false});
  while (!stack.empty()) {
    auto [id, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      order.push_back(id);
      continue;
    }
    if (seen.count(id)) continue;
    seen.insert(id);
    const auto& v = g.at(id);
    if (!v.is_op()) continue;
    stack.push_back({id, true});
    for (auto it = v.children.rbegin(); it != v.children.rend(); ++it)
      if (!seen.count(it->id)) stack.push_back({it->id, false});
  }
  return order;
}

// Op vertices whose children are all leaves.
inline std::vector<VertexId> frontier(const std::vector<GraphArray>& arrays) {
  std::vector<VertexId> out;
  if (arrays.empty()) return out;
  const Graph& g = *arrays[0].g;
  for (VertexId id : reachable_ops(arrays)) {
    const auto& v = g.at(id);
    if (std::all_of(v.children.begin(), v.children.end(),
                    [&](const Ref& r) { return g.at(r.id).kind == Kind::leaf; }))
      out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Candidate nodes for an op over the given operand objects. Contractions offer the union
// of operand nodes; other ops offer the nodes holding every operand when there are any.
inline std::vector<int> placement_options(Kind kind, const std::vector<ObjectId>& operands,
                                          const ClusterState& cs) {
  std::set<int> uni;
  std::optional<std::set<int>> inter;
  for (ObjectId o : operands) {
    auto ns = cs.nodes_of(o);
    std::set<int> s(ns.begin(), ns.end());
    uni.insert(s.begin(), s.end());
    if (!inter) {
      inter = s;
    } else {
      std::set<int> keep;
      std::set_intersection(inter->begin(), inter->end(), s.begin(), s.end(),
                            std::inserter(keep, keep.begin()));
      inter = keep;
    }
  }
  bool contraction = kind == Kind::matmul || kind == Kind::tensordot || kind == Kind::einsum;
  const std::set<int>& pick = (!contraction && inter && !inter->empty()) ? *inter : uni;
  return {pick.begin(), pick.end()};
}

struct ReduceOperand {
  int node = 0;
  int worker = 0;
  Index block = 0;  // position among the Reduce's children
};

// A binary add over slots; slots [0, n) are the operands, slot n + s is step s's output.
struct PairStep {
  int lhs = 0;
  int rhs = 0;
  int out = 0;
  bool cross_node = false;
  bool operator==(const PairStep&) const = default;
};

// n-1 adds: same-worker pairs first, then same-node, then across nodes. Each tier is a
// balanced tree over its inputs in ascending (node, worker, block) order.
inline std::vector<PairStep> pair_reduce(const std::vector<ReduceOperand>& ops) {
  int n = static_cast<int>(ops.size());
  std::vector<PairStep> steps;
  if (n < 2) return steps;
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto &x = ops[static_cast<std::size_t>(a)], &y = ops[static_cast<std::size_t>(b)];
    return std::tie(x.node, x.worker, x.block) < std::tie(y.node, y.worker, y.block);
  });
  auto balanced = [&](std::vector<int> slots, bool cross) {
    while (slots.size() > 1) {
      std::vector<int> next;
      for (std::size_t i = 0; i < slots.size(); i += 2) {
        if (i + 1 == slots.size()) {
          next.push_back(slots[i]);
          continue;
        }
        int out = n + static_cast<int>(steps.size());
        steps.push_back({slots[i], slots[i + 1], out, cross});
        next.push_back(out);
      }
      slots = std::move(next);
    }
    return slots.front();
  };
  // tier 1: per (node, worker)
  std::map<std::pair<int, int>, std::vector<int>> by_worker;
  for (int i : order) {
    const auto& o = ops[static_cast<std::size_t>(i)];
    by_worker[{o.node, o.worker}].push_back(i);
  }
  std::map<int, std::vector<int>> by_node;
  for (auto& [key, slots] : by_worker) by_node[key.first].push_back(balanced(slots, false));
  // tier 2: per node, tier 3: across nodes
  std::vector<int> per_node;
  for (auto& [node, slots] : by_node) per_node.push_back(balanced(slots, false));
  balanced(per_node, true);
  return steps;
}

inline nlohmann::json dump_graph(const std::vector<GraphArray>& arrays,
                                 const std::map<VertexId, int>& placement = {}) {
  nlohmann::json out = nlohmann::json::array();
  if (arrays.empty()) return out;
  const Graph& g = *arrays[0].g;
  std::set<VertexId> ids;
  for (VertexId id : reachable_ops(arrays)) {
    ids.insert(id);
    for (const auto& c : g.at(id).children) ids.insert(c.id);
  }
  for (const auto& a : arrays)
    for (const auto& r : a.roots) ids.insert(r.id);
  for (VertexId id : ids) {
    const auto& v = g.at(id);
    nlohmann::json j;
    j["id"] = id;
    j["kind"] = kind_name(v.kind);
    if (v.kind == Kind::unary) j["op"] = unary_name(v.uop);
    if (v.kind == Kind::binary || v.kind == Kind::reduce) j["op"] = binary_name(v.bop);
    if (v.kind == Kind::reduce_axis) j["axis"] = v.axis;
    if (v.kind == Kind::tensordot) j["axes"] = v.axes;
    if (v.kind == Kind::leaf) j["object"] = v.object;
    nlohmann::json kids = nlohmann::json::array();
    for (const auto& c : v.children) kids.push_back({{"id", c.id}, {"transposed", c.t}});
    j["children"] = kids;
    j["out_size"] = v.out_size();
    auto it = placement.find(id);
    j["placement"] = it == placement.end() ? nlohmann::json(nullptr) : nlohmann::json(it->second);
    out.push_back(j);
  }
  return out;
}

}  // namespace gridarray
