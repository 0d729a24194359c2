#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridarray/core.hpp"

namespace gridarray {

using ObjectId = std::uint64_t;

struct NodeGrid {
  std::vector<Index> dims{1};
  int workers = 1;

  NodeGrid() = default;
  NodeGrid(std::vector<Index> d, int r) : dims(std::move(d)), workers(r) { validate(); }

  int nodes() const { return static_cast<int>(product(dims)); }
  void validate() const {
    if (dims.empty()) throw std::invalid_argument("node grid needs at least one axis");
    for (Index d : dims)
      if (d < 1) throw std::invalid_argument("node grid dims must be >= 1");
    if (workers < 1) throw std::invalid_argument("workers per node must be >= 1");
  }
};

// Cyclic block-to-node map. Block ids are padded with zeros or truncated to the
// node grid's rank, so a 1-D id i maps like (i, 0).
inline int layout_node(const BlockId& id, const NodeGrid& ng) {
  Index l = 0;
  for (std::size_t a = 0; a < ng.dims.size(); ++a) {
    Index c = a < id.size() ? id[a] : 0;
    l = l * ng.dims[a] + c % ng.dims[a];
  }
  return static_cast<int>(l);
}

struct BlockPlacement {
  int node = 0;
  int worker = 0;
};

// Node per layout_node; worker round-robin over the blocks of the same array that
// land on that node, in row-major block order.
inline std::vector<BlockPlacement> layout_all(const Grid& grid, const NodeGrid& ng) {
  std::vector<BlockPlacement> out;
  std::vector<int> seen(static_cast<std::size_t>(ng.nodes()), 0);
  for (const auto& id : block_ids(grid)) {
    int n = layout_node(id, ng);
    out.push_back({n, seen[static_cast<std::size_t>(n)]++ % ng.workers});
  }
  return out;
}

inline int layout_worker(const BlockId& id, const Grid& grid, const NodeGrid& ng) {
  return layout_all(grid, ng)[static_cast<std::size_t>(flat_index(id, grid))].worker;
}

struct NodeLoad {
  Index mem = 0;
  Index net_in = 0;
  Index net_out = 0;
  bool operator==(const NodeLoad&) const = default;
};
using LoadMatrix = std::vector<NodeLoad>;

// max mem + max net_in + max net_out.
inline Index cost(const LoadMatrix& S) {
  Index m = 0, i = 0, o = 0;
  for (const auto& l : S) {
    m = std::max(m, l.mem);
    i = std::max(i, l.net_in);
    o = std::max(o, l.net_out);
  }
  return m + i + o;
}

struct ObjectInfo {
  int home = 0;
  Index size = 0;
  std::map<int, int> where;  // node -> worker holding the copy

  bool on(int node) const { return where.count(node) != 0; }
};
using ObjectMap = std::map<ObjectId, ObjectInfo>;

struct Transfer {
  ObjectId object = 0;
  int src = 0;
  int dst = 0;
  Index size = 0;
  bool operator==(const Transfer&) const = default;
};

struct TransitionResult {
  std::vector<Transfer> transfers;
  std::vector<Index> handoffs;  // same-node operands read from another worker
  int worker = 0;
};

struct ClusterState {
  NodeGrid grid;
  LoadMatrix S;
  ObjectMap M;
  ObjectId next_id = 1;
  std::vector<int> rr;  // per-node round-robin worker counter

  ClusterState() : ClusterState(NodeGrid{}) {}
  explicit ClusterState(NodeGrid g)
      : grid(std::move(g)),
        S(static_cast<std::size_t>(grid.nodes())),
        rr(static_cast<std::size_t>(grid.nodes()), 0) {}

  int nodes() const { return grid.nodes(); }
  const ObjectInfo& info(ObjectId o) const {
    auto it = M.find(o);
    if (it == M.end()) throw std::out_of_range("unknown object " + std::to_string(o));
    return it->second;
  }
  void check_node(int j) const {
    if (j < 0 || j >= nodes()) throw std::out_of_range("invalid node id " + std::to_string(j));
  }

  ObjectId reserve_id() { return next_id++; }

  // Registers a materialized object; memory is charged to its node.
  ObjectId create(Index size, int node, int worker) {
    check_node(node);
    if (size <= 0) throw std::invalid_argument("object size must be > 0");
    ObjectId id = reserve_id();
    M[id] = ObjectInfo{node, size, {{node, worker}}};
    S[static_cast<std::size_t>(node)].mem += size;
    return id;
  }

  // Caches a copy of o on node j as a plain transfer from its home.
  Transfer replicate(ObjectId o, int j, int worker = 0) {
    check_node(j);
    auto& inf = M.at(o);
    Transfer t{o, inf.home, j, inf.size};
    if (inf.on(j)) return t;
    S[static_cast<std::size_t>(inf.home)].net_out += inf.size;
    S[static_cast<std::size_t>(j)].net_in += inf.size;
    S[static_cast<std::size_t>(j)].mem += inf.size;
    inf.where[j] = worker;
    return t;
  }

  std::vector<int> nodes_of(ObjectId o) const {
    std::vector<int> out;
    for (const auto& [n, w] : info(o).where) out.push_back(n);
    return out;
  }
};

inline std::vector<ObjectId> distinct(const std::vector<ObjectId>& v) {
  std::vector<ObjectId> out;
  for (ObjectId o : v)
    if (std::find(out.begin(), out.end(), o) == out.end()) out.push_back(o);
  return out;
}

// S' for placing an op with these operands and output size on node j; M untouched.
inline LoadMatrix preview_loads(const ClusterState& cs, const std::vector<ObjectId>& operands,
                                Index out_size, int j) {
  cs.check_node(j);
  LoadMatrix S = cs.S;
  for (ObjectId o : distinct(operands)) {
    const auto& inf = cs.info(o);
    if (inf.on(j)) continue;
    S[static_cast<std::size_t>(inf.home)].net_out += inf.size;
    S[static_cast<std::size_t>(j)].net_in += inf.size;
    S[static_cast<std::size_t>(j)].mem += inf.size;
  }
  S[static_cast<std::size_t>(j)].mem += out_size;
  return S;
}

// Transition T(S, M, v, a). Missing operands are sent once from their home node and
// cached on j; the output's home becomes j. Only the receiver is charged memory.
inline TransitionResult apply_transition(ClusterState& cs, const std::vector<ObjectId>& operands,
                                         ObjectId out, Index out_size, int j,
                                         std::optional<int> worker = std::nullopt) {
  cs.check_node(j);
  if (out_size <= 0) throw std::invalid_argument("output size must be > 0");
  auto ops = distinct(operands);
  TransitionResult res;
  if (worker) {
    res.worker = *worker;
  } else {
    std::optional<int> w;
    for (ObjectId o : ops) {
      const auto& inf = cs.info(o);
      if (auto it = inf.where.find(j); it != inf.where.end()) {
        w = it->second;
        break;
      }
    }
    if (w) {
      res.worker = *w;
    } else {
      auto& c = cs.rr[static_cast<std::size_t>(j)];
      res.worker = c;
      c = (c + 1) % cs.grid.workers;
    }
  }
  for (ObjectId o : ops) {
    auto& inf = cs.M.at(o);
    if (auto it = inf.where.find(j); it != inf.where.end()) {
      if (it->second != res.worker) res.handoffs.push_back(inf.size);
      continue;
    }
    res.transfers.push_back({o, inf.home, j, inf.size});
    cs.S[static_cast<std::size_t>(inf.home)].net_out += inf.size;
    cs.S[static_cast<std::size_t>(j)].net_in += inf.size;
    cs.S[static_cast<std::size_t>(j)].mem += inf.size;
    inf.where[j] = res.worker;
  }
  cs.S[static_cast<std::size_t>(j)].mem += out_size;
  cs.M[out] = ObjectInfo{j, out_size, {{j, res.worker}}};
  return res;
}

// Functional form returning (S', M') without touching the input state.
inline ClusterState transition(const ClusterState& cs, const std::vector<ObjectId>& operands,
                               ObjectId out, Index out_size, int j) {
  ClusterState next = cs;
  apply_transition(next, operands, out, out_size, j);
  return next;
}

// Seconds per transfer channel; see comm_time.
struct CostParams {
  double alpha = 1.0;         // inter-node latency
  double beta = 0.01;         // inter-node inverse bandwidth per element
  double alpha_prime = 0.1;   // intra-node object store
  double beta_prime = 0.001;
  double alpha_dprime = 0.2;  // intra-node worker to worker
  double beta_dprime = 0.002;
  double gamma = 0.05;        // dispatch latency per task
  double intranode_discount = 1.0;

  double C(double n) const { return alpha + beta * n; }
  double R(double n) const { return alpha_prime + beta_prime * n; }
  double D(double n) const { return (alpha_dprime + beta_dprime * n) * intranode_discount; }

  void validate() const {
    for (double v : {alpha, beta, alpha_prime, beta_prime, alpha_dprime, beta_dprime, gamma,
                     intranode_discount})
      if (!(v >= 0) || !std::isfinite(v))
        throw std::invalid_argument("cost parameters must be finite and >= 0");
  }

  void set(const std::string& key, double v) {
    if (key == "alpha") alpha = v;
    else if (key == "beta") beta = v;
    else if (key == "alpha_prime") alpha_prime = v;
    else if (key == "beta_prime") beta_prime = v;
    else if (key == "alpha_dprime") alpha_dprime = v;
    else if (key == "beta_dprime") beta_dprime = v;
    else if (key == "gamma") gamma = v;
    else if (key == "intranode_discount") intranode_discount = v;
    else throw std::invalid_argument("unknown cost parameter: " + key);
  }

  static bool is_key(const std::string& key) {
    for (const char* k : {"alpha", "beta", "alpha_prime", "beta_prime", "alpha_dprime",
                          "beta_dprime", "gamma", "intranode_discount"})
      if (key == k) return true;
    return false;
  }
};

enum class CommMode { ray, dask };

// One scheduled task as seen by the communication model. round is the task's depth in
// the executed DAG (inputs at depth 0).
struct StepRecord {
  int round = 1;
  int node = 0;
  int worker = 0;
  Index out_size = 0;
  std::vector<Transfer> transfers;
  std::vector<Index> handoffs;
};

// gamma per task, plus for each round the slowest channel. Channels: each node's send
// link, each node's receive link (both sum C over their transfers), and each task's
// local store traffic (ray: R of the output written; dask: D of worker handoffs).
inline double comm_time(const std::vector<StepRecord>& steps, const CostParams& p, CommMode mode) {
  double total = p.gamma * static_cast<double>(steps.size());
  std::map<int, std::vector<const StepRecord*>> rounds;
  for (const auto& s : steps) rounds[s.round].push_back(&s);
  for (const auto& [r, tasks] : rounds) {
    std::map<int, double> send, recv;
    double worst = 0;
    for (const StepRecord* s : tasks) {
      for (const auto& t : s->transfers) {
        send[t.src] += p.C(static_cast<double>(t.size));
        recv[t.dst] += p.C(static_cast<double>(t.size));
      }
      double local = 0;
      if (mode == CommMode::ray) {
        local = p.R(static_cast<double>(s->out_size));
      } else {
        for (Index h : s->handoffs) local += p.D(static_cast<double>(h));
      }
      worst = std::max(worst, local);
    }
    for (const auto& [n, v] : send) worst = std::max(worst, v);
    for (const auto& [n, v] : recv) worst = std::max(worst, v);
    total += worst;
  }
  return total;
}

inline Index internode_elements(const std::vector<StepRecord>& steps) {
  Index n = 0;
  for (const auto& s : steps)
    for (const auto& t : s.transfers) n += t.size;
  return n;
}

inline std::size_t internode_transfers(const std::vector<StepRecord>& steps) {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.transfers.size();
  return n;
}

// Per-step snapshots of S; row count is steps x nodes.
struct LoadTrace {
  std::vector<LoadMatrix> steps;
  bool operator==(const LoadTrace&) const = default;
};

inline void write_trace_csv(std::ostream& os, const LoadTrace& tr) {
  os << "step,node,mem,net_in,net_out\n";
  for (std::size_t s = 0; s < tr.steps.size(); ++s)
    for (std::size_t n = 0; n < tr.steps[s].size(); ++n) {
      const auto& l = tr.steps[s][n];
      os << (s + 1) << ',' << n << ',' << l.mem << ',' << l.net_in << ',' << l.net_out << '\n';
    }
}

}  // namespace gridarray
