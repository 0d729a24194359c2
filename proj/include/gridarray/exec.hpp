#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridarray/cluster.hpp"
#include "gridarray/core.hpp"
#include "gridarray/graph.hpp"
#include "gridarray/kernels.hpp"
#include "gridarray/scheduler.hpp"

namespace gridarray {

// Raised when the executor's observed loads or transfers disagree with the schedule.
class fidelity_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-node object stores with load accounting derived from the payloads actually moved.
class Executor {
 public:
  explicit Executor(int nodes)
      : stores_(static_cast<std::size_t>(nodes)), loads_(static_cast<std::size_t>(nodes)) {}

  int nodes() const { return static_cast<int>(stores_.size()); }
  const LoadMatrix& loads() const { return loads_; }

  void put(ObjectId o, int node, Tensor t) {
    if (node < 0 || node >= nodes()) throw std::out_of_range("invalid node id");
    if (home_.count(o)) throw std::logic_error("object already stored");
    loads_[static_cast<std::size_t>(node)].mem += t.size();
    home_[o] = node;
    stores_[static_cast<std::size_t>(node)][o] = std::make_shared<const Tensor>(std::move(t));
  }

  const Tensor& get(ObjectId o) const {
    auto it = home_.find(o);
    if (it == home_.end()) throw std::out_of_range("missing object " + std::to_string(o));
    return *stores_[static_cast<std::size_t>(it->second)].at(o);
  }

  bool holds(int node, ObjectId o) const {
    return stores_[static_cast<std::size_t>(node)].count(o) != 0;
  }

  // Runs each step: pulls missing operands from their home store, applies the kernel,
  // then checks transfers and loads against the schedule's prediction.
  LoadTrace run(const Schedule& s) {
    LoadTrace trace;
    for (const auto& st : s.steps) {
      auto& local = stores_.at(static_cast<std::size_t>(st.node));
      std::vector<Transfer> moved;
      std::vector<ObjectId> seen;
      for (const auto& op : st.operands) {
        if (std::find(seen.begin(), seen.end(), op.object) != seen.end()) continue;
        seen.push_back(op.object);
        if (local.count(op.object)) continue;
        int src = home_.at(op.object);
        auto payload = stores_[static_cast<std::size_t>(src)].at(op.object);
        Index n = payload->size();
        loads_[static_cast<std::size_t>(src)].net_out += n;
        loads_[static_cast<std::size_t>(st.node)].net_in += n;
        loads_[static_cast<std::size_t>(st.node)].mem += n;
        local[op.object] = payload;
        moved.push_back({op.object, src, st.node, n});
      }
      std::vector<KernelArg> args;
      for (const auto& op : st.operands) args.push_back({local.at(op.object).get(), op.transposed});
      Tensor out = run_kernel(st.kernel, args);
      if (out.shape != st.out_shape)
        throw fidelity_error("kernel output shape " + dims_str(out.shape) + " != planned " +
                             dims_str(st.out_shape));
      put(st.out, st.node, std::move(out));
      if (moved != st.transfers)
        throw fidelity_error("step for vertex " + std::to_string(st.vertex) +
                             ": transfers differ from schedule");
      if (loads_ != st.loads)
        throw fidelity_error("step for vertex " + std::to_string(st.vertex) +
                             ": loads differ from schedule");
      trace.steps.push_back(loads_);
    }
    return trace;
  }

 private:
  std::vector<std::map<ObjectId, std::shared_ptr<const Tensor>>> stores_;
  std::map<ObjectId, int> home_;
  LoadMatrix loads_;
};

// How creation places blocks: by the hierarchical layout, or cycling over every worker
// of every node in node-major order across successive creations.
enum class Creation { layout, round_robin_workers };

struct RunInfo {
  Schedule schedule;
  LoadTrace trace;
};

// Owns the graph, the simulated cluster and the executor's stores.
class Context {
 public:
  explicit Context(NodeGrid ng, Creation mode = Creation::layout)
      : graph_(std::make_shared<Graph>()), cs_(ng), exec_(ng.nodes()), mode_(mode) {}

  const std::shared_ptr<Graph>& graph() const { return graph_; }
  const ClusterState& cluster() const { return cs_; }
  const Executor& executor() const { return exec_; }
  Creation creation() const { return mode_; }
  void set_creation(Creation m) { mode_ = m; }

  GraphArray from_dense(const Tensor& t, Grid grid) {
    check_nonempty_blocks(t.shape, grid);
    auto place = layout_all(grid, cs_.grid);
    std::vector<ObjectId> objs;
    auto ids = block_ids(grid);
    for (std::size_t b = 0; b < ids.size(); ++b) {
      Tensor blk = slice(t, block_extent(t.shape, grid, ids[b]));
      BlockPlacement pl = place[b];
      if (mode_ == Creation::round_robin_workers) {
        int w = static_cast<int>(rr_next_++ % static_cast<std::uint64_t>(cs_.nodes() * cs_.grid.workers));
        pl = {w / cs_.grid.workers, w % cs_.grid.workers};
      }
      ObjectId o = cs_.create(blk.size(), pl.node, pl.worker);
      exec_.put(o, pl.node, std::move(blk));
      objs.push_back(o);
    }
    return make_leaf_array(graph_, t.shape, grid, objs);
  }

  GraphArray full(Shape shape, Grid grid, double v) { return from_dense(Tensor(shape, v), grid); }
  GraphArray zeros(Shape shape, Grid grid) { return full(std::move(shape), std::move(grid), 0.0); }
  GraphArray ones(Shape shape, Grid grid) { return full(std::move(shape), std::move(grid), 1.0); }

  // Uniform [0, 1) entries from a seeded generator.
  GraphArray random(Shape shape, Grid grid, std::uint64_t seed) {
    return from_dense(random_tensor(std::move(shape), seed), std::move(grid));
  }

  static Tensor random_tensor(Shape shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor t(std::move(shape));
    for (auto& e : t.data) e = u(rng);
    return t;
  }

  Schedule plan(const std::vector<GraphArray>& outputs, SchedulerKind k, std::uint64_t seed,
                SchedOptions opt = {}) const {
    return run_scheduler(k, outputs, cs_, seed, opt);
  }

  // Executes a schedule built from this context's current state and returns the
  // outputs as materialized arrays.
  std::vector<GraphArray> execute(const std::vector<GraphArray>& outputs, const Schedule& s,
                                  LoadTrace* trace = nullptr) {
    if (!s.steps.empty() && s.steps.front().out != cs_.next_id)
      throw std::logic_error("schedule was not planned against the current cluster state");
    LoadTrace t = exec_.run(s);
    if (!s.steps.empty()) cs_ = s.final_state;
    if (exec_.loads() != cs_.S) throw fidelity_error("final loads differ from schedule");
    if (trace) *trace = std::move(t);
    std::vector<GraphArray> out;
    std::map<VertexId, VertexId> leaf_of;
    for (const auto& a : outputs) {
      GraphArray m{graph_, a.shape, a.grid, {}};
      for (std::size_t b = 0; b < a.roots.size(); ++b) {
        Ref r = a.roots[b];
        if (graph_->at(r.id).kind != Kind::leaf) {
          auto it = leaf_of.find(r.id);
          if (it == leaf_of.end()) {
            Vertex v;
            v.kind = Kind::leaf;
            v.shape = graph_->at(r.id).shape;
            v.extent = graph_->at(r.id).extent;
            v.object = s.values.at(r.id);
            it = leaf_of.emplace(r.id, graph_->add(std::move(v))).first;
          }
          r.id = it->second;
        }
        m.roots.push_back(r);
      }
      out.push_back(std::move(m));
    }
    return out;
  }

  std::vector<GraphArray> compute(const std::vector<GraphArray>& outputs,
                                  SchedulerKind k = SchedulerKind::lshs, std::uint64_t seed = 0,
                                  RunInfo* info = nullptr, SchedOptions opt = {}) {
    Schedule s = plan(outputs, k, seed, opt);
    LoadTrace t;
    auto out = execute(outputs, s, &t);
    if (info) *info = {std::move(s), std::move(t)};
    return out;
  }

  GraphArray compute(const GraphArray& a, SchedulerKind k = SchedulerKind::lshs,
                     std::uint64_t seed = 0, RunInfo* info = nullptr) {
    return compute(std::vector<GraphArray>{a}, k, seed, info).front();
  }

  // Assembles a materialized array into one dense tensor.
  Tensor to_dense(const GraphArray& a) const {
    if (!a.materialized()) throw std::logic_error("array is not materialized");
    Tensor out(a.shape);
    auto ids = block_ids(a.grid);
    for (std::size_t b = 0; b < ids.size(); ++b) {
      const Ref& r = a.roots[b];
      const Tensor& blk = exec_.get(graph_->at(r.id).object);
      paste(out, r.t ? transpose2(blk) : blk, block_extent(a.shape, a.grid, ids[b]));
    }
    return out;
  }

  ObjectId object_of(const GraphArray& a, const BlockId& id) const {
    return graph_->at(a.root(id).id).object;
  }

 private:
  std::shared_ptr<Graph> graph_;
  ClusterState cs_;
  Executor exec_;
  Creation mode_;
  std::uint64_t rr_next_ = 0;
};

// Flat float64 row-major payload after a one-line `shape=AxB` header.
inline void write_binary(std::ostream& os, const Tensor& t) {
  os << "shape=" << dims_str(t.shape) << '\n';
  os.write(reinterpret_cast<const char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(double)));
}

}  // namespace gridarray
