#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "gridarray/cluster.hpp"
#include "gridarray/graph.hpp"
#include "gridarray/kernels.hpp"

namespace gridarray {

struct Operand {
  ObjectId object = 0;
  bool transposed = false;
  bool operator==(const Operand&) const = default;
};

// One dispatched task. Reduce vertices appear once per partial add; completes marks
// the add that yields the vertex's value.
struct Step {
  VertexId vertex = -1;
  KernelDesc kernel;
  std::vector<Operand> operands;
  ObjectId out = 0;
  Shape out_shape;
  int node = 0;
  int worker = 0;
  int round = 1;
  bool completes = true;
  bool root = false;
  std::vector<Transfer> transfers;
  std::vector<Index> handoffs;
  LoadMatrix loads;  // S after this step

  Index out_size() const { return product(out_shape); }
};

struct Schedule {
  std::vector<Step> steps;
  std::map<VertexId, ObjectId> values;  // every materialized vertex
  ClusterState final_state;

  std::vector<StepRecord> records() const {
    std::vector<StepRecord> out;
    for (const auto& s : steps)
      out.push_back({s.round, s.node, s.worker, s.out_size(), s.transfers, s.handoffs});
    return out;
  }
  Index internode_elements() const { return gridarray::internode_elements(records()); }
  LoadTrace trace() const {
    LoadTrace t;
    for (const auto& s : steps) t.steps.push_back(s.loads);
    return t;
  }
  std::map<VertexId, int> placement() const {
    std::map<VertexId, int> p;
    for (const auto& s : steps)
      if (s.completes) p[s.vertex] = s.node;
    return p;
  }
};

inline nlohmann::json schedule_json(const Schedule& s) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& st : s.steps) {
    nlohmann::json tr = nlohmann::json::array();
    for (const auto& t : st.transfers)
      tr.push_back({{"object", t.object}, {"src", t.src}, {"dst", t.dst}, {"size", t.size}});
    out.push_back({{"vertex", st.vertex},
                   {"kind", kind_name(st.kernel.kind)},
                   {"node", st.node},
                   {"worker", st.worker},
                   {"round", st.round},
                   {"transfers", tr}});
  }
  return out;
}

struct SchedOptions {
  // The task yielding each output block runs where the layout puts that block.
  bool force_root_layout = true;
};

// Scheduling state shared by every scheduler: what is materialized, what is ready, and
// the simulated cluster. Copyable so exhaustive search can branch on it.
class Planner {
 public:
  struct Task {
    KernelDesc kernel;
    std::vector<Operand> operands;
    Shape out_shape;
    Kind kind = Kind::binary;  // placement family
    bool completes = true;
    bool root = false;
    std::optional<BlockPlacement> forced;
    std::optional<int> pinned;  // narrows LSHS options only
  };

  Planner(const std::vector<GraphArray>& outputs, ClusterState cs, SchedOptions opt = {})
      : cs_(std::move(cs)), opt_(opt) {
    if (outputs.empty()) return;
    g_ = outputs[0].g.get();
    for (const auto& a : outputs)
      if (a.g.get() != g_) throw std::invalid_argument("outputs belong to different graphs");
    std::vector<VertexId> ops = reachable_ops(outputs);
    std::set<VertexId> opset(ops.begin(), ops.end());
    for (VertexId id : ops) {
      std::set<VertexId> kids;
      for (const auto& c : g_->at(id).children) kids.insert(c.id);
      int n = 0;
      for (VertexId c : kids) {
        if (opset.count(c)) {
          parents_[c].push_back(id);
          ++n;
        } else {
          const auto& leaf = g_->at(c);
          cs_.info(leaf.object);
          values_[c] = leaf.object;
          depth_.emplace(leaf.object, 0);
        }
      }
      pending_[id] = n;
    }
    for (const auto& a : outputs)
      for (std::size_t b = 0; b < a.roots.size(); ++b) {
        VertexId r = a.roots[b].id;
        if (!opset.count(r) || roots_.count(r)) continue;
        BlockId bid = unflat_index(static_cast<Index>(b), a.grid);
        roots_[r] = {layout_node(bid, cs_.grid), layout_worker(bid, a.grid, cs_.grid)};
      }
    for (VertexId id : ops)
      if (pending_[id] == 0) make_ready(id);
  }

  bool done() const { return ready_.empty(); }
  const ClusterState& cluster() const { return cs_; }
  const Graph& graph() const { return *g_; }
  const std::vector<Step>& steps() const { return steps_; }

  // Ready op vertices in ascending id order.
  std::vector<VertexId> frontier() const { return {ready_.begin(), ready_.end()}; }

  // The task v would dispatch next; for a Reduce, its next planned partial add.
  Task task(VertexId v) const {
    const Vertex& x = g_->at(v);
    Task t;
    t.kernel = KernelDesc::of(x);
    t.out_shape = x.shape;
    t.kind = x.kind;
    if (x.kind == Kind::reduce) {
      const auto& r = reduce_.at(v);
      const PairStep& ps = r.plan[r.next];
      t.operands = {r.slots.at(static_cast<std::size_t>(ps.lhs)),
                    r.slots.at(static_cast<std::size_t>(ps.rhs))};
      t.completes = r.next + 1 == r.plan.size();
    } else {
      for (const auto& c : x.children) t.operands.push_back({values_.at(c.id), c.t});
    }
    auto it = roots_.find(v);
    t.root = t.completes && it != roots_.end();
    if (t.root && opt_.force_root_layout) t.forced = it->second;
    // Partial sums touching the root's layout node stay there, so a reduction tree crosses
    // nodes exactly once per other node.
    if (x.kind == Kind::reduce && !t.completes && opt_.force_root_layout && it != roots_.end())
      for (const auto& op : t.operands)
        if (cs_.info(op.object).on(it->second.node)) t.pinned = it->second.node;
    return t;
  }

  std::vector<ObjectId> objects(const Task& t) const {
    std::vector<ObjectId> o;
    for (const auto& op : t.operands) o.push_back(op.object);
    return o;
  }

  std::vector<int> options(const Task& t) const {
    if (t.forced) return {t.forced->node};
    if (t.pinned) return {*t.pinned};
    return placement_options(t.kind, objects(t), cs_);
  }

  LoadMatrix preview(const Task& t, int node) const {
    return preview_loads(cs_, objects(t), product(t.out_shape), node);
  }

  // Dispatches v's next task on node and updates readiness.
  const Step& apply(VertexId v, int node) {
    Task t = task(v);
    if (t.forced && node != t.forced->node)
      throw std::logic_error("root task placed off its layout node");
    Step s;
    s.vertex = v;
    s.kernel = t.kernel;
    s.operands = t.operands;
    s.out_shape = t.out_shape;
    s.completes = t.completes;
    s.root = t.root;
    s.node = node;
    s.out = cs_.reserve_id();
    int d = 0;
    for (const auto& op : t.operands) d = std::max(d, depth_.at(op.object));
    s.round = d + 1;
    std::optional<int> w;
    if (t.forced) w = t.forced->worker;
    auto res = apply_transition(cs_, objects(t), s.out, s.out_size(), node, w);
    s.worker = res.worker;
    s.transfers = std::move(res.transfers);
    s.handoffs = std::move(res.handoffs);
    s.loads = cs_.S;
    depth_[s.out] = s.round;
    if (g_->at(v).kind == Kind::reduce) {
      auto& r = reduce_.at(v);
      r.slots.push_back({s.out, false});
      ++r.next;
    }
    if (s.completes) finish(v, s.out);
    steps_.push_back(std::move(s));
    return steps_.back();
  }

  Schedule result() const {
    Schedule s;
    s.steps = steps_;
    s.values = values_;
    s.final_state = cs_;
    return s;
  }

 private:
  struct ReduceProgress {
    std::vector<PairStep> plan;
    std::vector<Operand> slots;
    std::size_t next = 0;
  };

  void make_ready(VertexId id) {
    const Vertex& x = g_->at(id);
    if (x.kind == Kind::reduce) {
      ReduceProgress r;
      std::vector<ReduceOperand> ops;
      for (std::size_t i = 0; i < x.children.size(); ++i) {
        ObjectId o = values_.at(x.children[i].id);
        const auto& inf = cs_.info(o);
        r.slots.push_back({o, x.children[i].t});
        ops.push_back({inf.home, inf.where.at(inf.home), static_cast<Index>(i)});
      }
      r.plan = pair_reduce(ops);
      reduce_[id] = std::move(r);
    }
    ready_.insert(id);
  }

  void finish(VertexId v, ObjectId out) {
    values_[v] = out;
    ready_.erase(v);
    reduce_.erase(v);
    auto it = parents_.find(v);
    if (it == parents_.end()) return;
    for (VertexId p : it->second)
      if (--pending_[p] == 0) make_ready(p);
  }

  const Graph* g_ = nullptr;
  ClusterState cs_;
  SchedOptions opt_;
  std::map<VertexId, ObjectId> values_;
  std::map<ObjectId, int> depth_;
  std::map<VertexId, int> pending_;
  std::map<VertexId, std::vector<VertexId>> parents_;
  std::map<VertexId, BlockPlacement> roots_;
  std::map<VertexId, ReduceProgress> reduce_;
  std::set<VertexId> ready_;
  std::vector<Step> steps_;
};

// Option with the lowest simulated cost; ties go to the lowest node id.
inline int lshs_choice(const Planner& p, const Planner::Task& t) {
  int best = -1;
  Index best_cost = std::numeric_limits<Index>::max();
  for (int j : p.options(t)) {
    Index c = cost(p.preview(t, j));
    if (c < best_cost || (c == best_cost && j < best)) {
      best = j;
      best_cost = c;
    }
  }
  return best;
}

inline Schedule lshs(const std::vector<GraphArray>& outputs, const ClusterState& cs,
                     std::uint64_t seed, SchedOptions opt = {}) {
  Planner p(outputs, cs, opt);
  std::mt19937_64 rng(seed);
  while (!p.done()) {
    auto f = p.frontier();
    std::uniform_int_distribution<std::size_t> pick(0, f.size() - 1);
    VertexId v = f[pick(rng)];
    p.apply(v, lshs_choice(p, p.task(v)));
  }
  return p.result();
}

// Lowest ready vertex first; nodes assigned cyclically.
inline Schedule schedule_roundrobin(const std::vector<GraphArray>& outputs, const ClusterState& cs,
                                    SchedOptions opt = {}) {
  Planner p(outputs, cs, opt);
  int next = 0;
  while (!p.done()) {
    VertexId v = p.frontier().front();
    auto t = p.task(v);
    int j = t.forced ? t.forced->node : next++ % cs.nodes();
    p.apply(v, j);
  }
  return p.result();
}

inline Schedule schedule_random(const std::vector<GraphArray>& outputs, const ClusterState& cs,
                                std::uint64_t seed, SchedOptions opt = {}) {
  Planner p(outputs, cs, opt);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> node(0, cs.nodes() - 1);
  while (!p.done()) {
    VertexId v = p.frontier().front();
    auto t = p.task(v);
    int j = node(rng);
    if (t.forced) j = t.forced->node;
    p.apply(v, j);
  }
  return p.result();
}

class instance_too_large : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tasks a run will dispatch: one per op vertex, n-1 per n-ary Reduce.
inline std::size_t count_tasks(const std::vector<GraphArray>& outputs) {
  std::size_t n = 0;
  if (outputs.empty()) return 0;
  for (VertexId id : reachable_ops(outputs)) {
    const auto& v = outputs[0].g->at(id);
    n += v.kind == Kind::reduce ? v.children.size() - 1 : 1;
  }
  return n;
}

// Exhaustive search over frontier order and every node for each task, minimizing the
// terminal cost. Branches are cut once their cost reaches the incumbent, since cost
// never decreases along a schedule.
inline Schedule schedule_optimal(const std::vector<GraphArray>& outputs, const ClusterState& cs,
                                 std::size_t max_ops = 8, SchedOptions opt = {}) {
  if (max_ops > 8) throw std::invalid_argument("schedule_optimal: max_ops must be <= 8");
  std::size_t n = count_tasks(outputs);
  if (n > max_ops)
    throw instance_too_large("instance has " + std::to_string(n) + " tasks, limit " +
                             std::to_string(max_ops));
  std::optional<Planner> best;
  Index best_cost = std::numeric_limits<Index>::max();
  auto dfs = [&](auto&& self, const Planner& p) -> void {
    Index c = cost(p.cluster().S);
    if (c >= best_cost) return;
    if (p.done()) {
      best_cost = c;
      best = p;
      return;
    }
    for (VertexId v : p.frontier()) {
      auto t = p.task(v);
      std::vector<int> nodes;
      if (t.forced) {
        nodes = {t.forced->node};
      } else {
        for (int j = 0; j < p.cluster().nodes(); ++j) nodes.push_back(j);
      }
      for (int j : nodes) {
        Planner q = p;
        q.apply(v, j);
        self(self, q);
      }
    }
  };
  Planner root(outputs, cs, opt);
  if (root.done()) return root.result();
  dfs(dfs, root);
  return best->result();
}

enum class SchedulerKind { lshs, roundrobin, random };

inline SchedulerKind parse_scheduler(const std::string& s) {
  if (s == "lshs") return SchedulerKind::lshs;
  if (s == "rr" || s == "roundrobin") return SchedulerKind::roundrobin;
  if (s == "random") return SchedulerKind::random;
  throw std::invalid_argument("unknown scheduler: " + s);
}

inline const char* scheduler_name(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::lshs: return "lshs";
    case SchedulerKind::roundrobin: return "rr";
    case SchedulerKind::random: return "random";
  }
  return "?";
}

inline Schedule run_scheduler(SchedulerKind k, const std::vector<GraphArray>& outputs,
                              const ClusterState& cs, std::uint64_t seed, SchedOptions opt = {}) {
  switch (k) {
    case SchedulerKind::lshs: return lshs(outputs, cs, seed, opt);
    case SchedulerKind::roundrobin: return schedule_roundrobin(outputs, cs, opt);
    case SchedulerKind::random: return schedule_random(outputs, cs, seed, opt);
  }
  throw std::logic_error("unknown scheduler");
}

// Every operand is materialized before use and every op vertex completes exactly once.
inline bool is_topological(const Schedule& s, const std::vector<GraphArray>& outputs) {
  if (outputs.empty()) return s.steps.empty();
  const Graph& g = *outputs[0].g;
  std::set<ObjectId> avail;
  auto ops = reachable_ops(outputs);
  std::set<VertexId> opset(ops.begin(), ops.end());
  for (VertexId id : ops)
    for (const auto& c : g.at(id).children)
      if (!opset.count(c.id)) avail.insert(g.at(c.id).object);
  std::map<VertexId, int> completed;
  for (const auto& st : s.steps) {
    for (const auto& o : st.operands)
      if (!avail.count(o.object)) return false;
    avail.insert(st.out);
    if (st.completes) ++completed[st.vertex];
  }
  for (VertexId id : ops)
    if (completed[id] != 1) return false;
  return completed.size() == ops.size();
}

}  // namespace gridarray
