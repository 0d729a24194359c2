#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "gridarray/cluster.hpp"

using namespace gridarray;

TEST(Layout, NodeExamples) {
  NodeGrid ng({2, 2}, 4);
  EXPECT_EQ(layout_node({2, 3}, ng), 1);
  EXPECT_EQ(layout_node({0, 0}, ng), 0);
  EXPECT_EQ(layout_node({3}, ng), 2);  // 1-D id i maps like (i, 0)
}

TEST(Layout, CyclicTiling) {
  NodeGrid ng({2, 2}, 1);
  const int want[3][4] = {{0, 1, 0, 1}, {2, 3, 2, 3}, {0, 1, 0, 1}};
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 4; ++j) EXPECT_EQ(layout_node({i, j}, ng), want[i][j]);
}

TEST(Layout, WorkerExamples) {
  NodeGrid ng({2, 2}, 4);
  EXPECT_EQ(layout_worker({2, 3}, {4, 4}, ng), 3);
  EXPECT_EQ(layout_worker({0, 0}, {1, 1}, NodeGrid({1}, 4)), 0);
  auto all = layout_all({8, 1}, NodeGrid({1}, 4));
  for (int b = 0; b < 8; ++b) EXPECT_EQ(all[static_cast<std::size_t>(b)].worker, b % 4);
}

TEST(Transition, CoLocated) {
  ClusterState cs(NodeGrid({2}, 1));
  auto o1 = cs.create(10, 0, 0), o2 = cs.create(10, 0, 0);
  LoadMatrix before = cs.S;
  auto res = apply_transition(cs, {o1, o2}, cs.reserve_id(), 10, 0);
  EXPECT_TRUE(res.transfers.empty());
  EXPECT_EQ(cs.S[0].mem, before[0].mem + 10);
  EXPECT_EQ(cs.S[0].net_in + cs.S[0].net_out + cs.S[1].net_in + cs.S[1].net_out, 0);
}

TEST(Transition, RemoteOperandThenCacheHit) {
  ClusterState cs(NodeGrid({2}, 1));
  auto o1 = cs.create(10, 0, 0), o2 = cs.create(10, 1, 0);
  ClusterState s0 = cs;
  auto res = apply_transition(cs, {o1, o2}, cs.reserve_id(), 10, 0);
  ASSERT_EQ(res.transfers.size(), 1u);
  EXPECT_EQ(res.transfers[0], (Transfer{o2, 1, 0, 10}));
  EXPECT_EQ(cs.S[1].net_out, s0.S[1].net_out + 10);
  EXPECT_EQ(cs.S[0].net_in, s0.S[0].net_in + 10);
  EXPECT_EQ(cs.S[0].mem, s0.S[0].mem + 20);
  LoadMatrix mid = cs.S;
  auto res2 = apply_transition(cs, {o2}, cs.reserve_id(), 5, 0);
  EXPECT_TRUE(res2.transfers.empty());
  EXPECT_EQ(cs.S[0].net_in, mid[0].net_in);
  EXPECT_THROW(apply_transition(cs, {o1}, cs.reserve_id(), 5, 2), std::out_of_range);
}

TEST(Transition, FunctionalFormLeavesInputUntouched) {
  ClusterState cs(NodeGrid({2}, 1));
  auto o = cs.create(4, 1, 0);
  auto next = transition(cs, {o}, 99, 4, 0);
  EXPECT_FALSE(cs.M.count(99));
  EXPECT_TRUE(next.info(o).on(0));
  EXPECT_EQ(next.info(99).home, 0);
}

TEST(Cost, Examples) {
  EXPECT_EQ(cost({{7, 0, 0}}), 7);
  EXPECT_EQ(cost({{20, 10, 0}, {0, 0, 10}}), 40);
  EXPECT_EQ(cost({{0, 0, 10}, {20, 10, 0}}), 40);
}

// Random transitions: loads never decrease, net in/out are conserved, and every operand
// is present on the chosen node afterwards.
TEST(Transition, InvariantsProperty) {
  std::mt19937_64 rng(3);
  for (int run = 0; run < 50; ++run) {
    int k = static_cast<int>(rng() % 4) + 1;
    ClusterState cs(NodeGrid({k}, 2));
    std::vector<ObjectId> objs;
    for (int i = 0; i < 5; ++i)
      objs.push_back(cs.create(static_cast<Index>(rng() % 50 + 1), static_cast<int>(rng() % static_cast<unsigned>(k)), 0));
    for (int step = 0; step < 40; ++step) {
      std::vector<ObjectId> ops;
      for (int a = 0; a < 1 + static_cast<int>(rng() % 3); ++a) ops.push_back(objs[rng() % objs.size()]);
      int j = static_cast<int>(rng() % static_cast<unsigned>(k));
      LoadMatrix before = cs.S;
      Index c0 = cost(before);
      ObjectId out = cs.reserve_id();
      apply_transition(cs, ops, out, static_cast<Index>(rng() % 30 + 1), j);
      objs.push_back(out);
      Index in = 0, outn = 0;
      for (int n = 0; n < k; ++n) {
        const auto &a = before[static_cast<std::size_t>(n)], &b = cs.S[static_cast<std::size_t>(n)];
        EXPECT_GE(b.mem, a.mem);
        EXPECT_GE(b.net_in, a.net_in);
        EXPECT_GE(b.net_out, a.net_out);
        in += b.net_in;
        outn += b.net_out;
      }
      EXPECT_EQ(in, outn);
      EXPECT_GE(cost(cs.S), c0);
      for (auto o : ops) EXPECT_TRUE(cs.info(o).on(j));
    }
  }
}

TEST(CommTime, Examples) {
  CostParams p;
  std::vector<StepRecord> none(4, StepRecord{1, 0, 0, 1, {}, {}});
  EXPECT_DOUBLE_EQ(comm_time(none, p, CommMode::dask), 4 * p.gamma);
  std::vector<StepRecord> one{{1, 0, 0, 100, {{1, 1, 0, 100}}, {}}};
  EXPECT_DOUBLE_EQ(comm_time(one, p, CommMode::dask), 2.0 + p.gamma);
}

// The k=2, r=4, p=8 reduction tree: 4 local adds, 2 local adds, 1 cross-node add.
TEST(CommTime, ReductionTree) {
  CostParams p;
  std::vector<StepRecord> st;
  for (int i = 0; i < 4; ++i) st.push_back({1, i % 2, 0, 100, {}, {}});
  for (int i = 0; i < 2; ++i) st.push_back({2, i, 0, 100, {}, {}});
  st.push_back({3, 0, 0, 100, {{9, 1, 0, 100}}, {}});
  EXPECT_NEAR(comm_time(st, p, CommMode::ray), 2.75, 1e-12);
}

TEST(CommTime, DaskHandoffsAndDiscount) {
  CostParams p;
  p.intranode_discount = 0.5;
  std::vector<StepRecord> st{{1, 0, 1, 10, {}, {100}}};
  EXPECT_DOUBLE_EQ(comm_time(st, p, CommMode::dask), p.gamma + 0.5 * (0.2 + 0.2));
}

TEST(CostParams, ValidationAndKeys) {
  CostParams p;
  p.set("beta", 0.5);
  EXPECT_DOUBLE_EQ(p.beta, 0.5);
  EXPECT_THROW(p.set("delta", 1), std::invalid_argument);
  p.alpha = -1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  EXPECT_TRUE(CostParams::is_key("gamma"));
}

TEST(Trace, CsvSchema) {
  LoadTrace t{{{{1, 2, 3}, {4, 5, 6}}}};
  std::ostringstream os;
  write_trace_csv(os, t);
  EXPECT_EQ(os.str(), "step,node,mem,net_in,net_out\n1,0,1,2,3\n1,1,4,5,6\n");
}
