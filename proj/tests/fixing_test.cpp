#include <gtest/gtest.h>

#include <random>

#include <pathpol/evaluate.hpp>
#include <pathpol/fixing.hpp>
#include <pathpol/render.hpp>

#include "random_cases.hpp"
#include "test_util.hpp"

using namespace pathpol;

namespace {

Graph fig2a() { return testutil::observed_graph("fig2a.g"); }

std::string show(const Graph& g, const SymKernel& k) { return render(sym::to_expr(k.m), topological_order(g)); }

// Conditional p(head | given) tabulated directly from the joint.
Table conditional(const DiscreteLaw& law, const VarSet& head, const VarSet& given) {
  return law.marginal(set_union(head, given)) / law.marginal(given);
}

}  // namespace

TEST(Fixable, EveryDagVertex) {
  auto g = testutil::observed_graph("fig1a.g");
  for (const auto& v : g.vertices()) EXPECT_TRUE(is_fixable(g, v)) << v;
}

TEST(Fixable, BowGraph) {
  auto g = testutil::observed_graph("bow.g");
  EXPECT_FALSE(is_fixable(g, "A"));
  EXPECT_TRUE(is_fixable(g, "Y"));
}

TEST(Fixable, FixedOrAbsentVertexIsNot) {
  auto g = fix_graph(testutil::observed_graph("fig1a.g"), "A");
  EXPECT_FALSE(is_fixable(g, "A"));
  EXPECT_FALSE(is_fixable(g, "Q"));
}

TEST(FixGraph, OutcomeOfLongMediationGraph) {
  auto g = fix_graph(fig2a(), "W2");
  EXPECT_TRUE(g.is_fixed("W2"));
  EXPECT_TRUE(g.parents("W2").empty());
  EXPECT_TRUE(g.siblings("W2").empty());
  EXPECT_TRUE(g.has_bidirected("W0", "M1"));
  EXPECT_EQ(g.directed().size(), fig2a().directed().size() - 3);
}

TEST(FixGraph, SequenceOnLongMediationGraph) {
  auto g = fig2a();
  for (const auto& v : {"W2", "M1", "A1"}) g = fix_graph(g, v);
  EXPECT_EQ(g.random_vertices(), (VarSet{"W0", "W1"}));
  EXPECT_EQ(g.directed(), (std::set<Edge>{{"A1", "W1"}, {"M1", "W1"}, {"W0", "W1"}}));
  EXPECT_TRUE(g.bidirected().empty());
}

TEST(FixGraph, IsolatedVertexOnlyChangesStatus) {
  auto g = Graph::from_edges({"X", "Y"}, {}, {});
  auto f = fix_graph(g, "X");
  EXPECT_TRUE(f.is_fixed("X"));
  EXPECT_TRUE(f.directed().empty());
}

TEST(FixGraph, RejectsUnfixable) {
  EXPECT_THROW(fix_graph(testutil::observed_graph("bow.g"), "A"), std::invalid_argument);
}

TEST(FixKernel, DagStepRemovesOneFactor) {
  auto g = testutil::observed_graph("fig1a.g");
  auto law = testutil::random_law(g.vertices(), testutil::uniform_cards(g.vertices(), 2), 3);
  auto q = fix_kernel(g, law.as_kernel(), "A");
  auto want = law.joint() / conditional(law, {"A"}, {"W"});
  EXPECT_LE(q.table.max_abs_diff(want), 1e-12);
  EXPECT_LE(q.normalization_error(), 1e-12);
  EXPECT_EQ(show(g, fix_kernel(g, SymKernel::observed(g), "A")), "p(Y,M|A,W) p(W)");
}

TEST(FixKernel, LongMediationChainToW1) {
  auto g = fig2a();
  auto k = SymKernel::observed(g);
  Graph cur = g;
  auto plan = plan_fixing(g, {"W0", "A1", "M1", "W2"});
  ASSERT_TRUE(plan.complete);
  k = apply_fixing(g, k, plan.order);
  EXPECT_EQ(k.targets, VarSet{"W1"});
  EXPECT_EQ(show(g, k), "p(W1|M1,A1,W0)");
}

TEST(FixKernel, LongMediationChainToW0M1) {
  auto g = fig2a();
  auto k = reach_kernel(g, {"W0", "M1"});
  EXPECT_EQ(show(g, k), "p(M1|A1,W0) p(W0)");
}

TEST(FixKernel, LongMediationChainToW2) {
  auto g = fig2a();
  auto k = reach_kernel(g, {"W2"});
  EXPECT_EQ(show(g, k), "Σ_{A1} p(W2|W1,M1,A1,W0) p(A1|W0)");
}

TEST(FixKernel, SymbolicMatchesNumeric) {
  auto g = fig2a();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto law = testutil::random_law(g.vertices(), testutil::uniform_cards(g.vertices(), 2), seed);
    for (const auto& d : std::vector<VarSet>{{"W2"}, {"W1"}, {"W0", "M1"}, {"W0", "A1", "M1", "W1"}}) {
      auto numeric = reach_kernel(g, law, d);
      auto symbolic = evaluate_table(sym::to_expr(reach_kernel(g, d).m), law);
      // The symbolic form may be constant in some fixed arguments; compare on the full grid.
      double worst = 0;
      Assignment a;
      for (std::size_t i = 0; i < numeric.table.size(); ++i) {
        numeric.table.decode(i, a);
        worst = std::max(worst, std::abs(numeric.table.values()[i] - symbolic.at(a)));
      }
      EXPECT_LE(worst, 1e-12) << join(d);
      EXPECT_LE(numeric.normalization_error(), 1e-12);
    }
  }
}

TEST(FixSet, EmptySetIsIdentity) {
  auto g = fig2a();
  auto plan = plan_fixing(g, {});
  EXPECT_TRUE(plan.complete);
  EXPECT_EQ(plan.graph, g);
}

TEST(FixSet, BowGraphIsStuck) {
  auto g = testutil::observed_graph("bow.g");
  auto plan = plan_fixing(g, {"A"});
  EXPECT_FALSE(plan.complete);
  EXPECT_EQ(plan.stuck, VarSet{"A"});
  EXPECT_FALSE(is_reachable(g, {"Y"}));
  EXPECT_TRUE(is_reachable(g, {"A", "Y"}));
}

TEST(FixSet, LongMediationDistrictsAreReachable) {
  auto g = fig2a();
  for (const auto& d : std::vector<VarSet>{{"W0", "M1"}, {"W1"}, {"W2"}}) EXPECT_TRUE(is_reachable(g, d));
}

TEST(FixSet, DagResidualIsGFormula) {
  auto g = testutil::observed_graph("fig1b_nolatent.g");
  auto law = testutil::random_law(g.vertices(), testutil::uniform_cards(g.vertices(), 2), 23);
  VarSet fixed{"A1", "A2"};
  auto plan = plan_fixing(g, fixed);
  ASSERT_TRUE(plan.complete);
  auto q = apply_fixing(g, law.as_kernel(), plan.order);
  Table want = Table::scalar(1.0);
  for (const auto& v : set_minus(g.vertices(), fixed)) want = want * conditional(law, {v}, g.parents(v));
  EXPECT_LE(q.table.max_abs_diff(want), 1e-12);
}

TEST(FixSet, OrderInvarianceOnRandomAdmgs) {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    auto g = testutil::random_admg(rng, 5, 0.4, 0.25);
    auto law = testutil::random_model_law(g, 2, 100 + trial);
    VarSet s{"V0", "V2", "V4"};
    std::vector<VarList> orders;
    VarList cur;
    testutil::all_orders(g, s, cur, orders);
    if (orders.size() < 2) continue;
    ++checked;
    auto first = apply_fixing(g, law.as_kernel(), orders[0]);
    auto first_graph = plan_fixing(g, s).graph;
    for (const auto& o : orders) {
      auto k = apply_fixing(g, law.as_kernel(), o);
      EXPECT_LE(k.table.max_abs_diff(first.table), 1e-12);
      Graph h = g;
      for (const auto& v : o) h = fix_graph(h, v);
      EXPECT_EQ(h, first_graph);
    }
  }
  EXPECT_GT(checked, 10);
}
