#include <gtest/gtest.h>

#include <pathpol/graph_dsl.hpp>
#include <pathpol/oracle.hpp>
#include <pathpol/owl.hpp>

#include "test_util.hpp"

using namespace pathpol;

namespace {

// Two stages without intermediate outcomes, so the full-history tabular
// policies can be enumerated (2 + 8 rows).
const char* kSmallTwoStage = R"(
W0 -> A1
W0 -> M1
A1 -> M1
W0 -> A2
A1 -> A2
M1 -> A2
A2 -> M2
M1 -> M2
W0 -> W2
A1 -> W2
M1 -> W2
A2 -> W2
M2 -> W2
)";

StageStructure small_structure(int ref1 = 1, int ref2 = 0) {
  StageStructure s;
  s.baseline = {"W0"};
  s.stages = {Stage{"A1", "M1", {}, ref1}, Stage{"A2", "M2", {"W2"}, ref2}};
  s.outcome = "W2";
  return s;
}

NpsemModel model_of(const std::string& dsl, std::uint64_t seed) {
  auto pg = parse_graph(dsl);
  std::mt19937_64 rng(seed);
  return random_model(pg.graph, pg.hidden, rng);
}

NpsemModel fig2c_model(std::uint64_t seed) {
  auto pg = load_graph(testutil::data_path("fig2c_dag.g"));
  std::mt19937_64 rng(seed);
  return random_model(pg.graph, pg.hidden, rng);
}

// Path-policy query whose Y* is E[W2] under the stage policies, with the
// mediators responding to the references.
Query path_query(const StagePolicies& p, const StageStructure& s, const std::set<Edge>& alpha) {
  Query q;
  q.kind = Query::Kind::path_policy;
  q.outcomes = {s.outcome};
  for (std::size_t i = 0; i < s.size(); ++i) {
    q.policies[s.stages[i].treatment] = PolicyDecl{p.stages[i].context, p.stages[i].table};
    q.reference_values[s.stages[i].treatment] = Value{s.stages[i].reference, {}};
  }
  q.alpha = alpha;
  return q;
}

StagePolicies random_policies(const std::vector<VarList>& contexts, const Cards& cards, std::mt19937_64& rng) {
  StagePolicies p;
  std::bernoulli_distribution coin(0.5);
  for (const auto& c : contexts) {
    TabularPolicy t{c, {}};
    for (std::size_t r = 0; r < t.rows(cards); ++r) t.table.push_back(coin(rng) ? 1 : 0);
    p.stages.push_back(std::move(t));
  }
  return p;
}

}  // namespace

TEST(DynamicProgramming, SingleStageDominantArmGivesConstantPolicy) {
  Cards cards{{"W0", 3}, {"A1", 2}, {"W1", 2}};
  auto t = Table::tabulate({"W0", "A1", "W1"}, cards, [](const Assignment& x) {
    double pw = 1.0 / 3;
    double pa = x.at("W0") == 0 ? 0.3 : 0.6;
    if (x.at("A1") == 0) pa = 1 - pa;
    double py1 = x.at("A1") == 1 ? 0.7 + 0.1 * x.at("W0") : 0.2 + 0.1 * x.at("W0");
    return pw * pa * (x.at("W1") == 1 ? py1 : 1 - py1);
  });
  DiscreteLaw law(t);
  StageStructure s;
  s.baseline = {"W0"};
  s.stages = {Stage{"A1", std::nullopt, {"W1"}, 0}};
  s.outcome = "W1";
  auto p = dp_total(law, s);
  ASSERT_EQ(p.stages.size(), 1u);
  EXPECT_EQ(p.stages[0].context, VarList{"W0"});
  EXPECT_EQ(p.stages[0].table, (std::vector<int>{1, 1, 1}));
}

TEST(DynamicProgramming, PathSpecificNeedsMediators) {
  auto law = fig2c_model(1).observed_law();
  EXPECT_THROW(dp_path_specific(law, StageStructure::standard(2, false)), std::invalid_argument);
}

TEST(DynamicProgramming, MediatorsIgnoringTreatmentMatchTotalEffectPolicy) {
  // fig2c_dag.g without A1 -> M1 and A2 -> M2: freezing the mediators at the
  // references changes nothing.
  auto pg = load_graph(testutil::data_path("fig2c_dag.g"));
  std::vector<Edge> kept;
  for (const auto& e : pg.graph.directed())
    if (e != Edge{"A1", "M1"} && e != Edge{"A2", "M2"}) kept.push_back(e);
  auto g = Graph::from_edges(pg.graph.vertices(), kept);
  auto s = StageStructure::standard(2, true, {1, 0});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    auto law = random_model(g, pg.hidden, rng).observed_law();
    auto total = dp_total(law, s);
    auto path = dp_path_specific(law, s);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(total.stages[i].table, path.stages[i].table) << "seed " << seed;
  }
}

TEST(DynamicProgramming, MatchesExhaustiveSearchOverFullHistories) {
  auto s = small_structure();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto law = model_of(kSmallTwoStage, seed).observed_law();
    StageModel m(law, s);
    auto dp = dp_path_specific(law, s);
    auto ex = exhaustive_optimum(m, {s.history(0), s.history(1)});
    EXPECT_EQ(ex.evaluated, 1024u);
    EXPECT_NEAR(m.value(dp.rules(law.cards())), ex.best, 1e-12) << "seed " << seed;
  }
}

TEST(DynamicProgramming, NoReducedContextPolicyBeatsIt) {
  auto s = StageStructure::standard(2, true, {1, 0});
  auto law = fig2c_model(3).observed_law();
  StageModel m(law, s);
  double dp = m.value(dp_path_specific(law, s).rules(law.cards()));
  auto ex = exhaustive_optimum(m, {{"W0"}, {"W0", "M1", "W1"}});
  EXPECT_GE(dp, ex.best - 1e-12);
}

TEST(DynamicProgramming, ValueAgreesWithCounterfactualOracle) {
  auto s = StageStructure::standard(2, true, {1, 0});
  const std::set<Edge> alpha{{"A1", "W1"}, {"A1", "W2"}, {"A1", "A2"}, {"A2", "W2"}};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto model = fig2c_model(seed);
    auto law = model.observed_law();
    auto dp = dp_path_specific(law, s);
    double v = StageModel(law, s).value(dp.rules(law.cards()));
    auto cf = cf_query(model, path_query(dp, s, alpha));
    EXPECT_NEAR(v, cf.at({{"W2", 1}}), 1e-9) << "seed " << seed;
  }
}

TEST(DynamicProgramming, TotalEffectValueAgreesWithPolicyOracle) {
  auto s = StageStructure::standard(2, true);
  auto model = fig2c_model(4);
  auto law = model.observed_law();
  auto dp = dp_total(law, s);
  double v = StageModel(law, s, false).value(dp.rules(law.cards()));
  Query q;
  q.kind = Query::Kind::policy;
  q.outcomes = {"W2"};
  for (std::size_t i = 0; i < 2; ++i) q.policies[s.stages[i].treatment] = {dp.stages[i].context, dp.stages[i].table};
  EXPECT_NEAR(v, cf_query(model, q).at({{"W2", 1}}), 1e-9);
}

TEST(DynamicProgramming, BeatsRandomPolicies) {
  auto s = StageStructure::standard(2, true, {1, 0});
  auto law = fig2c_model(7).observed_law();
  StageModel m(law, s);
  double dp = m.value(dp_path_specific(law, s).rules(law.cards()));
  std::mt19937_64 rng(11);
  for (int k = 0; k < 100; ++k) {
    auto p = random_policies({s.history(0), s.history(1)}, law.cards(), rng);
    EXPECT_LE(m.value(p.rules(law.cards())), dp + 1e-12);
  }
}

TEST(OutcomeWeighting, EqualArmsGiveZeroWeight) {
  Cards cards{{"W0", 2}, {"A1", 2}, {"W1", 2}};
  auto t = Table::tabulate({"W0", "A1", "W1"}, cards, [](const Assignment& x) {
    double pa = x.at("W0") == 0 ? 0.4 : 0.7;
    double py = x.at("W0") == 0 ? 0.25 : 0.65;
    return 0.5 * (x.at("A1") ? pa : 1 - pa) * (x.at("W1") ? py : 1 - py);
  });
  DiscreteLaw law(t);
  StageStructure s;
  s.baseline = {"W0"};
  s.stages = {Stage{"A1", std::nullopt, {"W1"}, 0}};
  s.outcome = "W1";
  StageModel m(law, s, false);
  std::mt19937_64 rng(2);
  auto d = sample_law(law, 50, rng);
  for (const auto& w : owl_weights(m, 0, d, {"W0"}, {{}})) EXPECT_NEAR(w.weight, 0.0, 1e-12);
}

TEST(OutcomeWeighting, SingleStageWeightIsTheArmDifference) {
  auto pg = parse_graph("W0 -> A1\nW0 -> W1\nA1 -> W1\n");
  std::mt19937_64 rng(5);
  auto law = random_model(pg.graph, pg.hidden, rng).observed_law();
  StageStructure s;
  s.baseline = {"W0"};
  s.stages = {Stage{"A1", std::nullopt, {"W1"}, 0}};
  s.outcome = "W1";
  StageModel m(law, s, false);
  auto d = sample_law(law, 40, rng);
  auto samples = owl_weights(m, 0, d, {"W0"}, {{}});
  auto joint = law.joint();
  for (std::size_t r = 0; r < d.size(); ++r) {
    int w0 = static_cast<int>(d.rows[r][d.column("W0")]);
    auto mean = [&](int a) {
      double num = joint.at({{"W0", w0}, {"A1", a}, {"W1", 1}});
      double den = num + joint.at({{"W0", w0}, {"A1", a}, {"W1", 0}});
      return num / den;
    };
    EXPECT_NEAR(samples[r].weight, std::abs(mean(1) - mean(0)), 1e-12);
    EXPECT_EQ(samples[r].label, mean(1) > mean(0) ? 1 : 0);
  }
}

TEST(OutcomeWeighting, TruePlugInsRecoverDynamicProgrammingDecisions) {
  auto s = StageStructure::standard(2, true, {1, 0});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto law = fig2c_model(seed).observed_law();
    StageModel m(law, s);
    auto dp = dp_path_specific(law, s);
    std::mt19937_64 rng(seed + 100);
    auto data = sample_law(law, 3000, rng);
    auto learned = learn_path_policy(data, m);
    for (std::size_t i = 0; i < 2; ++i) {
      auto rule = learned.rule(i);
      auto ctx = s.history(i);
      std::size_t row = 0;
      m.for_each(ctx, {}, [&](const Assignment& h) {
        EXPECT_EQ(rule(h), dp.stages[i].table[row]) << "seed " << seed << " stage " << i << " " << describe(h);
        ++row;
      });
    }
    double opt = m.value(dp.rules(law.cards()));
    EXPECT_GE(m.value(learned.rules()), 0.95 * opt);
  }
}

TEST(OutcomeWeighting, DominantArmIsLearnedFromSamples) {
  auto pg = load_graph(testutil::data_path("fig2c_dag.g"));
  std::mt19937_64 rng(9);
  auto model = random_model(pg.graph, pg.hidden, rng);
  // W2 = 1 whenever A2 = 1, whatever else happens.
  auto eqs = model.equations();
  for (auto& e : eqs) {
    if (e.name != "W2") continue;
    auto it = std::find(e.parents.begin(), e.parents.end(), "A2");
    std::size_t pos = static_cast<std::size_t>(it - e.parents.begin());
    std::vector<int> pc;
    for (const auto& p : e.parents) pc.push_back(model.cards().at(p));
    std::size_t stride = 1;
    for (std::size_t k = pc.size(); k-- > pos + 1;) stride *= static_cast<std::size_t>(pc[k]);
    for (std::size_t cell = 0; cell < e.table.size(); ++cell) {
      std::size_t parent_index = cell / static_cast<std::size_t>(e.noise.size());
      if ((parent_index / stride) % 2 == 1) e.table[cell] = 1;
    }
  }
  model = NpsemModel(eqs);
  auto law = model.observed_law();
  auto s = StageStructure::standard(2, true, {1, 0});
  auto train = sample_law(law, 2000, rng);
  auto heldout = sample_law(law, 1000, rng);
  auto learned = learn_path_policy(train, s, law.cards());
  auto hist = s.history(1);
  std::size_t ones = 0;
  for (std::size_t r = 0; r < heldout.size(); ++r) ones += learned.rule(1)(heldout.assignment(r, hist));
  EXPECT_GE(static_cast<double>(ones) / static_cast<double>(heldout.size()), 0.95);
}
