#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lpgia/injector.hpp"
#include "lpgia/perturbed.hpp"

using namespace lpgia;
using fixture::TempDir;
using fixture::write_file;

namespace {

void write_minimal(const TempDir& d, const std::string& edges, const std::string& features,
                   const std::string& labels, const std::string& splits) {
  write_file(d / "edges.txt", edges);
  write_file(d / "features.txt", features);
  write_file(d / "labels.txt", labels);
  write_file(d / "splits.txt", splits);
}

}  // namespace

TEST(Loader, SmallestValidGraph) {
  TempDir d("smallest");
  write_minimal(d, "2 1\n0 1\n", "2 3\n0:1\n2:1\n", "0\n1\n", "train\ntest\n");
  const GraphBundle g = load_bundle(d.path());
  EXPECT_EQ(g.n(), 2u);
  EXPECT_EQ(g.m(), 1u);
  EXPECT_EQ(g.degree(0), 1u);
  EXPECT_EQ(g.degree(1), 1u);
  EXPECT_EQ(g.num_classes, 2u);
  EXPECT_EQ(g.feature_kind, FeatureKind::kBinary);
}

TEST(Loader, AsymmetricDirectedListingRejected) {
  TempDir d("asym");
  // (0,1) is listed both ways, so the file is a directed listing; (3,5) lacks its reverse.
  write_minimal(d, "6 3\n0 1\n1 0\n3 5\n", "6 1\n\n\n\n\n\n\n", "0\n0\n0\n0\n0\n0\n",
                "test\ntest\ntest\ntest\ntest\ntest\n");
  EXPECT_THROW(load_bundle(d.path()), ValidationError);
}

TEST(Loader, DuplicateAndSelfLoopRejected) {
  TempDir d("dup");
  write_minimal(d, "2 2\n0 1\n0 1\n", "2 1\n\n\n", "0\n0\n", "test\ntest\n");
  EXPECT_THROW(load_bundle(d.path()), ValidationError);
  write_minimal(d, "2 1\n1 1\n", "2 1\n\n\n", "0\n0\n", "test\ntest\n");
  EXPECT_THROW(load_bundle(d.path()), ValidationError);
}

TEST(Loader, ParseErrorCarriesLineNumber) {
  TempDir d("lineno");
  write_minimal(d, "3 2\n0 1\n1 x\n", "3 1\n\n\n\n", "0\n0\n0\n", "test\ntest\ntest\n");
  try {
    load_bundle(d.path());
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  write_minimal(d, "3 2\n0 1\n1 2\n", "3 4\n0:1\n2:1 1:1\n\n", "0\n0\n0\n", "test\ntest\ntest\n");
  try {
    load_bundle(d.path());
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Loader, NegativeLabelRejected) {
  TempDir d("neg");
  write_minimal(d, "2 1\n0 1\n", "2 1\n\n\n", "0\n-1\n", "test\ntest\n");
  EXPECT_THROW(load_bundle(d.path()), ValidationError);
}

TEST(Loader, LargestComponentKeepsNodeOrder) {
  TempDir d("lcc");
  write_minimal(d, "5 3\n0 1\n2 3\n3 4\n", "5 2\n0:1\n1:1\n0:1\n1:1\n0:1\n", "0\n1\n1\n0\n1\n",
                "train\ntest\nval\ntest\ntrain\n");
  const GraphBundle g = load_bundle(d.path());
  ASSERT_EQ(g.n(), 3u);
  EXPECT_EQ(g.labels, (std::vector<Label>{1, 0, 1}));
  EXPECT_TRUE(g.adjacency.has_edge(0, 1));
  EXPECT_TRUE(g.adjacency.has_edge(1, 2));
  EXPECT_EQ(g.split[0], Split::kVal);
  const GraphBundle all = load_bundle(d.path(), {.largest_component = false});
  EXPECT_EQ(all.n(), 5u);
}

TEST(Loader, SaveLoadRoundTrip) {
  const GraphBundle g = fixture::small_csbm(3);
  TempDir d("roundtrip");
  save_bundle(g, d.path());
  const GraphBundle h = load_bundle(d.path(), {.largest_component = false});
  EXPECT_EQ(h.adjacency.offsets, g.adjacency.offsets);
  EXPECT_EQ(h.adjacency.neighbors, g.adjacency.neighbors);
  EXPECT_EQ(h.features.offsets, g.features.offsets);
  EXPECT_EQ(h.features.indices, g.features.indices);
  EXPECT_EQ(h.features.values, g.features.values);
  EXPECT_EQ(h.labels, g.labels);
  EXPECT_EQ(h.split, g.split);
  EXPECT_EQ(h.value_cap, g.value_cap);
}

TEST(Csbm, HomophilousAtStrongSeparation) {
  CsbmParams p;
  p.n = 100;
  p.classes = 2;
  p.p_in = 0.2;
  p.p_out = 0.01;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    p.seed = seed;
    EXPECT_GT(edge_homophily(gen_csbm(p)), 0.8) << "seed " << seed;
  }
}

TEST(Csbm, DegenerateProbabilitiesRejected) {
  CsbmParams p;
  p.p_in = p.p_out = 0.05;
  EXPECT_THROW(gen_csbm(p), ConfigError);
  p.p_in = 0.01;
  p.p_out = 0.02;
  EXPECT_THROW(gen_csbm(p), ConfigError);
  p = {};
  p.n = 2;
  p.classes = 3;
  EXPECT_THROW(gen_csbm(p), ConfigError);
}

TEST(Csbm, SameSeedGivesByteIdenticalBundles) {
  TempDir a("csbm-a"), b("csbm-b");
  save_bundle(fixture::small_csbm(9), a.path());
  save_bundle(fixture::small_csbm(9), b.path());
  for (const char* f : {"edges.txt", "features.txt", "labels.txt", "splits.txt"})
    EXPECT_EQ(fixture::read_file(a / f), fixture::read_file(b / f)) << f;
}

TEST(Materialize, EmptyPlanIsIdentity) {
  const GraphBundle g = fixture::small_csbm(4);
  InjectionPlan plan;
  plan.base_nodes = g.n();
  plan.dim = g.dim();
  const PerturbedGraph pg = materialize(plan, g);
  EXPECT_EQ(pg.adjacency().offsets, g.adjacency.offsets);
  EXPECT_EQ(pg.adjacency().neighbors, g.adjacency.neighbors);
  EXPECT_EQ(pg.features().values, g.features.values);
  EXPECT_EQ(pg.features().indices, g.features.indices);
}

TEST(Materialize, OneFakeRaisesVictimDegreeByOne) {
  const GraphBundle g = fixture::bundle(3, {{0, 1}, {1, 2}}, {0, 1, 0}, 4);
  InjectionPlan plan;
  plan.base_nodes = 3;
  plan.dim = 4;
  plan.fakes.push_back({1, 1, {0}, {{2, 1.0}}});
  const PerturbedGraph pg = materialize(plan, g);
  EXPECT_EQ(pg.num_nodes(), 4u);
  EXPECT_EQ(pg.adjacency().degree(0), g.degree(0) + 1);
  EXPECT_EQ(pg.adjacency().degree(1), g.degree(1));
  EXPECT_TRUE(pg.adjacency().has_edge(3, 0));
  EXPECT_EQ(pg.split()[3], Split::kNone);
  EXPECT_EQ(pg.features().row(3), (SparseVector{{2, 1.0}}));
}

TEST(Materialize, RejectsFakeFakeEdgesAndSharedVictims) {
  const GraphBundle g = fixture::bundle(3, {{0, 1}, {1, 2}}, {0, 1, 0}, 2);
  InjectionPlan plan;
  plan.base_nodes = 3;
  plan.dim = 2;
  plan.fakes.push_back({1, 0, {4}, {}});
  plan.fakes.push_back({1, 0, {1}, {}});
  EXPECT_THROW(materialize(plan, g), ValidationError);

  plan.fakes[0].victims = {1};
  EXPECT_THROW(materialize(plan, g), ValidationError);

  plan.fakes[0].victims = {0};
  plan.fakes[0].feature = {{5, 1.0}};
  EXPECT_THROW(materialize(plan, g), ValidationError);
}

TEST(Budget, CoraSizedGraphGivesTwentyEdgesForFiveFakes) {
  // Cora after preprocessing: n = 2485, m = 5069 (average degree 4.1).
  std::mt19937_64 rng(5);
  const std::size_t n = 2485, m = 5069;
  std::set<std::pair<NodeId, NodeId>> edges;
  for (std::size_t v = 0; v + 1 < n; ++v) edges.emplace(NodeId(v), NodeId(v + 1));
  std::uniform_int_distribution<NodeId> pick(0, NodeId(n - 1));
  while (edges.size() < m) {
    NodeId a = pick(rng), b = pick(rng);
    if (a != b) edges.emplace(std::min(a, b), std::max(a, b));
  }
  const GraphBundle g = fixture::bundle(n, {edges.begin(), edges.end()}, std::vector<Label>(n, 0));
  EXPECT_NEAR(g.avg_degree(), 4.1, 0.05);
  EXPECT_EQ(total_edge_budget(g, 5), 20u);
  const auto b = sample_budgets(g, 5, 42);
  EXPECT_EQ(std::accumulate(b.begin(), b.end(), std::size_t(0)), 20u);

  InjectionPlan plan;
  plan.base_nodes = n;
  plan.dim = 1;
  NodeId next = 0;
  for (std::size_t budget : b) {
    FakeNode f;
    f.budget = budget;
    for (std::size_t i = 0; i < budget; ++i) f.victims.push_back(next++);
    plan.fakes.push_back(f);
  }
  EXPECT_EQ(materialize(plan, g).fake_edges().size(), 20u);
}
