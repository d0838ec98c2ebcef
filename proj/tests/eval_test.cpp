#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lpgia/eval.hpp"
#include "lpgia/injector.hpp"

using namespace lpgia;

namespace {

TrainOptions quick() {
  TrainOptions o;
  o.epochs = 40;
  return o;
}

}  // namespace

TEST(Accuracy, Examples) {
  const std::vector<Label> t{0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
  const std::vector<char> all(10, 1);
  EXPECT_EQ(accuracy(t, t, all), 1.0);
  std::vector<Label> off(10);
  for (int i = 0; i < 10; ++i) off[i] = (t[i] + 1) % 3;
  EXPECT_EQ(accuracy(off, t, all), 0.0);
  std::vector<Label> half = t;
  for (int i = 0; i < 5; ++i) half[i] = off[i];
  EXPECT_EQ(accuracy(half, t, all), 0.5);
  std::vector<char> mask(10, 0);
  mask[7] = 1;
  EXPECT_EQ(accuracy(off, t, mask), 0.0);
  EXPECT_EQ(accuracy(t, t, std::vector<char>(10, 0)), 0.0);
}

TEST(Evaluate, EmptyPlanChangesNothing) {
  const GraphBundle g = fixture::small_csbm(3);
  InjectionPlan plan;
  plan.base_nodes = g.n();
  plan.dim = g.dim();
  EvalOptions o;
  o.train = quick();
  for (Mode mode : {Mode::kEvasion, Mode::kPoisoning}) {
    const EvalReport r = evaluate(g, plan, mode, Variant::kGcn, {1, 2, 3}, o);
    for (const auto& s : r.per_seed) {
      EXPECT_FALSE(s.failed);
      EXPECT_EQ(s.attacked_acc, s.clean_acc);
    }
    EXPECT_EQ(r.drop, 0.0);
    EXPECT_EQ(r.seeds_used(), 3u);
  }
}

TEST(Evaluate, EvasionKeepsVictimWeights) {
  const GraphBundle g = fixture::small_csbm(3);
  const auto ens = build_ensemble(g, 2, 1, quick());
  AttackConfig cfg;
  cfg.n_fake = 4;
  const InjectionPlan plan = run_attack(g, ens, cfg);
  const PerturbedGraph pg = materialize(plan, g);

  const GcnParams victim = train(g, Variant::kGcn, quick(), 77);
  const auto before = params_digest(victim);
  const ProbMatrix z = gcn_forward(victim, pg);
  EXPECT_EQ(params_digest(victim), before);

  // evaluate() scores exactly those clean weights on the perturbed graph.
  EvalOptions o;
  o.train = quick();
  const EvalReport r = evaluate(g, plan, Mode::kEvasion, Variant::kGcn, {77}, o);
  std::vector<Label> truth = g.labels;
  truth.resize(pg.num_nodes(), -1);
  EXPECT_EQ(r.per_seed[0].attacked_acc, accuracy(argmax_rows(z), truth, split_mask(pg.split(), Split::kTest)));
}

TEST(Evaluate, FakeNodesStayOutOfMasksAndLoss) {
  const GraphBundle g = fixture::small_csbm(3);
  const auto ens = build_ensemble(g, 2, 1, quick());
  AttackConfig cfg;
  cfg.n_fake = 4;
  const PerturbedGraph pg = materialize(run_attack(g, ens, cfg), g);
  for (std::size_t v = g.n(); v < pg.num_nodes(); ++v) EXPECT_EQ(pg.split()[v], Split::kNone);
  // A poisoned model only ever reads the labels of train nodes: flipping the
  // (nonexistent) fake labels cannot change it.
  std::vector<Label> a = g.labels, b = g.labels;
  a.resize(pg.num_nodes(), 0);
  b.resize(pg.num_nodes(), 2);
  EXPECT_EQ(train(pg.view(), a, pg.split(), g.num_classes, Variant::kGcn, quick(), 5),
            train(pg.view(), b, pg.split(), g.num_classes, Variant::kGcn, quick(), 5));
}

TEST(Evaluate, DeterministicAndFailuresMarked) {
  const GraphBundle g = fixture::small_csbm(3);
  InjectionPlan plan;
  plan.base_nodes = g.n();
  plan.dim = g.dim();
  EvalOptions o;
  o.train = quick();
  const EvalReport a = evaluate(g, plan, Mode::kPoisoning, Variant::kSgc, {4, 5}, o);
  const EvalReport b = evaluate(g, plan, Mode::kPoisoning, Variant::kSgc, {4, 5}, o);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());

  o.train.lr = 1e300;
  const EvalReport bad = evaluate(g, plan, Mode::kEvasion, Variant::kGcn, {1}, o);
  EXPECT_TRUE(bad.per_seed[0].failed);
  EXPECT_EQ(bad.seeds_used(), 0u);
}

TEST(Report, JsonAndCsvRoundTrip) {
  EvalReport r;
  r.attack = "ours,ours,ours";
  r.mode = Mode::kPoisoning;
  r.victim = Variant::kSgc;
  r.clean_acc = 0.8;
  r.attacked_acc = 0.7;
  r.drop = r.clean_acc - r.attacked_acc;
  r.n_fake = 3;
  r.edge_total = 9;
  r.per_seed = {{1, 0.8, 0.7, false, ""}, {2, 0, 0, true, "diverged"}};
  r.similarity_before = 0.4;
  r.similarity_after = 0.5;
  const EvalReport back = report_from_json(to_json(r));
  EXPECT_EQ(to_json(back).dump(), to_json(r).dump());
  EXPECT_EQ(csv_row(r).substr(0, 38), "\"ours,ours,ours\",sgc,poisoning,3,9,1,0");
}
