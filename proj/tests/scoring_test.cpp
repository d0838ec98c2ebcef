#include <random>

#include <gtest/gtest.h>

#include "lpgia/scoring.hpp"
#include "oracles.hpp"

using namespace lpgia;

namespace {

ProbMatrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return {m, ProbKind::kSmoothed};
}

// Node 0 is the hub of a star with three leaves.
Csr star3() { return build_csr(4, {{0, 1}, {0, 2}, {0, 3}}); }

}  // namespace

TEST(TargetLabels, SecondChoice) {
  EXPECT_EQ(target_labels(rows({{0.5, 0.3, 0.2}}), {0}), (std::vector<Label>{1}));
  EXPECT_EQ(target_labels(rows({{0.2, 0.4, 0.4}}), {1}), (std::vector<Label>{2}));
  EXPECT_EQ(target_labels(rows({{0.25, 0.25, 0.5}}), {2}), (std::vector<Label>{0}));
}

TEST(TargetLabels, TwoClassesPickTheOtherOne) {
  std::mt19937_64 rng(1);
  const ProbMatrix z = oracle::random_probs(30, 2, rng);
  const auto y = argmax_rows(z);
  const auto c = target_labels(z, y);
  for (std::size_t v = 0; v < y.size(); ++v) EXPECT_EQ(c[v], 1 - y[v]);
}

TEST(TargetLabels, SingleClassRejected) {
  EXPECT_THROW(target_labels(rows({{1.0}}), {0}), ConfigError);
}

TEST(TargetLabels, InvariantToPositiveRowScaling) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 20; ++trial) {
    ProbMatrix z = oracle::random_probs(15, 5, rng);
    const auto y = argmax_rows(z);
    const auto before = target_labels(z, y);
    for (Eigen::Index i = 0; i < z.values.rows(); ++i) z.values.row(i) *= scale(rng);
    EXPECT_EQ(argmax_rows(z), y);
    EXPECT_EQ(target_labels(z, y), before);
  }
}

TEST(Similarity, Examples) {
  const Csr g = star3();
  EXPECT_DOUBLE_EQ(similarity(g, {1, 1, 1, 1})[0], 1.0);
  EXPECT_DOUBLE_EQ(similarity(g, {1, 0, 2, 0})[0], 0.0);
  EXPECT_DOUBLE_EQ(similarity(g, {1, 1, 0, 1})[0], 2.0 / 3.0);
}

TEST(VulnerabilityScore, Examples) {
  const Csr pair = build_csr(2, {{0, 1}});
  EXPECT_DOUBLE_EQ(vulnerability_score(pair, {0, 0})[0], 0.5);
  EXPECT_DOUBLE_EQ(vulnerability_score(pair, {0, 1})[0], 0.0);
  EXPECT_DOUBLE_EQ(vulnerability_score(star3(), {2, 2, 2, 0})[0], 1.0 / 6.0);
}

TEST(TopologyScore, Examples) {
  const Csr g = star3();
  // Every neighbor targets the hub's label 1 and none predicts it.
  EXPECT_DOUBLE_EQ(topology_score(g, {0, 0, 0, 0}, {1, 1, 1, 1})[0], 1.0);
  // Two target matches, one neighbor predicted as the hub's target.
  EXPECT_DOUBLE_EQ(topology_score(g, {0, 0, 0, 1}, {1, 1, 1, 0})[0], 1.0 / 3.0);
  // One target match cancelled by one predicted match.
  EXPECT_DOUBLE_EQ(topology_score(g, {0, 1, 0, 0}, {1, 2, 1, 2})[0], 0.0);
}

TEST(PropagationScore, Mixes) {
  const std::vector<double> s1{1.0 / 6.0, 0.2}, s2{1.0 / 3.0, -0.4};
  EXPECT_EQ(propagation_score(s1, s2, 1.0), s1);
  EXPECT_EQ(propagation_score(s1, s2, 0.0), s2);
  EXPECT_DOUBLE_EQ(propagation_score(s1, s2, 0.5)[0], 0.25);
  EXPECT_THROW(propagation_score(s1, s2, 1.5), ConfigError);
}

TEST(ScoreNodes, GroupsCandidatesByTargetLabel) {
  const Csr g = star3();
  const ProbMatrix z = rows({{0.6, 0.3, 0.1}, {0.2, 0.7, 0.1}, {0.1, 0.3, 0.6}, {0.5, 0.1, 0.4}});
  const NodeScores s = score_nodes(g, z, z, {0, 1, 3}, 0.5);
  EXPECT_EQ(s.y, (std::vector<Label>{0, 1, 2, 0}));
  EXPECT_EQ(s.c_b, (std::vector<Label>{1, 0, 1, 2}));
  EXPECT_EQ(s.groups.at(1), (std::vector<NodeId>{0}));
  EXPECT_EQ(s.groups.at(0), (std::vector<NodeId>{1}));
  EXPECT_EQ(s.groups.at(2), (std::vector<NodeId>{3}));
  for (std::size_t v = 0; v < 4; ++v) EXPECT_DOUBLE_EQ(s.s_h[v], 0.5 * s.s1[v] + 0.5 * s.s2[v]);
}
