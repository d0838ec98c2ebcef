#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lpgia/graph.hpp"
#include "lpgia/perturbed.hpp"
#include "lpgia/plan.hpp"
#include "lpgia/propagation.hpp"
#include "lpgia/scoring.hpp"
#include "lpgia/surrogate.hpp"

namespace lpgia {

enum class VictimPool : std::uint8_t { kAll, kNonTrain, kTestOnly };

inline VictimPool parse_victim_pool(const std::string& s) {
  if (s == "all") return VictimPool::kAll;
  if (s == "non_train") return VictimPool::kNonTrain;
  if (s == "test_only") return VictimPool::kTestOnly;
  throw ConfigError("unknown victim pool '" + s + "'");
}

inline const char* to_string(VictimPool p) {
  switch (p) {
    case VictimPool::kAll: return "all";
    case VictimPool::kNonTrain: return "non_train";
    case VictimPool::kTestOnly: return "test_only";
  }
  return "all";
}

struct AttackConfig {
  std::size_t n_fake = 0;
  double alpha = 0.9;
  double beta = 0.5;
  std::size_t n_k = 10;
  std::size_t smooth_iters = 50;
  double tol = 1e-8;
  std::size_t ensemble_size = 20;
  std::uint64_t seed = 0;
  VictimPool victim_pool = VictimPool::kNonTrain;
  /// Re-predict and re-smooth after every injected node.
  bool recompute_smooth = true;
  /// Take target labels from the smoothed prediction (false: raw prediction).
  bool target_from_smoothed = true;

  SmoothOptions smoothing() const { return {alpha, smooth_iters, tol}; }
  void validate() const {
    if (n_k < 1) throw ConfigError("n_k must be at least 1");
    if (!(alpha >= 0.0) || alpha >= 1.0) throw ConfigError("alpha must lie in [0, 1)");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  }
};

/// floor(n_fake * 2m / n), evaluated in integers.
inline std::size_t total_edge_budget(const GraphBundle& g, std::size_t n_fake) {
  return g.n() == 0 ? 0 : (n_fake * 2 * g.m()) / g.n();
}

/// Per-fake-node edge budgets. Draws from the empirical degree distribution
/// with replacement, clamps each draw to >= 1, then applies unit
/// increments/decrements at random positions until the total equals
/// floor(n_fake * avg_degree).
inline std::vector<std::size_t> sample_budgets(const GraphBundle& g, std::size_t n_fake, std::uint64_t seed) {
  if (n_fake == 0) return {};
  const std::size_t total = total_edge_budget(g, n_fake);
  if (total < n_fake)
    throw ConfigError("edge budget " + std::to_string(total) + " cannot give each of " + std::to_string(n_fake) +
                      " fake nodes an edge");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_node(0, g.n() - 1);
  std::uniform_int_distribution<std::size_t> pick_slot(0, n_fake - 1);
  std::vector<std::size_t> budget(n_fake);
  std::size_t sum = 0;
  for (auto& b : budget) {
    b = std::max<std::size_t>(1, g.degree(NodeId(pick_node(rng))));
    sum += b;
  }
  while (sum < total) {
    ++budget[pick_slot(rng)];
    ++sum;
  }
  while (sum > total) {
    auto& b = budget[pick_slot(rng)];
    if (b > 1) {
      --b;
      --sum;
    }
  }
  return budget;
}

/// (1 / sqrt(d_u)) * sum over the cluster of z_i / sqrt(d_i + 1).
inline Vector aggregated_dist(const Csr& adj, const ProbMatrix& z, std::span<const NodeId> cluster,
                              std::size_t d_u) {
  if (d_u == 0) throw ConfigError("fake degree must be positive");
  Vector acc = Vector::Zero(Eigen::Index(z.classes()));
  for (NodeId i : cluster) acc += z.row(std::size_t(i)).transpose() / std::sqrt(double(adj.degree(i) + 1));
  return acc / std::sqrt(double(d_u));
}

/// Margin of c_u over the best competing class.
inline double cluster_score(const Vector& z_agg, Label c_u) {
  return z_agg[c_u] - z_agg[argmax_excluding(z_agg, c_u)];
}

/// Mutable candidate state shared by the cluster builders.
struct VictimPoolState {
  std::vector<char> available;  // per original node
  std::size_t remaining = 0;

  void take(NodeId v) {
    if (available[v]) {
      available[v] = 0;
      --remaining;
    }
  }
};

inline VictimPoolState make_pool(const GraphBundle& g, VictimPool kind) {
  VictimPoolState p;
  p.available.assign(g.n(), 0);
  for (std::size_t v = 0; v < g.n(); ++v) {
    if (g.degree(NodeId(v)) == 0) continue;
    const Split s = g.split[v];
    bool ok = kind == VictimPool::kAll || (kind == VictimPool::kNonTrain && s != Split::kTrain) ||
              (kind == VictimPool::kTestOnly && s == Split::kTest);
    if (ok) {
      p.available[v] = 1;
      ++p.remaining;
    }
  }
  return p;
}

inline std::vector<NodeId> pool_members(const VictimPoolState& pool) {
  std::vector<NodeId> out;
  for (std::size_t v = 0; v < pool.available.size(); ++v)
    if (pool.available[v]) out.push_back(NodeId(v));
  return out;
}

/// Available node with the highest score; ties to the lowest id. -1 if none.
inline NodeId best_available(const VictimPoolState& pool, const std::vector<double>& score) {
  NodeId best = -1;
  for (std::size_t v = 0; v < pool.available.size(); ++v)
    if (pool.available[v] && (best < 0 || score[v] > score[best])) best = NodeId(v);
  return best;
}

struct ClusterResult {
  Label pseudo_label = -1;
  std::vector<NodeId> victims;
};

/// Greedy victim-cluster growth for one fake node.
///
/// The seed is the available node with the largest node score; its target
/// label becomes the pseudo label c_u. Each further step scores every
/// available node of group c_u by the cluster margin of the aggregated
/// smoothed distribution, keeps the top n_k by margin, and adds the kept node
/// with the largest node score. Chosen nodes leave the pool. `d_u` is the full
/// budget; it scales every margin equally so the ranking does not depend on it.
inline ClusterResult derive_cluster(const Csr& adj, const NodeScores& scores, const std::vector<double>& node_score,
                                    const ProbMatrix& z_tilde, VictimPoolState& pool, std::size_t budget,
                                    std::size_t n_k) {
  ClusterResult out;
  const NodeId seed = best_available(pool, node_score);
  if (seed < 0 || budget == 0) return out;
  out.pseudo_label = scores.c_b[seed];
  out.victims.push_back(seed);
  pool.take(seed);

  const auto it = scores.groups.find(out.pseudo_label);
  if (it == scores.groups.end()) return out;
  const auto& group = it->second;
  const double inv_du = 1.0 / std::sqrt(double(budget));

  Vector acc = z_tilde.row(std::size_t(seed)).transpose() / std::sqrt(double(adj.degree(seed) + 1));
  std::vector<std::pair<double, NodeId>> ranked;
  while (out.victims.size() < budget) {
    ranked.clear();
    for (NodeId j : group) {
      if (!pool.available[j]) continue;
      Vector agg = (acc + z_tilde.row(std::size_t(j)).transpose() / std::sqrt(double(adj.degree(j) + 1))) * inv_du;
      ranked.emplace_back(cluster_score(agg, out.pseudo_label), j);
    }
    if (ranked.empty()) break;
    const std::size_t keep = std::min(n_k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + keep, ranked.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    NodeId pick = ranked.front().second;
    for (std::size_t r = 1; r < keep; ++r) {
      NodeId j = ranked[r].second;
      if (node_score[j] > node_score[pick] || (node_score[j] == node_score[pick] && j < pick)) pick = j;
    }
    out.victims.push_back(pick);
    pool.take(pick);
    acc += z_tilde.row(std::size_t(pick)).transpose() / std::sqrt(double(adj.degree(pick) + 1));
  }
  return out;
}

struct ElementValues {
  Matrix values;                    // L x dim
  std::vector<char> class_present;  // per class
};

/// Mean nonzero magnitude of feature k over nodes labeled c, capped at the
/// bundle's value_cap; 0 where no such node has a nonzero entry.
inline ElementValues element_values(const GraphBundle& g, const std::vector<Label>& labels) {
  const auto L = Eigen::Index(g.num_classes);
  Matrix sum = Matrix::Zero(L, Eigen::Index(g.dim()));
  Matrix count = Matrix::Zero(L, Eigen::Index(g.dim()));
  ElementValues out;
  out.class_present.assign(g.num_classes, 0);
  for (std::size_t v = 0; v < g.n(); ++v) {
    const Label c = labels[v];
    out.class_present[c] = 1;
    auto idx = g.features.row_indices(v);
    auto val = g.features.row_values(v);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (val[i] == 0.0) continue;
      sum(c, idx[i]) += std::abs(val[i]);
      count(c, idx[i]) += 1.0;
    }
  }
  out.values = Matrix::Zero(L, Eigen::Index(g.dim()));
  for (Eigen::Index c = 0; c < L; ++c)
    for (Eigen::Index k = 0; k < out.values.cols(); ++k)
      if (count(c, k) > 0.0) out.values(c, k) = std::min(sum(c, k) / count(c, k), g.value_cap);
  return out;
}

/// floor(total nonzeros / n).
inline std::size_t feature_budget(const GraphBundle& g) { return g.n() == 0 ? 0 : g.features.nnz() / g.n(); }

/// Draws `count` distinct entries of `items` uniformly (partial Fisher-Yates).
template <typename T>
inline std::vector<T> sample_without_replacement(std::vector<T> items, std::size_t count, std::mt19937_64& rng) {
  count = std::min(count, items.size());
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
    std::swap(items[i], items[pick(rng)]);
  }
  items.resize(count);
  return items;
}

/// Malicious feature for a fake node with pseudo label c_u wired to `cluster`.
///
/// c_z is the strongest competing class of the cluster's aggregated smoothed
/// distribution. Elements score (W[k,c_u] - W[k,c_z]) * x'[c_u,k]; only
/// positive scores qualify. delta_x of them are drawn uniformly from the
/// top min(2 delta_x, dim) and set to x'[c_u,k].
inline SparseVector generate_feature(Label c_u, std::span<const NodeId> cluster, const Csr& adj,
                                     const ProbMatrix& z_tilde, const Matrix& w_bar, const Matrix& x_prime,
                                     std::size_t delta_x, std::mt19937_64& rng) {
  if (std::size_t(w_bar.cols()) != z_tilde.classes()) throw ValidationError("W_bar columns must equal class count");
  const Vector agg = aggregated_dist(adj, z_tilde, cluster, 1);
  const Label c_z = argmax_excluding(agg, c_u);

  std::vector<std::pair<double, std::int32_t>> positive;
  for (Eigen::Index k = 0; k < w_bar.rows(); ++k) {
    const double s = (w_bar(k, c_u) - w_bar(k, c_z)) * x_prime(c_u, k);
    if (s > 0.0) positive.emplace_back(s, std::int32_t(k));
  }
  std::sort(positive.begin(), positive.end(),
            [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  const std::size_t top = std::min<std::size_t>(2 * delta_x, std::size_t(w_bar.rows()));
  if (positive.size() > top) positive.resize(top);

  std::vector<std::int32_t> idx;
  for (auto& [s, k] : positive) idx.push_back(k);
  idx = sample_without_replacement(std::move(idx), delta_x, rng);
  std::sort(idx.begin(), idx.end());
  SparseVector out;
  for (auto k : idx) out.emplace_back(k, x_prime(c_u, k));
  return out;
}

/// Everything a strategy may read while building one fake node.
struct AttackContext {
  const GraphBundle& graph;
  const SurrogateEnsemble& ensemble;
  const AttackConfig& config;
  const NodeScores& scores;
  const ElementValues& x_prime;
  std::size_t delta_x = 0;
  const ProbMatrix& z_tilde;  // current smoothed prediction, original rows first
};

/// Pluggable pieces of the attack loop. The LPGIA defaults come from
/// lpgia_hooks(); the ablation baselines swap individual members.
struct AttackHooks {
  /// Node score used for seed choice and the final pick (LPGIA: s_h).
  std::function<std::vector<double>(const GraphBundle&, const NodeScores&, std::mt19937_64&)> node_score;
  std::function<ClusterResult(const AttackContext&, const std::vector<double>&, VictimPoolState&, std::size_t,
                              std::mt19937_64&)>
      cluster;
  std::function<SparseVector(const AttackContext&, const ClusterResult&, std::mt19937_64&)> feature;
};

inline AttackHooks lpgia_hooks() {
  AttackHooks h;
  h.node_score = [](const GraphBundle&, const NodeScores& s, std::mt19937_64&) { return s.s_h; };
  h.cluster = [](const AttackContext& ctx, const std::vector<double>& score, VictimPoolState& pool,
                 std::size_t budget, std::mt19937_64&) {
    return derive_cluster(ctx.graph.adjacency, ctx.scores, score, ctx.z_tilde, pool, budget, ctx.config.n_k);
  };
  h.feature = [](const AttackContext& ctx, const ClusterResult& c, std::mt19937_64& rng) {
    return generate_feature(c.pseudo_label, c.victims, ctx.graph.adjacency, ctx.z_tilde, ctx.ensemble.w_bar,
                            ctx.x_prime.values, ctx.delta_x, rng);
  };
  return h;
}

/// The sequential injection loop shared by LPGIA and its ablations.
inline InjectionPlan run_with_hooks(const GraphBundle& g, const SurrogateEnsemble& ens, const AttackConfig& cfg,
                                    const AttackHooks& hooks) {
  cfg.validate();
  if (ens.z0.rows() != g.n()) throw ValidationError("ensemble prediction does not match the graph");

  InjectionPlan plan;
  plan.base_nodes = g.n();
  plan.dim = g.dim();
  plan.audit.total_edges = total_edge_budget(g, cfg.n_fake);
  plan.audit.delta_x = feature_budget(g);
  if (cfg.n_fake == 0) return plan;

  const auto budgets = sample_budgets(g, cfg.n_fake, derive_seed(cfg.seed, 1));
  const auto smooth_opts = cfg.smoothing();
  ProbMatrix z_tilde = smooth(g.adjacency, ens.z0, smooth_opts);

  VictimPoolState pool = make_pool(g, cfg.victim_pool);
  const NodeScores scores =
      score_nodes(g.adjacency, ens.z0, cfg.target_from_smoothed ? z_tilde : ens.z0, pool_members(pool), cfg.beta);
  const ElementValues x_prime = element_values(g, scores.y);

  std::mt19937_64 score_rng(derive_seed(cfg.seed, 2));
  const std::vector<double> node_score = hooks.node_score(g, scores, score_rng);

  for (std::size_t u = 0; u < cfg.n_fake; ++u) {
    if (pool.remaining == 0) {
      plan.audit.terminated_early = true;
      break;
    }
    const AttackContext ctx{g, ens, cfg, scores, x_prime, plan.audit.delta_x, z_tilde};
    std::mt19937_64 cluster_rng(derive_seed(cfg.seed, 5000 + u));
    ClusterResult cluster = hooks.cluster(ctx, node_score, pool, budgets[u], cluster_rng);
    if (cluster.victims.empty()) {
      plan.audit.terminated_early = true;
      break;
    }
    std::mt19937_64 feature_rng(derive_seed(cfg.seed, 1000 + u));
    FakeNode fake;
    fake.budget = budgets[u];
    fake.pseudo_label = cluster.pseudo_label;
    fake.feature = hooks.feature(ctx, cluster, feature_rng);
    fake.victims = std::move(cluster.victims);
    if (fake.victims.size() < fake.budget) plan.audit.short_clusters.push_back(u);
    if (fake.feature.empty()) plan.audit.empty_features.push_back(u);
    plan.fakes.push_back(std::move(fake));

    if (cfg.recompute_smooth && u + 1 < cfg.n_fake) {
      const PerturbedGraph pg = materialize(plan, g);
      const ProbMatrix z_new = gcn_forward(ens.members.front(), pg);
      z_tilde = smooth(pg.adjacency(), z_new, smooth_opts);
    }
  }
  return plan;
}

/// The full label-propagation-based injection attack.
inline InjectionPlan run_attack(const GraphBundle& g, const SurrogateEnsemble& ens, const AttackConfig& cfg) {
  return run_with_hooks(g, ens, cfg, lpgia_hooks());
}

struct AuditOptions {
  /// When set, every nonzero must equal x'[c_u][k] from this table.
  const Matrix* element_values = nullptr;
  /// When set, every victim must carry its fake node's pseudo label here.
  const std::vector<Label>* target_labels = nullptr;
};

/// Checks a plan against the budget and constraint invariants; returns one
/// message per violation (empty means the plan is clean).
inline std::vector<std::string> audit_plan(const GraphBundle& g, const InjectionPlan& plan, std::size_t n_fake,
                                           const AuditOptions& opts = {}) {
  std::vector<std::string> bad;
  auto fail = [&](std::string s) { bad.push_back(std::move(s)); };
  const std::size_t target = total_edge_budget(g, n_fake);
  if (plan.audit.total_edges != target) fail("recorded total edge budget differs from floor(n_fake * avg_degree)");
  if (plan.audit.delta_x != feature_budget(g)) fail("recorded delta_x differs from the feature budget");
  std::size_t budget_sum = 0;
  std::vector<char> seen(g.n(), 0);
  for (std::size_t u = 0; u < plan.fakes.size(); ++u) {
    const auto& f = plan.fakes[u];
    const std::string tag = "fake " + std::to_string(u) + ": ";
    budget_sum += f.budget;
    if (f.budget == 0) fail(tag + "zero budget");
    if (f.victims.size() > f.budget) fail(tag + "more victims than budget");
    const bool flagged_short =
        std::find(plan.audit.short_clusters.begin(), plan.audit.short_clusters.end(), u) != plan.audit.short_clusters.end();
    if (f.victims.size() < f.budget && !flagged_short) fail(tag + "short cluster not flagged");
    for (NodeId v : f.victims) {
      if (v < 0 || std::size_t(v) >= g.n()) {
        fail(tag + "victim out of range");
        continue;
      }
      if (seen[v]) fail(tag + "victim " + std::to_string(v) + " reused");
      seen[v] = 1;
      if (opts.target_labels && (*opts.target_labels)[v] != f.pseudo_label)
        fail(tag + "victim " + std::to_string(v) + " has a different target label");
    }
    if (f.feature.size() > plan.audit.delta_x) fail(tag + "feature exceeds delta_x nonzeros");
    for (auto [k, x] : f.feature) {
      if (k < 0 || std::size_t(k) >= g.dim()) {
        fail(tag + "feature index out of range");
        continue;
      }
      if (x == 0.0) fail(tag + "explicit zero stored");
      if (std::abs(x) > g.value_cap) fail(tag + "feature value above cap");
      if (opts.element_values && x != (*opts.element_values)(f.pseudo_label, k))
        fail(tag + "feature value at " + std::to_string(k) + " is not the class statistic");
    }
  }
  if (!plan.audit.terminated_early && plan.fakes.size() == n_fake && budget_sum != target)
    fail("budgets sum to " + std::to_string(budget_sum) + ", expected " + std::to_string(target));
  return bad;
}

}  // namespace lpgia
