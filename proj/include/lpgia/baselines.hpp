#pragma once

#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lpgia/injector.hpp"

namespace lpgia {

enum class NodeStrategy : std::uint8_t { kRandom, kDegree, kOurs };
enum class ClusterStrategy : std::uint8_t { kRandom, kTopNodes, kOurs };
enum class FeatureStrategy : std::uint8_t { kRandomCopy, kMostFrequency, kOurs };

/// One point of the ablation grid; each axis is independent.
struct StrategySpec {
  NodeStrategy node = NodeStrategy::kOurs;
  ClusterStrategy cluster = ClusterStrategy::kOurs;
  FeatureStrategy feature = FeatureStrategy::kOurs;

  bool operator==(const StrategySpec&) const = default;
};

inline std::string to_string(const StrategySpec& s) {
  static const char* node[] = {"random", "degree", "ours"};
  static const char* cluster[] = {"random", "top_nodes", "ours"};
  static const char* feature[] = {"random", "most_frequency", "ours"};
  return std::string(node[int(s.node)]) + "," + cluster[int(s.cluster)] + "," + feature[int(s.feature)];
}

/// Parses "node,cluster,feature", e.g. "ours,top_nodes,random". A lone
/// "ours" or "random" applies to all three axes. On the feature axis
/// "random" means random_copy.
inline StrategySpec parse_strategy(const std::string& text) {
  if (text == "ours" || text == "lpgia") return {};
  if (text == "random") return {NodeStrategy::kRandom, ClusterStrategy::kRandom, FeatureStrategy::kRandomCopy};
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
  if (parts.size() != 3) throw ConfigError("strategy must be 'node,cluster,feature', got '" + text + "'");
  StrategySpec s;
  if (parts[0] == "random") s.node = NodeStrategy::kRandom;
  else if (parts[0] == "degree") s.node = NodeStrategy::kDegree;
  else if (parts[0] == "ours") s.node = NodeStrategy::kOurs;
  else throw ConfigError("unknown node strategy '" + parts[0] + "'");
  if (parts[1] == "random") s.cluster = ClusterStrategy::kRandom;
  else if (parts[1] == "top_nodes" || parts[1] == "topnodes") s.cluster = ClusterStrategy::kTopNodes;
  else if (parts[1] == "ours") s.cluster = ClusterStrategy::kOurs;
  else throw ConfigError("unknown cluster strategy '" + parts[1] + "'");
  if (parts[2] == "random" || parts[2] == "random_copy") s.feature = FeatureStrategy::kRandomCopy;
  else if (parts[2] == "most_frequency" || parts[2] == "mostfrequency") s.feature = FeatureStrategy::kMostFrequency;
  else if (parts[2] == "ours") s.feature = FeatureStrategy::kOurs;
  else throw ConfigError("unknown feature strategy '" + parts[2] + "'");
  return s;
}

/// Top-k by node score inside the seed's target-label group, no margin
/// retention step.
inline ClusterResult top_nodes_cluster(const NodeScores& scores, const std::vector<double>& node_score,
                                       VictimPoolState& pool, std::size_t budget) {
  ClusterResult out;
  const NodeId seed = best_available(pool, node_score);
  if (seed < 0 || budget == 0) return out;
  out.pseudo_label = scores.c_b[seed];
  out.victims.push_back(seed);
  pool.take(seed);
  auto it = scores.groups.find(out.pseudo_label);
  if (it == scores.groups.end()) return out;
  std::vector<NodeId> rest;
  for (NodeId j : it->second)
    if (pool.available[j]) rest.push_back(j);
  std::stable_sort(rest.begin(), rest.end(), [&](NodeId a, NodeId b) { return node_score[a] > node_score[b]; });
  for (std::size_t i = 0; i < rest.size() && out.victims.size() < budget; ++i) {
    out.victims.push_back(rest[i]);
    pool.take(rest[i]);
  }
  return out;
}

/// Seed by node score, remaining members drawn uniformly from the group.
inline ClusterResult random_cluster(const NodeScores& scores, const std::vector<double>& node_score,
                                    VictimPoolState& pool, std::size_t budget, std::mt19937_64& rng) {
  ClusterResult out;
  const NodeId seed = best_available(pool, node_score);
  if (seed < 0 || budget == 0) return out;
  out.pseudo_label = scores.c_b[seed];
  out.victims.push_back(seed);
  pool.take(seed);
  auto it = scores.groups.find(out.pseudo_label);
  if (it == scores.groups.end()) return out;
  std::vector<NodeId> rest;
  for (NodeId j : it->second)
    if (pool.available[j]) rest.push_back(j);
  for (NodeId j : sample_without_replacement(std::move(rest), budget - 1, rng)) {
    out.victims.push_back(j);
    pool.take(j);
  }
  return out;
}

/// Copies a uniformly chosen original row; magnitudes are capped at
/// value_cap and, above delta_x nonzeros, the smallest values are dropped.
inline SparseVector random_copy_feature(const GraphBundle& g, std::size_t delta_x, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, g.n() - 1);
  SparseVector row = g.features.row(pick(rng));
  for (auto& [k, x] : row) x = std::clamp(x, -g.value_cap, g.value_cap);
  std::erase_if(row, [](const SparseEntry& e) { return e.second == 0.0; });
  if (row.size() > delta_x) {
    std::stable_sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    row.resize(delta_x);
    std::sort(row.begin(), row.end());
  }
  return row;
}

/// The delta_x indices that are most often nonzero among class-c nodes,
/// valued by the class statistic.
inline SparseVector most_frequency_feature(const GraphBundle& g, const std::vector<Label>& labels, Label c,
                                           const Matrix& x_prime, std::size_t delta_x) {
  std::vector<std::size_t> freq(g.dim(), 0);
  for (std::size_t v = 0; v < g.n(); ++v) {
    if (labels[v] != c) continue;
    auto idx = g.features.row_indices(v);
    auto val = g.features.row_values(v);
    for (std::size_t i = 0; i < idx.size(); ++i)
      if (val[i] != 0.0) ++freq[idx[i]];
  }
  std::vector<std::int32_t> order;
  for (std::size_t k = 0; k < freq.size(); ++k)
    if (freq[k] > 0 && x_prime(c, Eigen::Index(k)) != 0.0) order.push_back(std::int32_t(k));
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return freq[a] > freq[b]; });
  if (order.size() > delta_x) order.resize(delta_x);
  std::sort(order.begin(), order.end());
  SparseVector out;
  for (auto k : order) out.emplace_back(k, x_prime(c, k));
  return out;
}

inline AttackHooks hooks_for(const StrategySpec& spec) {
  AttackHooks h = lpgia_hooks();
  switch (spec.node) {
    case NodeStrategy::kRandom:
      h.node_score = [](const GraphBundle& g, const NodeScores&, std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> s(g.n());
        for (auto& x : s) x = u(rng);
        return s;
      };
      break;
    case NodeStrategy::kDegree:
      h.node_score = [](const GraphBundle& g, const NodeScores&, std::mt19937_64&) {
        std::vector<double> s(g.n(), 0.0);
        for (std::size_t v = 0; v < g.n(); ++v)
          if (g.degree(NodeId(v)) > 0) s[v] = 1.0 / double(g.degree(NodeId(v)));
        return s;
      };
      break;
    case NodeStrategy::kOurs: break;
  }
  switch (spec.cluster) {
    case ClusterStrategy::kRandom:
      h.cluster = [](const AttackContext& ctx, const std::vector<double>& score, VictimPoolState& pool,
                     std::size_t budget, std::mt19937_64& rng) {
        return random_cluster(ctx.scores, score, pool, budget, rng);
      };
      break;
    case ClusterStrategy::kTopNodes:
      h.cluster = [](const AttackContext& ctx, const std::vector<double>& score, VictimPoolState& pool,
                     std::size_t budget, std::mt19937_64&) { return top_nodes_cluster(ctx.scores, score, pool, budget); };
      break;
    case ClusterStrategy::kOurs: break;
  }
  switch (spec.feature) {
    case FeatureStrategy::kRandomCopy:
      h.feature = [](const AttackContext& ctx, const ClusterResult&, std::mt19937_64& rng) {
        return random_copy_feature(ctx.graph, ctx.delta_x, rng);
      };
      break;
    case FeatureStrategy::kMostFrequency:
      h.feature = [](const AttackContext& ctx, const ClusterResult& c, std::mt19937_64&) {
        return most_frequency_feature(ctx.graph, ctx.scores.y, c.pseudo_label, ctx.x_prime.values, ctx.delta_x);
      };
      break;
    case FeatureStrategy::kOurs: break;
  }
  return h;
}

/// Runs one point of the ablation grid under the same budgets as LPGIA.
inline InjectionPlan baseline_attack(const GraphBundle& g, const SurrogateEnsemble& ens, const AttackConfig& cfg,
                                     const StrategySpec& spec) {
  return run_with_hooks(g, ens, cfg, hooks_for(spec));
}

}  // namespace lpgia
