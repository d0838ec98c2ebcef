#pragma once

#include <vector>

#include "lpgia/graph.hpp"
#include "lpgia/plan.hpp"

namespace lpgia {

/// Original graph plus injected nodes. Adjacency is the block matrix
/// [[A, B], [B^T, 0]]; features stack X over X_fake. The base bundle must
/// outlive this object.
class PerturbedGraph {
 public:
  PerturbedGraph(const GraphBundle& base, std::vector<std::pair<NodeId, NodeId>> fake_edges,
                 SparseRows fake_features)
      : base_(&base), fake_edges_(std::move(fake_edges)), fake_features_(std::move(fake_features)) {
    const std::size_t n = base.n();
    const std::size_t total = n + fake_count();
    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(base.m() + fake_edges_.size());
    for (std::size_t v = 0; v < n; ++v)
      for (NodeId u : base.adjacency.adjacent(NodeId(v)))
        if (std::size_t(u) > v) edges.emplace_back(NodeId(v), u);
    for (auto [fake, victim] : fake_edges_) edges.emplace_back(victim, fake);
    adjacency_ = build_csr(total, edges);

    features_ = base.features;
    for (std::size_t u = 0; u < fake_count(); ++u) features_.append_row(fake_features_.row(u));

    split_ = base.split;
    split_.resize(total, Split::kNone);
  }

  const GraphBundle& base() const { return *base_; }
  std::size_t fake_count() const { return fake_features_.num_rows(); }
  std::size_t num_nodes() const { return adjacency_.num_nodes(); }
  /// (fake_id, original_id) pairs: the B block.
  const std::vector<std::pair<NodeId, NodeId>>& fake_edges() const { return fake_edges_; }
  const SparseRows& fake_features() const { return fake_features_; }
  const Csr& adjacency() const { return adjacency_; }
  const SparseRows& features() const { return features_; }
  /// Original split tags followed by Split::kNone for every fake node.
  const std::vector<Split>& split() const { return split_; }
  GraphView view() const { return {&adjacency_, &features_}; }

 private:
  const GraphBundle* base_;
  std::vector<std::pair<NodeId, NodeId>> fake_edges_;
  SparseRows fake_features_;
  Csr adjacency_;
  SparseRows features_;
  std::vector<Split> split_;
};

/// Applies a plan to its base graph. Rejects fake-fake edges, victims used
/// by more than one fake node, and malformed feature rows.
inline PerturbedGraph materialize(const InjectionPlan& plan, const GraphBundle& g) {
  const std::size_t n = g.n();
  const std::size_t nf = plan.fakes.size();
  if (plan.base_nodes != n) throw ValidationError("plan was built for a different graph size");
  std::vector<char> used(n, 0);
  std::vector<std::pair<NodeId, NodeId>> edges;
  SparseRows feats;
  feats.dim = g.dim();
  for (std::size_t u = 0; u < nf; ++u) {
    const auto& f = plan.fakes[u];
    const auto fake_id = NodeId(n + u);
    for (NodeId v : f.victims) {
      if (v < 0) throw ValidationError("negative victim id");
      if (std::size_t(v) >= n) {
        if (std::size_t(v) < n + nf) throw ValidationError("fake-fake edge is not allowed");
        throw ValidationError("victim id out of range");
      }
      if (used[v]) throw ValidationError("node " + std::to_string(v) + " is a victim of two fake nodes");
      used[v] = 1;
      edges.emplace_back(fake_id, v);
    }
    for (std::size_t i = 0; i < f.feature.size(); ++i) {
      auto k = f.feature[i].first;
      if (k < 0 || std::size_t(k) >= g.dim()) throw ValidationError("fake feature index out of range");
      if (i > 0 && f.feature[i - 1].first >= k) throw ValidationError("fake feature indices not increasing");
    }
    feats.append_row(f.feature);
  }
  return PerturbedGraph(g, std::move(edges), std::move(feats));
}

}  // namespace lpgia
