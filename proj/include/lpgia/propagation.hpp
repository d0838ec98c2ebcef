#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "lpgia/graph.hpp"

namespace lpgia {

enum class ProbKind : std::uint8_t { kRawSoftmax, kSmoothed, kOneHot };

/// One probability-like row per node, L columns.
struct ProbMatrix {
  Matrix values;
  ProbKind kind = ProbKind::kRawSoftmax;

  std::size_t rows() const { return std::size_t(values.rows()); }
  std::size_t classes() const { return std::size_t(values.cols()); }
  auto row(std::size_t i) const { return values.row(Eigen::Index(i)); }
};

inline std::vector<Label> argmax_rows(const ProbMatrix& z) {
  std::vector<Label> out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) out[i] = argmax_excluding(z.row(i));
  return out;
}

inline ProbMatrix one_hot(const std::vector<Label>& labels, std::size_t classes) {
  ProbMatrix z{Matrix::Zero(Eigen::Index(labels.size()), Eigen::Index(classes)), ProbKind::kOneHot};
  for (std::size_t i = 0; i < labels.size(); ++i) z.values(Eigen::Index(i), labels[i]) = 1.0;
  return z;
}

struct SmoothOptions {
  double alpha = 0.9;
  std::size_t max_iters = 50;
  double tol = 1e-8;
};

/// Label-propagation smoothing Z <- alpha * D^-1/2 A D^-1/2 Z + (1 - alpha) Z0,
/// iterated synchronously from Z0 until the max-abs change drops below tol or
/// max_iters is reached. A carries no self-loops. Isolated nodes keep their Z0
/// row.
inline ProbMatrix smooth(const Csr& adj, const ProbMatrix& z0, const SmoothOptions& opts = {}) {
  if (!(opts.alpha >= 0.0) || opts.alpha >= 1.0) throw ConfigError("smoothing alpha must lie in [0, 1)");
  const std::size_t n = adj.num_nodes();
  if (z0.rows() != n) throw ValidationError("prediction rows do not match graph size");

  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t v = 0; v < n; ++v)
    if (adj.degree(NodeId(v)) > 0) inv_sqrt[v] = 1.0 / std::sqrt(double(adj.degree(NodeId(v))));

  Matrix cur = z0.values;
  Matrix next(cur.rows(), cur.cols());
  for (std::size_t t = 0; t < opts.max_iters && opts.alpha > 0.0; ++t) {
    double change = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      auto out = next.row(Eigen::Index(v));
      if (inv_sqrt[v] == 0.0) {
        out = z0.values.row(Eigen::Index(v));
        continue;
      }
      out.setZero();
      for (NodeId u : adj.adjacent(NodeId(v))) out += inv_sqrt[u] * cur.row(u);
      out = opts.alpha * inv_sqrt[v] * out + (1.0 - opts.alpha) * z0.values.row(Eigen::Index(v));
      change = std::max(change, (out - cur.row(Eigen::Index(v))).cwiseAbs().maxCoeff());
    }
    cur.swap(next);
    if (change < opts.tol) break;
  }
  return {std::move(cur), ProbKind::kSmoothed};
}

/// Hypothetical fake neighbor of a victim: its distribution and degree.
struct FakeNeighbor {
  Vector dist;
  std::size_t degree = 1;
};

/// One propagation step for a single node. With a fake neighbor, the victim's
/// degree is bumped to d_i + 1 in every neighbor term and the fake
/// contributes alpha * z_u / (sqrt(d_i + 1) sqrt(d_u)). Without one this is
/// the plain smoothing row update.
inline Vector injection_step(const Csr& adj, const ProbMatrix& z, const ProbMatrix& z0, NodeId victim,
                             const std::optional<FakeNeighbor>& fake, double alpha) {
  const std::size_t d = adj.degree(victim);
  const double di = double(d + (fake ? 1 : 0));
  Vector out = Vector::Zero(Eigen::Index(z.classes()));
  if (di == 0.0) return z0.row(std::size_t(victim)).transpose();
  for (NodeId j : adj.adjacent(victim))
    out += z.row(std::size_t(j)).transpose() / std::sqrt(double(adj.degree(j)));
  if (fake) {
    if (std::size_t(fake->dist.size()) != z.classes()) throw ValidationError("fake distribution has wrong length");
    if (fake->degree == 0) throw ValidationError("fake degree must be positive");
    out += fake->dist / std::sqrt(double(fake->degree));
  }
  return alpha * out / std::sqrt(di) + (1.0 - alpha) * z0.row(std::size_t(victim)).transpose();
}

inline Vector simulate_injection_step(const Csr& adj, const ProbMatrix& z, const ProbMatrix& z0, NodeId victim,
                                      const Vector& fake_dist, std::size_t fake_degree, double alpha) {
  return injection_step(adj, z, z0, victim, FakeNeighbor{fake_dist, fake_degree}, alpha);
}

/// Synchronous majority relabeling: each node takes the most frequent label
/// among its neighbors (ties to the lowest label id). Isolated nodes keep
/// their label.
inline std::vector<Label> hard_label_prop(const Csr& adj, std::vector<Label> y, std::size_t rounds) {
  Label max_label = 0;
  for (Label c : y) max_label = std::max(max_label, c);
  std::vector<std::size_t> count(std::size_t(max_label) + 1);
  std::vector<Label> next(y.size());
  for (std::size_t t = 0; t < rounds; ++t) {
    for (std::size_t v = 0; v < y.size(); ++v) {
      if (adj.degree(NodeId(v)) == 0) {
        next[v] = y[v];
        continue;
      }
      std::fill(count.begin(), count.end(), 0);
      for (NodeId u : adj.adjacent(NodeId(v))) ++count[y[u]];
      next[v] = Label(std::max_element(count.begin(), count.end()) - count.begin());
    }
    if (next == y) break;
    y.swap(next);
  }
  return y;
}

}  // namespace lpgia
