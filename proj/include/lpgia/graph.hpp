#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <queue>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lpgia/common.hpp"

namespace lpgia {

/// Symmetric adjacency in compressed sparse row form. Neighbor lists are
/// sorted; no self-loops, no duplicates.
struct Csr {
  std::vector<std::size_t> offsets{0};
  std::vector<NodeId> neighbors;

  std::size_t num_nodes() const { return offsets.size() - 1; }
  std::size_t num_entries() const { return neighbors.size(); }
  std::size_t degree(NodeId v) const { return offsets[v + 1] - offsets[v]; }
  std::span<const NodeId> adjacent(NodeId v) const {
    return {neighbors.data() + offsets[v], degree(v)};
  }
  bool has_edge(NodeId u, NodeId v) const {
    auto row = adjacent(u);
    return std::binary_search(row.begin(), row.end(), v);
  }
};

/// Builds a symmetric CSR from an undirected edge list (each edge once).
inline Csr build_csr(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
  std::vector<std::size_t> deg(n, 0);
  for (auto [u, v] : edges) {
    ++deg[u];
    ++deg[v];
  }
  Csr g;
  g.offsets.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) g.offsets[v + 1] = g.offsets[v] + deg[v];
  g.neighbors.resize(g.offsets[n]);
  std::vector<std::size_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (auto [u, v] : edges) {
    g.neighbors[cursor[u]++] = v;
    g.neighbors[cursor[v]++] = u;
  }
  for (std::size_t v = 0; v < n; ++v)
    std::sort(g.neighbors.begin() + g.offsets[v], g.neighbors.begin() + g.offsets[v + 1]);
  return g;
}

using SparseEntry = std::pair<std::int32_t, double>;
using SparseVector = std::vector<SparseEntry>;

/// Row-major sparse matrix (features). Column indices strictly increase per row.
struct SparseRows {
  std::size_t dim = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<std::int32_t> indices;
  std::vector<double> values;

  std::size_t num_rows() const { return offsets.size() - 1; }
  std::size_t nnz() const { return indices.size(); }
  std::size_t row_nnz(std::size_t r) const { return offsets[r + 1] - offsets[r]; }
  std::span<const std::int32_t> row_indices(std::size_t r) const {
    return {indices.data() + offsets[r], row_nnz(r)};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values.data() + offsets[r], row_nnz(r)};
  }
  void append_row(const SparseVector& row) {
    for (auto [k, x] : row) {
      indices.push_back(k);
      values.push_back(x);
    }
    offsets.push_back(indices.size());
  }
  SparseVector row(std::size_t r) const {
    SparseVector out;
    auto idx = row_indices(r);
    auto val = row_values(r);
    for (std::size_t i = 0; i < idx.size(); ++i) out.emplace_back(idx[i], val[i]);
    return out;
  }
};

/// Sparse (n x dim) times dense (dim x k).
inline Matrix sparse_times(const SparseRows& x, const Matrix& w) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(x.num_rows()), w.cols());
  for (std::size_t r = 0; r < x.num_rows(); ++r) {
    auto idx = x.row_indices(r);
    auto val = x.row_values(r);
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(r) += val[i] * w.row(idx[i]);
  }
  return out;
}

/// Sparse-transpose (dim x n) times dense (n x k).
inline Matrix sparse_transpose_times(const SparseRows& x, const Matrix& g) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(x.dim), g.cols());
  for (std::size_t r = 0; r < x.num_rows(); ++r) {
    auto idx = x.row_indices(r);
    auto val = x.row_values(r);
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(idx[i]) += val[i] * g.row(r);
  }
  return out;
}

enum class Split : std::uint8_t { kTrain, kVal, kTest, kNone };
enum class FeatureKind : std::uint8_t { kBinary, kContinuous };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kNone: return "none";
  }
  return "none";
}

/// Topology plus features, the common input of forward passes and smoothing.
struct GraphView {
  const Csr* adjacency;
  const SparseRows* features;
  std::size_t num_nodes() const { return adjacency->num_nodes(); }
};

/// Immutable original graph.
struct GraphBundle {
  Csr adjacency;
  SparseRows features;
  std::vector<Label> labels;
  std::vector<Split> split;
  std::size_t num_classes = 0;
  FeatureKind feature_kind = FeatureKind::kContinuous;
  double value_cap = 1.0;

  std::size_t n() const { return adjacency.num_nodes(); }
  std::size_t m() const { return adjacency.num_entries() / 2; }
  std::size_t dim() const { return features.dim; }
  std::size_t degree(NodeId v) const { return adjacency.degree(v); }
  double avg_degree() const { return n() == 0 ? 0.0 : 2.0 * double(m()) / double(n()); }
  GraphView view() const { return {&adjacency, &features}; }
};

/// Throws ValidationError if any structural invariant is broken.
inline void validate(const GraphBundle& g) {
  const std::size_t n = g.n();
  if (g.features.num_rows() != n) throw ValidationError("feature rows != node count");
  if (g.labels.size() != n) throw ValidationError("label count != node count");
  if (g.split.size() != n) throw ValidationError("split count != node count");
  for (std::size_t v = 0; v < n; ++v) {
    auto row = g.adjacency.adjacent(NodeId(v));
    for (std::size_t i = 0; i < row.size(); ++i) {
      NodeId u = row[i];
      if (u < 0 || std::size_t(u) >= n) throw ValidationError("neighbor id out of range");
      if (std::size_t(u) == v) throw ValidationError("self-loop at node " + std::to_string(v));
      if (i > 0 && row[i - 1] >= u) throw ValidationError("duplicate or unsorted neighbor");
      if (!g.adjacency.has_edge(u, NodeId(v)))
        throw ValidationError("asymmetric adjacency at (" + std::to_string(v) + "," +
                              std::to_string(u) + ")");
    }
    if (g.labels[v] < 0 || std::size_t(g.labels[v]) >= g.num_classes)
      throw ValidationError("label out of range at node " + std::to_string(v));
    if (g.split[v] == Split::kNone) throw ValidationError("original node without split tag");
    auto idx = g.features.row_indices(v);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] < 0 || std::size_t(idx[i]) >= g.dim()) throw ValidationError("feature index out of range");
      if (i > 0 && idx[i - 1] >= idx[i]) throw ValidationError("feature indices not increasing");
    }
  }
  if (g.feature_kind == FeatureKind::kBinary)
    for (double x : g.features.values)
      if (x != 1.0) throw ValidationError("binary bundle holds a non-unit feature value");
}

namespace detail {

inline FeatureKind detect_kind(const SparseRows& x) {
  if (x.values.empty()) return FeatureKind::kBinary;
  for (double v : x.values)
    if (v != 1.0) return FeatureKind::kContinuous;
  return FeatureKind::kBinary;
}

// Nearest-rank 99th percentile of nonzero magnitudes.
inline double percentile99(const SparseRows& x) {
  std::vector<double> mags;
  mags.reserve(x.values.size());
  for (double v : x.values)
    if (v != 0.0) mags.push_back(std::abs(v));
  if (mags.empty()) return 0.0;
  std::sort(mags.begin(), mags.end());
  std::size_t rank = static_cast<std::size_t>(std::ceil(0.99 * double(mags.size())));
  return mags[std::max<std::size_t>(rank, 1) - 1];
}

inline void finalize_features(GraphBundle& g) {
  g.feature_kind = detect_kind(g.features);
  g.value_cap = g.feature_kind == FeatureKind::kBinary ? 1.0 : percentile99(g.features);
}

inline std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot open " + p.string());
  return in;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Restricts a bundle to its largest connected component (ties: the one
/// holding the lowest node id). Node order is preserved.
inline GraphBundle largest_component(const GraphBundle& g) {
  const std::size_t n = g.n();
  std::vector<int> comp(n, -1);
  int best = -1;
  std::size_t best_size = 0;
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::size_t size = 0;
    std::queue<NodeId> q;
    q.push(NodeId(s));
    comp[s] = next;
    while (!q.empty()) {
      NodeId v = q.front();
      q.pop();
      ++size;
      for (NodeId u : g.adjacency.adjacent(v))
        if (comp[u] < 0) {
          comp[u] = next;
          q.push(u);
        }
    }
    if (size > best_size) {
      best_size = size;
      best = next;
    }
    ++next;
  }
  if (best_size == n) return g;

  std::vector<NodeId> remap(n, -1);
  NodeId k = 0;
  for (std::size_t v = 0; v < n; ++v)
    if (comp[v] == best) remap[v] = k++;

  GraphBundle out;
  out.num_classes = g.num_classes;
  out.features.dim = g.dim();
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t v = 0; v < n; ++v) {
    if (remap[v] < 0) continue;
    for (NodeId u : g.adjacency.adjacent(NodeId(v)))
      if (std::size_t(u) > v) edges.emplace_back(remap[v], remap[u]);
    out.features.append_row(g.features.row(v));
    out.labels.push_back(g.labels[v]);
    out.split.push_back(g.split[v]);
  }
  out.adjacency = build_csr(std::size_t(k), edges);
  detail::finalize_features(out);
  return out;
}

struct LoadOptions {
  bool largest_component = true;
};

/// Reads edges.txt, features.txt, labels.txt and splits.txt from `dir`.
///
/// edges.txt normally lists each undirected edge once. A listing that carries
/// both orientations of any edge is read as a directed listing and must then
/// be symmetric.
inline GraphBundle load_bundle(const std::filesystem::path& dir, LoadOptions opts = {}) {
  namespace fs = std::filesystem;
  GraphBundle g;

  // edges.txt
  std::size_t n = 0;
  std::vector<std::pair<NodeId, NodeId>> arcs;
  {
    const fs::path p = dir / "edges.txt";
    auto in = detail::open_input(p);
    std::string line;
    std::size_t lineno = 1;
    std::size_t m = 0;
    if (!std::getline(in, line)) throw ParseError(p.string(), 1, "missing header");
    {
      std::istringstream ss(line);
      std::string extra;
      if (!(ss >> n >> m) || (ss >> extra)) throw ParseError(p.string(), 1, "expected 'n m'");
    }
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream ss(line);
      long long u, v;
      std::string extra;
      if (!(ss >> u >> v) || (ss >> extra)) throw ParseError(p.string(), lineno, "expected 'u v'");
      if (u < 0 || v < 0 || std::size_t(u) >= n || std::size_t(v) >= n)
        throw ParseError(p.string(), lineno, "node id out of range");
      if (u == v) throw ValidationError("self-loop at node " + std::to_string(u));
      arcs.emplace_back(NodeId(u), NodeId(v));
    }
    if (arcs.size() != m)
      throw ValidationError("edges.txt header announces " + std::to_string(m) + " edges, found " +
                            std::to_string(arcs.size()));
  }
  {
    std::vector<std::pair<NodeId, NodeId>> sorted = arcs;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ValidationError("duplicate edge in edges.txt");
    bool directed_listing = false;
    for (auto [u, v] : arcs)
      if (std::binary_search(sorted.begin(), sorted.end(), std::make_pair(v, u))) {
        directed_listing = true;
        break;
      }
    std::vector<std::pair<NodeId, NodeId>> edges;
    if (directed_listing) {
      for (auto [u, v] : arcs) {
        if (!std::binary_search(sorted.begin(), sorted.end(), std::make_pair(v, u)))
          throw ValidationError("asymmetric edge list: (" + std::to_string(u) + "," +
                                std::to_string(v) + ") has no reverse");
        if (u < v) edges.emplace_back(u, v);
      }
    } else {
      for (auto [u, v] : arcs) edges.emplace_back(std::min(u, v), std::max(u, v));
    }
    g.adjacency = build_csr(n, edges);
  }

  // features.txt
  {
    const fs::path p = dir / "features.txt";
    auto in = detail::open_input(p);
    std::string line;
    std::size_t rows = 0, dim = 0;
    if (!std::getline(in, line)) throw ParseError(p.string(), 1, "missing header");
    {
      std::istringstream ss(line);
      if (!(ss >> rows >> dim)) throw ParseError(p.string(), 1, "expected 'n dim'");
    }
    if (rows != n) throw ValidationError("features.txt row count differs from edges.txt n");
    g.features.dim = dim;
    std::size_t lineno = 1;
    for (std::size_t r = 0; r < rows; ++r) {
      ++lineno;
      if (!std::getline(in, line)) throw ParseError(p.string(), lineno, "missing feature row");
      std::istringstream ss(line);
      std::string tok;
      SparseVector row;
      while (ss >> tok) {
        auto colon = tok.find(':');
        if (colon == std::string::npos) throw ParseError(p.string(), lineno, "expected idx:value");
        char* end = nullptr;
        long idx = std::strtol(tok.c_str(), &end, 10);
        if (end != tok.c_str() + colon) throw ParseError(p.string(), lineno, "bad index '" + tok + "'");
        const char* vstart = tok.c_str() + colon + 1;
        double val = std::strtod(vstart, &end);
        if (end == vstart || *end != '\0') throw ParseError(p.string(), lineno, "bad value '" + tok + "'");
        if (idx < 0 || std::size_t(idx) >= dim) throw ParseError(p.string(), lineno, "index out of range");
        if (!row.empty() && row.back().first >= idx)
          throw ParseError(p.string(), lineno, "indices must strictly increase");
        row.emplace_back(std::int32_t(idx), val);
      }
      g.features.append_row(row);
    }
  }

  // labels.txt
  {
    const fs::path p = dir / "labels.txt";
    auto in = detail::open_input(p);
    std::string line;
    std::size_t lineno = 0;
    Label max_label = -1;
    while (g.labels.size() < n && std::getline(in, line)) {
      ++lineno;
      std::istringstream ss(line);
      long long c;
      std::string extra;
      if (!(ss >> c) || (ss >> extra)) throw ParseError(p.string(), lineno, "expected an integer label");
      if (c < 0 || c > 1'000'000) throw ValidationError("label out of range at line " + std::to_string(lineno));
      g.labels.push_back(Label(c));
      max_label = std::max(max_label, Label(c));
    }
    if (g.labels.size() != n) throw ParseError(p.string(), lineno + 1, "fewer labels than nodes");
    g.num_classes = std::size_t(max_label + 1);
  }

  // splits.txt
  {
    const fs::path p = dir / "splits.txt";
    auto in = detail::open_input(p);
    std::string line;
    std::size_t lineno = 0;
    while (g.split.size() < n && std::getline(in, line)) {
      ++lineno;
      if (line == "train") g.split.push_back(Split::kTrain);
      else if (line == "val") g.split.push_back(Split::kVal);
      else if (line == "test") g.split.push_back(Split::kTest);
      else throw ParseError(p.string(), lineno, "expected train|val|test");
    }
    if (g.split.size() != n) throw ParseError(p.string(), lineno + 1, "fewer split tags than nodes");
  }

  detail::finalize_features(g);
  validate(g);
  if (opts.largest_component) g = largest_component(g);
  return g;
}

/// Writes a bundle in the same four-file layout load_bundle reads.
inline void save_bundle(const GraphBundle& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "edges.txt");
    out << g.n() << ' ' << g.m() << '\n';
    for (std::size_t v = 0; v < g.n(); ++v)
      for (NodeId u : g.adjacency.adjacent(NodeId(v)))
        if (std::size_t(u) > v) out << v << ' ' << u << '\n';
  }
  {
    std::ofstream out(dir / "features.txt");
    out << g.n() << ' ' << g.dim() << '\n';
    for (std::size_t v = 0; v < g.n(); ++v) {
      auto idx = g.features.row_indices(v);
      auto val = g.features.row_values(v);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i) out << ' ';
        out << idx[i] << ':' << detail::format_double(val[i]);
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.txt");
    for (Label c : g.labels) out << c << '\n';
  }
  {
    std::ofstream out(dir / "splits.txt");
    for (Split s : g.split) out << to_string(s) << '\n';
  }
}

/// Fraction of edges whose endpoints share a class label.
inline double edge_homophily(const GraphBundle& g) {
  std::size_t same = 0, total = 0;
  for (std::size_t v = 0; v < g.n(); ++v)
    for (NodeId u : g.adjacency.adjacent(NodeId(v))) {
      ++total;
      same += g.labels[u] == g.labels[v];
    }
  return total == 0 ? 0.0 : double(same) / double(total);
}

struct CsbmParams {
  std::size_t n = 300;
  std::size_t classes = 3;
  std::size_t dim = 30;
  double p_in = 0.05;
  double p_out = 0.005;
  double mu = 1.5;
  std::uint64_t seed = 0;
  /// Feature entries at or below this value are dropped (sparsification).
  double threshold = 1.0;
  double train_fraction = 0.1;
  double val_fraction = 0.1;
};

/// Contextual stochastic block model.
///
/// Labels are balanced (v mod L, shuffled). Each class owns a contiguous block
/// of dim/L feature indices; entry (v, k) is N(0,1) plus mu when k lies in the
/// block of v's class, and is kept only when it exceeds `threshold`.
inline GraphBundle gen_csbm(const CsbmParams& p) {
  if (p.classes < 2) throw ConfigError("cSBM needs at least 2 classes");
  if (p.n < p.classes) throw ConfigError("cSBM needs n >= classes");
  if (p.dim < p.classes) throw ConfigError("cSBM needs dim >= classes");
  if (!(p.p_out >= 0.0) || !(p.p_in > p.p_out) || p.p_in > 1.0)
    throw ConfigError("cSBM requires 1 >= p_in > p_out >= 0");

  std::mt19937_64 rng(p.seed);
  GraphBundle g;
  g.num_classes = p.classes;

  g.labels.resize(p.n);
  for (std::size_t v = 0; v < p.n; ++v) g.labels[v] = Label(v % p.classes);
  std::shuffle(g.labels.begin(), g.labels.end(), rng);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t u = 0; u < p.n; ++u)
    for (std::size_t v = u + 1; v < p.n; ++v) {
      double prob = g.labels[u] == g.labels[v] ? p.p_in : p.p_out;
      if (unit(rng) < prob) edges.emplace_back(NodeId(u), NodeId(v));
    }
  g.adjacency = build_csr(p.n, edges);

  const std::size_t block = p.dim / p.classes;
  std::normal_distribution<double> noise(0.0, 1.0);
  g.features.dim = p.dim;
  for (std::size_t v = 0; v < p.n; ++v) {
    SparseVector row;
    const std::size_t lo = std::size_t(g.labels[v]) * block;
    for (std::size_t k = 0; k < p.dim; ++k) {
      double x = noise(rng) + ((k >= lo && k < lo + block) ? p.mu : 0.0);
      if (x > p.threshold) row.emplace_back(std::int32_t(k), x);
    }
    g.features.append_row(row);
  }

  std::vector<std::size_t> order(p.n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = std::max<std::size_t>(1, std::size_t(p.train_fraction * double(p.n)));
  const auto n_val = std::size_t(p.val_fraction * double(p.n));
  g.split.assign(p.n, Split::kTest);
  for (std::size_t i = 0; i < p.n; ++i) {
    if (i < n_train) g.split[order[i]] = Split::kTrain;
    else if (i < n_train + n_val) g.split[order[i]] = Split::kVal;
  }

  detail::finalize_features(g);
  return g;
}

}  // namespace lpgia
