#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "lpgia/graph.hpp"
#include "lpgia/propagation.hpp"

namespace lpgia {

/// Second choice under `z`: argmax over c != y[v], ties to the lowest id.
inline std::vector<Label> target_labels(const ProbMatrix& z, const std::vector<Label>& y) {
  if (z.classes() < 2) throw ConfigError("target labels need at least 2 classes");
  std::vector<Label> out(y.size());
  for (std::size_t v = 0; v < y.size(); ++v) out[v] = argmax_excluding(z.row(v), y[v]);
  return out;
}

/// Fraction of v's neighbors whose target label equals v's. Degree-0 nodes
/// score 0 (callers exclude them from the victim pool).
inline std::vector<double> similarity(const Csr& adj, const std::vector<Label>& c_b) {
  std::vector<double> h(adj.num_nodes(), 0.0);
  for (std::size_t v = 0; v < h.size(); ++v) {
    const auto d = adj.degree(NodeId(v));
    if (d == 0) continue;
    std::size_t same = 0;
    for (NodeId u : adj.adjacent(NodeId(v))) same += c_b[u] == c_b[v];
    h[v] = double(same) / double(d);
  }
  return h;
}

inline double mean_similarity(const Csr& adj, const std::vector<Label>& c_b) {
  auto h = similarity(adj, c_b);
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t v = 0; v < h.size(); ++v)
    if (adj.degree(NodeId(v)) > 0) {
      total += h[v];
      ++counted;
    }
  return counted == 0 ? 0.0 : total / double(counted);
}

/// s1: |{j in N(v) : y_j = y_v}| / (d^2 + d). How much one injected neighbor
/// dilutes the share of v's own predicted label.
inline std::vector<double> vulnerability_score(const Csr& adj, const std::vector<Label>& y) {
  std::vector<double> s(adj.num_nodes(), 0.0);
  for (std::size_t v = 0; v < s.size(); ++v) {
    const double d = double(adj.degree(NodeId(v)));
    if (d == 0.0) continue;
    std::size_t agree = 0;
    for (NodeId u : adj.adjacent(NodeId(v))) agree += y[u] == y[v];
    s[v] = double(agree) / (d * d + d);
  }
  return s;
}

/// s2: (|{j : c_b[j] = c_b[v]}| - |{j : y[j] = c_b[v]}|) / d over neighbors j.
inline std::vector<double> topology_score(const Csr& adj, const std::vector<Label>& y,
                                          const std::vector<Label>& c_b) {
  std::vector<double> s(adj.num_nodes(), 0.0);
  for (std::size_t v = 0; v < s.size(); ++v) {
    const auto d = adj.degree(NodeId(v));
    if (d == 0) continue;
    long diff = 0;
    for (NodeId u : adj.adjacent(NodeId(v))) diff += long(c_b[u] == c_b[v]) - long(y[u] == c_b[v]);
    s[v] = double(diff) / double(d);
  }
  return s;
}

inline std::vector<double> propagation_score(const std::vector<double>& s1, const std::vector<double>& s2,
                                             double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  std::vector<double> s(s1.size());
  for (std::size_t v = 0; v < s.size(); ++v) s[v] = beta * s1[v] + (1.0 - beta) * s2[v];
  return s;
}

struct NodeScores {
  std::vector<Label> y;
  std::vector<Label> c_b;
  std::vector<double> h, s1, s2, s_h;
  /// target label -> candidate nodes in increasing id order
  std::map<Label, std::vector<NodeId>> groups;
};

/// Scores every node of `adj` and groups the candidates by target label.
/// `y` comes from the raw prediction; target labels from `z_target`
/// (normally the smoothed prediction).
inline NodeScores score_nodes(const Csr& adj, const ProbMatrix& z_raw, const ProbMatrix& z_target,
                              const std::vector<NodeId>& candidates, double beta) {
  NodeScores s;
  s.y = argmax_rows(z_raw);
  s.c_b = target_labels(z_target, s.y);
  s.h = similarity(adj, s.c_b);
  s.s1 = vulnerability_score(adj, s.y);
  s.s2 = topology_score(adj, s.y, s.c_b);
  s.s_h = propagation_score(s.s1, s.s2, beta);
  for (NodeId v : candidates) s.groups[s.c_b[v]].push_back(v);
  return s;
}

/// CSV dump: node,y,c_b,h,s1,s2,s_h
inline void write_scores_csv(const NodeScores& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << "node,y,c_b,h,s1,s2,s_h\n";
  for (std::size_t v = 0; v < s.y.size(); ++v)
    out << v << ',' << s.y[v] << ',' << s.c_b[v] << ',' << detail::format_double(s.h[v]) << ','
        << detail::format_double(s.s1[v]) << ',' << detail::format_double(s.s2[v]) << ','
        << detail::format_double(s.s_h[v]) << '\n';
}

}  // namespace lpgia
