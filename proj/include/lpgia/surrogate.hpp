#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lpgia/graph.hpp"
#include "lpgia/perturbed.hpp"
#include "lpgia/propagation.hpp"

namespace lpgia {

enum class Variant : std::uint8_t { kGcn, kSgc };

inline const char* to_string(Variant v) { return v == Variant::kGcn ? "gcn" : "sgc"; }

inline Variant parse_variant(const std::string& s) {
  if (s == "gcn") return Variant::kGcn;
  if (s == "sgc") return Variant::kSgc;
  throw ConfigError("unknown model variant '" + s + "'");
}

/// Two-layer GCN weights. The SGC variant shares the shapes but drops the
/// hidden nonlinearity, so its effective weight is W1 * W2.
struct GcnParams {
  Matrix w1;  // dim x hidden
  Matrix w2;  // hidden x L
  Variant variant = Variant::kGcn;

  std::size_t dim() const { return std::size_t(w1.rows()); }
  std::size_t hidden() const { return std::size_t(w1.cols()); }
  std::size_t classes() const { return std::size_t(w2.cols()); }
  bool operator==(const GcnParams&) const = default;
};

/// Symmetric-normalized propagation with self-loops:
/// out = D~^-1/2 (A + I) D~^-1/2 h.
inline Matrix normalized_propagate(const Csr& adj, const Matrix& h) {
  const std::size_t n = adj.num_nodes();
  std::vector<double> s(n);
  for (std::size_t v = 0; v < n; ++v) s[v] = 1.0 / std::sqrt(double(adj.degree(NodeId(v)) + 1));
  Matrix out(h.rows(), h.cols());
  for (std::size_t v = 0; v < n; ++v) {
    auto row = out.row(Eigen::Index(v));
    row = s[v] * h.row(Eigen::Index(v));
    for (NodeId u : adj.adjacent(NodeId(v))) row += s[u] * h.row(u);
    row *= s[v];
  }
  return out;
}

inline void softmax_rows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

namespace detail {

struct ForwardCache {
  Matrix pre_hidden;  // A~ X W1
  Matrix hidden;      // sigma(pre_hidden)
  Matrix probs;       // softmax(A~ H W2)
};

inline ForwardCache forward_cache(const GcnParams& p, const GraphView& g) {
  if (g.features->dim != p.dim()) throw ValidationError("feature dim does not match model");
  ForwardCache c;
  c.pre_hidden = normalized_propagate(*g.adjacency, sparse_times(*g.features, p.w1));
  c.hidden = p.variant == Variant::kGcn ? Matrix(c.pre_hidden.cwiseMax(0.0)) : c.pre_hidden;
  c.probs = normalized_propagate(*g.adjacency, c.hidden * p.w2);
  softmax_rows(c.probs);
  return c;
}

}  // namespace detail

/// softmax(A~ sigma(A~ X W1) W2); rows are the class distributions.
inline ProbMatrix gcn_forward(const GcnParams& p, const GraphView& g) {
  auto c = detail::forward_cache(p, g);
  if (!c.probs.allFinite()) throw TrainingError("non-finite activations in forward pass");
  return {std::move(c.probs), ProbKind::kRawSoftmax};
}
inline ProbMatrix gcn_forward(const GcnParams& p, const GraphBundle& g) { return gcn_forward(p, g.view()); }
inline ProbMatrix gcn_forward(const GcnParams& p, const PerturbedGraph& g) { return gcn_forward(p, g.view()); }

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad_w1;
  Matrix grad_w2;
};

/// Summed cross-entropy over `train_nodes` plus (weight_decay / 2) * ||W||^2,
/// with gradients by hand-derived backprop.
inline LossAndGrad loss_and_grad(const GcnParams& p, const GraphView& g, const std::vector<Label>& labels,
                                 const std::vector<NodeId>& train_nodes, double weight_decay) {
  auto c = detail::forward_cache(p, g);
  LossAndGrad out;
  Matrix g_logits = Matrix::Zero(c.probs.rows(), c.probs.cols());
  for (NodeId v : train_nodes) {
    out.loss -= std::log(std::max(c.probs(v, labels[v]), 1e-300));
    g_logits.row(v) = c.probs.row(v);
    g_logits(v, labels[v]) -= 1.0;
  }
  out.loss += 0.5 * weight_decay * (p.w1.squaredNorm() + p.w2.squaredNorm());

  Matrix g_hw = normalized_propagate(*g.adjacency, g_logits);  // A~ is symmetric
  out.grad_w2 = c.hidden.transpose() * g_hw + weight_decay * p.w2;
  Matrix g_hidden = g_hw * p.w2.transpose();
  if (p.variant == Variant::kGcn)
    g_hidden = (c.pre_hidden.array() > 0.0).select(g_hidden, 0.0);
  Matrix g_xw = normalized_propagate(*g.adjacency, g_hidden);
  out.grad_w1 = sparse_transpose_times(*g.features, g_xw) + weight_decay * p.w1;
  return out;
}

struct TrainOptions {
  std::size_t hidden = 16;
  std::size_t epochs = 200;
  double lr = 0.01;
  double weight_decay = 5e-4;
  std::size_t patience = 30;
};

/// Glorot-uniform initialization.
inline GcnParams init_params(std::size_t dim, std::size_t hidden, std::size_t classes, Variant variant,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto glorot = [&](std::size_t rows, std::size_t cols) {
    const double a = std::sqrt(6.0 / double(rows + cols));
    std::uniform_real_distribution<double> u(-a, a);
    Matrix w(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    return w;
  };
  GcnParams p;
  p.w1 = glorot(dim, hidden);
  p.w2 = glorot(hidden, classes);
  p.variant = variant;
  return p;
}

/// Plain gradient descent with weight decay on the train split; keeps the
/// parameters with the best validation accuracy and stops after `patience`
/// epochs without improvement. Nodes tagged Split::kNone never enter the loss.
inline GcnParams train(const GraphView& g, const std::vector<Label>& labels, const std::vector<Split>& split,
                       std::size_t classes, Variant variant, const TrainOptions& opts, std::uint64_t seed) {
  std::vector<NodeId> train_nodes, val_nodes;
  for (std::size_t v = 0; v < split.size(); ++v) {
    if (split[v] == Split::kTrain) train_nodes.push_back(NodeId(v));
    if (split[v] == Split::kVal) val_nodes.push_back(NodeId(v));
  }
  if (train_nodes.empty()) throw TrainingError("train split is empty");

  GcnParams p = init_params(g.features->dim, opts.hidden, classes, variant, seed);
  GcnParams best = p;
  double best_val = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    auto lg = loss_and_grad(p, g, labels, train_nodes, opts.weight_decay);
    if (!std::isfinite(lg.loss) || !lg.grad_w1.allFinite() || !lg.grad_w2.allFinite()) {
      std::ostringstream msg;
      msg << "training diverged at epoch " << epoch << " (seed " << seed << ", lr " << opts.lr << ")";
      throw TrainingError(msg.str());
    }
    p.w1 -= opts.lr * lg.grad_w1;
    p.w2 -= opts.lr * lg.grad_w2;

    if (val_nodes.empty()) {
      best = p;
      continue;
    }
    auto probs = detail::forward_cache(p, g).probs;
    std::size_t hits = 0;
    for (NodeId v : val_nodes) hits += argmax_excluding(probs.row(v)) == labels[v];
    const double acc = double(hits) / double(val_nodes.size());
    if (acc > best_val) {
      best_val = acc;
      best = p;
      since_best = 0;
    } else if (++since_best >= opts.patience) {
      break;
    }
  }
  return best;
}

inline GcnParams train(const GraphBundle& g, Variant variant, const TrainOptions& opts, std::uint64_t seed) {
  return train(g.view(), g.labels, g.split, g.num_classes, variant, opts, seed);
}

/// Linearized weight W1 * W2 (dim x L); the hidden nonlinearity is dropped.
inline Matrix linearize(const GcnParams& p) { return p.w1 * p.w2; }

struct SurrogateEnsemble {
  std::vector<GcnParams> members;
  Matrix w_bar;   // mean of member linearizations
  ProbMatrix z0;  // member 0 on the clean graph
};

/// Trains R members with seeds derived from `seed`; members are trained in
/// parallel under the LPGIA_THREADS cap.
inline SurrogateEnsemble build_ensemble(const GraphBundle& g, std::size_t r, std::uint64_t seed,
                                        const TrainOptions& opts = {}, Variant variant = Variant::kGcn) {
  if (r == 0) throw ConfigError("ensemble size must be at least 1");
  SurrogateEnsemble e;
  e.members.resize(r);
  parallel_for(r, [&](std::size_t i) { e.members[i] = train(g, variant, opts, derive_seed(seed, 100 + i)); });
  e.w_bar = Matrix::Zero(Eigen::Index(g.dim()), Eigen::Index(g.num_classes));
  for (const auto& m : e.members) e.w_bar += linearize(m);
  e.w_bar /= double(r);
  e.z0 = gcn_forward(e.members.front(), g);
  return e;
}

// Checkpoint format (text, version 1):
//   lpgia-checkpoint 1
//   variant <gcn|sgc>
//   dim <D> hidden <H> classes <L>
//   W1 then D lines of H values, W2 then H lines of L values
// Values are printed with %.17g and reload bit-exactly.
inline void save_checkpoint(const GcnParams& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << "lpgia-checkpoint 1\n"
      << "variant " << to_string(p.variant) << '\n'
      << "dim " << p.dim() << " hidden " << p.hidden() << " classes " << p.classes() << '\n';
  auto dump = [&](const char* name, const Matrix& m) {
    out << name << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << detail::format_double(m(i, j));
      out << '\n';
    }
  };
  dump("W1", p.w1);
  dump("W2", p.w2);
}

inline GcnParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string tag, variant, name;
  int version = 0;
  std::size_t dim = 0, hidden = 0, classes = 0;
  std::string kd, kh, kc;
  if (!(in >> tag >> version) || tag != "lpgia-checkpoint" || version != 1)
    throw ParseError(path.string(), 1, "not a version-1 checkpoint");
  if (!(in >> tag >> variant) || tag != "variant") throw ParseError(path.string(), 2, "expected variant");
  if (!(in >> kd >> dim >> kh >> hidden >> kc >> classes) || kd != "dim" || kh != "hidden" || kc != "classes")
    throw ParseError(path.string(), 3, "expected shape line");
  GcnParams p;
  p.variant = parse_variant(variant);
  auto read = [&](const char* expected, std::size_t rows, std::size_t cols, std::size_t line) {
    if (!(in >> name) || name != expected) throw ParseError(path.string(), line, std::string("expected ") + expected);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i)
      if (!(in >> m.data()[i])) throw ParseError(path.string(), line + 1 + std::size_t(i) / cols, "bad value");
    return m;
  };
  p.w1 = read("W1", dim, hidden, 4);
  p.w2 = read("W2", hidden, classes, 5 + dim);
  return p;
}

}  // namespace lpgia
