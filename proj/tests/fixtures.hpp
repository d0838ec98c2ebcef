#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "lpgia/graph.hpp"

namespace fixture {

using namespace lpgia;

/// Builds a bundle in memory. Every node is test-split unless `split` is given.
inline GraphBundle bundle(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges,
                          std::vector<Label> labels, std::size_t dim = 1, std::vector<SparseVector> rows = {},
                          std::vector<Split> split = {}) {
  GraphBundle g;
  g.adjacency = build_csr(n, edges);
  g.features.dim = dim;
  rows.resize(n);
  for (const auto& r : rows) g.features.append_row(r);
  Label top = 0;
  for (Label c : labels) top = std::max(top, c);
  g.labels = std::move(labels);
  g.num_classes = std::size_t(top + 1);
  g.split = split.empty() ? std::vector<Split>(n, Split::kTest) : std::move(split);
  detail::finalize_features(g);
  return g;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("lpgia-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Small cSBM used wherever a realistic but quick graph is needed.
inline GraphBundle small_csbm(std::uint64_t seed, std::size_t n = 90) {
  CsbmParams p;
  p.n = n;
  p.classes = 3;
  p.dim = 24;
  p.p_in = 0.12;
  p.p_out = 0.01;
  p.mu = 1.5;
  p.threshold = 1.0;
  p.seed = seed;
  p.train_fraction = 0.2;
  p.val_fraction = 0.1;
  return gen_csbm(p);
}

}  // namespace fixture
