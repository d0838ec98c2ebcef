#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace lpgia {

inline constexpr const char* kVersion = "0.3.1";

using NodeId = std::int32_t;
using Label = std::int32_t;

/// Dense row-major matrix; rows are nodes throughout the toolkit.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// SplitMix64 finalizer; derives independent stream seeds from (seed, tag).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Worker cap: LPGIA_THREADS if set and positive, otherwise hardware concurrency.
inline unsigned thread_cap() {
  if (const char* env = std::getenv("LPGIA_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs fn(i) for i in [0, count). Each index is handled by exactly one
/// worker, so callers writing to slot i of a pre-sized output stay
/// deterministic regardless of the thread count.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = std::min<std::size_t>(thread_cap(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Index of the largest entry; ties go to the lowest index. `skip` excludes one
/// index (pass -1 to consider all).
template <typename Row>
inline Label argmax_excluding(const Row& row, Label skip = -1) {
  Label best = -1;
  double best_value = 0.0;
  for (Eigen::Index c = 0; c < row.size(); ++c) {
    if (static_cast<Label>(c) == skip) continue;
    if (best < 0 || row[c] > best_value) {
      best = static_cast<Label>(c);
      best_value = row[c];
    }
  }
  return best;
}

}  // namespace lpgia
