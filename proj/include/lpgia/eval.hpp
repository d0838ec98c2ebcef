#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpgia/perturbed.hpp"
#include "lpgia/plan.hpp"
#include "lpgia/scoring.hpp"
#include "lpgia/surrogate.hpp"

namespace lpgia {

enum class Mode : std::uint8_t { kEvasion, kPoisoning };

inline const char* to_string(Mode m) { return m == Mode::kEvasion ? "evasion" : "poisoning"; }

inline Mode parse_mode(const std::string& s) {
  if (s == "evasion") return Mode::kEvasion;
  if (s == "poisoning") return Mode::kPoisoning;
  throw ConfigError("unknown mode '" + s + "'");
}

inline double accuracy(const std::vector<Label>& pred, const std::vector<Label>& truth, const std::vector<char>& mask) {
  std::size_t hits = 0, total = 0;
  for (std::size_t v = 0; v < mask.size(); ++v)
    if (mask[v]) {
      ++total;
      hits += pred[v] == truth[v];
    }
  return total == 0 ? 0.0 : double(hits) / double(total);
}

inline std::vector<char> split_mask(const std::vector<Split>& split, Split which) {
  std::vector<char> m(split.size());
  for (std::size_t v = 0; v < split.size(); ++v) m[v] = split[v] == which;
  return m;
}

/// FNV-1a over the raw weight bytes.
inline std::uint64_t params_digest(const GcnParams& p) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const Matrix& m) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
    for (std::size_t i = 0; i < std::size_t(m.size()) * sizeof(double); ++i) h = (h ^ bytes[i]) * 1099511628211ULL;
  };
  mix(p.w1);
  mix(p.w2);
  return h;
}

struct SeedResult {
  std::uint64_t seed = 0;
  double clean_acc = 0.0;
  double attacked_acc = 0.0;
  bool failed = false;
  std::string error;
};

struct EvalReport {
  std::string attack;
  Mode mode = Mode::kEvasion;
  Variant victim = Variant::kGcn;
  double clean_acc = 0.0;
  double attacked_acc = 0.0;
  double drop = 0.0;
  std::size_t n_fake = 0;
  std::size_t edge_total = 0;
  std::vector<SeedResult> per_seed;
  /// Node mean of target-label similarity, clean vs attacked (original nodes).
  double similarity_before = 0.0;
  double similarity_after = 0.0;

  std::size_t seeds_used() const {
    std::size_t k = 0;
    for (const auto& s : per_seed) k += !s.failed;
    return k;
  }
};

struct EvalOptions {
  TrainOptions train;
  SmoothOptions smoothing;
};

namespace detail {

inline double mean_target_similarity(const Csr& adj, const ProbMatrix& z, std::size_t n_original,
                                     const SmoothOptions& smoothing) {
  const ProbMatrix zs = smooth(adj, z, smoothing);
  const auto c_b = target_labels(zs, argmax_rows(z));
  const auto h = similarity(adj, c_b);
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t v = 0; v < n_original; ++v)
    if (adj.degree(NodeId(v)) > 0) {
      total += h[v];
      ++counted;
    }
  return counted == 0 ? 0.0 : total / double(counted);
}

}  // namespace detail

/// Test accuracy of `victim` before and after the plan, averaged over seeds.
///
/// Evasion trains on the clean graph and scores the same weights on the
/// perturbed one. Poisoning retrains on the perturbed graph; fake nodes carry
/// no label and sit outside every mask.
inline EvalReport evaluate(const GraphBundle& g, const InjectionPlan& plan, Mode mode, Variant victim,
                           const std::vector<std::uint64_t>& seeds, const EvalOptions& opts = {}) {
  const PerturbedGraph pg = materialize(plan, g);
  std::vector<Label> labels_ext = g.labels;
  labels_ext.resize(pg.num_nodes(), -1);
  const auto test_clean = split_mask(g.split, Split::kTest);
  const auto test_pert = split_mask(pg.split(), Split::kTest);

  EvalReport r;
  r.mode = mode;
  r.victim = victim;
  r.n_fake = plan.fakes.size();
  r.edge_total = plan.edge_count();
  r.per_seed.resize(seeds.size());
  std::vector<double> sim_before(seeds.size()), sim_after(seeds.size());

  parallel_for(seeds.size(), [&](std::size_t i) {
    SeedResult& s = r.per_seed[i];
    s.seed = seeds[i];
    try {
      const GcnParams clean = train(g, victim, opts.train, seeds[i]);
      const ProbMatrix z_clean = gcn_forward(clean, g);
      s.clean_acc = accuracy(argmax_rows(z_clean), g.labels, test_clean);
      ProbMatrix z_att;
      if (mode == Mode::kEvasion) {
        z_att = gcn_forward(clean, pg);
      } else {
        const GcnParams poisoned =
            train(pg.view(), labels_ext, pg.split(), g.num_classes, victim, opts.train, seeds[i]);
        z_att = gcn_forward(poisoned, pg);
      }
      s.attacked_acc = accuracy(argmax_rows(z_att), labels_ext, test_pert);
      sim_before[i] = detail::mean_target_similarity(g.adjacency, z_clean, g.n(), opts.smoothing);
      sim_after[i] = detail::mean_target_similarity(pg.adjacency(), z_att, g.n(), opts.smoothing);
    } catch (const Error& e) {
      s.failed = true;
      s.error = e.what();
    }
  });

  std::size_t ok = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (r.per_seed[i].failed) continue;
    ++ok;
    r.clean_acc += r.per_seed[i].clean_acc;
    r.attacked_acc += r.per_seed[i].attacked_acc;
    r.similarity_before += sim_before[i];
    r.similarity_after += sim_after[i];
  }
  if (ok > 0) {
    r.clean_acc /= double(ok);
    r.attacked_acc /= double(ok);
    r.similarity_before /= double(ok);
    r.similarity_after /= double(ok);
  }
  r.drop = r.clean_acc - r.attacked_acc;
  return r;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : r.per_seed) {
    nlohmann::json js = {{"seed", s.seed}, {"clean_acc", s.clean_acc}, {"attacked_acc", s.attacked_acc},
                         {"failed", s.failed}};
    if (s.failed) js["error"] = s.error;
    seeds.push_back(js);
  }
  return {{"attack", r.attack},
          {"mode", to_string(r.mode)},
          {"victim", to_string(r.victim)},
          {"clean_acc", r.clean_acc},
          {"attacked_acc", r.attacked_acc},
          {"drop", r.drop},
          {"n_fake", r.n_fake},
          {"edge_total", r.edge_total},
          {"seeds_used", r.seeds_used()},
          {"per_seed", seeds},
          {"homophily_stats", {{"similarity_before", r.similarity_before}, {"similarity_after", r.similarity_after}}}};
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.attack = j.at("attack").get<std::string>();
  r.mode = parse_mode(j.at("mode").get<std::string>());
  r.victim = parse_variant(j.at("victim").get<std::string>());
  r.clean_acc = j.at("clean_acc").get<double>();
  r.attacked_acc = j.at("attacked_acc").get<double>();
  r.drop = j.at("drop").get<double>();
  r.n_fake = j.at("n_fake").get<std::size_t>();
  r.edge_total = j.at("edge_total").get<std::size_t>();
  for (const auto& js : j.at("per_seed")) {
    SeedResult s;
    s.seed = js.at("seed").get<std::uint64_t>();
    s.clean_acc = js.at("clean_acc").get<double>();
    s.attacked_acc = js.at("attacked_acc").get<double>();
    s.failed = js.at("failed").get<bool>();
    if (s.failed) s.error = js.value("error", "");
    r.per_seed.push_back(s);
  }
  r.similarity_before = j.at("homophily_stats").at("similarity_before").get<double>();
  r.similarity_after = j.at("homophily_stats").at("similarity_after").get<double>();
  return r;
}

inline const char* kReportCsvHeader =
    "attack,victim,mode,n_fake,edge_total,seeds_used,clean_acc,attacked_acc,drop,similarity_before,similarity_after";

/// One CSV line; the attack name is quoted because strategy names hold commas.
inline std::string csv_row(const EvalReport& r) {
  std::string out = "\"" + r.attack + "\"," + to_string(r.victim) + "," + to_string(r.mode) + "," + std::to_string(r.n_fake) +
                    "," + std::to_string(r.edge_total) + "," + std::to_string(r.seeds_used());
  for (double x : {r.clean_acc, r.attacked_acc, r.drop, r.similarity_before, r.similarity_after})
    out += "," + detail::format_double(x);
  return out;
}

inline void write_reports(const std::vector<EvalReport>& reports, const std::filesystem::path& json_path,
                          const std::filesystem::path& csv_path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  std::ofstream(json_path) << arr.dump(2) << '\n';
  std::ofstream csv(csv_path);
  csv << kReportCsvHeader << '\n';
  for (const auto& r : reports) csv << csv_row(r) << '\n';
}

}  // namespace lpgia
