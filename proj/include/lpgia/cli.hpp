#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lpgia/baselines.hpp"
#include "lpgia/eval.hpp"
#include "lpgia/graph.hpp"
#include "lpgia/injector.hpp"
#include "lpgia/scoring.hpp"
#include "lpgia/surrogate.hpp"

namespace lpgia::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitCompute = 1;
inline constexpr int kExitUsage = 2;

struct DatasetFlags {
  std::string path;
  bool no_lcc = false;
};

struct TrainFlags {
  std::size_t hidden = 16;
  std::size_t epochs = 200;
  double lr = 0.01;
  double weight_decay = 5e-4;
  std::size_t patience = 30;

  TrainOptions options() const { return {hidden, epochs, lr, weight_decay, patience}; }
  json to_json() const {
    return {{"hidden", hidden}, {"epochs", epochs}, {"lr", lr}, {"weight_decay", weight_decay}, {"patience", patience}};
  }
};

struct EvalFlags {
  std::string victims = "gcn";
  std::string modes = "evasion,poisoning";
  std::size_t eval_seeds = 10;
};

struct AttackFlags {
  double ratio = 0.05;
  long long n_fake = -1;
  double alpha = 0.9;
  double beta = 0.5;
  std::size_t nk = 10;
  std::size_t ensemble = 20;
  std::size_t iters = 50;
  double tol = 1e-8;
  std::string strategy = "ours";
  std::string victim_pool = "non_train";
  bool no_recompute = false;
  bool target_from_raw = false;
  bool dump_scores = false;
};

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');)
    if (!p.empty()) out.push_back(p);
  return out;
}

inline void add_dataset_flags(CLI::App* cmd, DatasetFlags& d) {
  cmd->add_option("--dataset", d.path, "Bundle directory (edges/features/labels/splits)")->required();
  cmd->add_flag("--no-lcc", d.no_lcc, "Keep every component instead of the largest one");
}

inline void add_train_flags(CLI::App* cmd, TrainFlags& t) {
  cmd->add_option("--hidden", t.hidden, "Hidden width")->capture_default_str();
  cmd->add_option("--epochs", t.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--lr", t.lr, "Learning rate")->capture_default_str();
  cmd->add_option("--weight-decay", t.weight_decay, "L2 weight decay")->capture_default_str();
  cmd->add_option("--patience", t.patience, "Early-stop patience (epochs)")->capture_default_str();
}

inline void add_eval_flags(CLI::App* cmd, EvalFlags& e) {
  cmd->add_option("--victims", e.victims, "Comma list of victim models: gcn,sgc")->capture_default_str();
  cmd->add_option("--modes", e.modes, "Comma list: evasion,poisoning")->capture_default_str();
  cmd->add_option("--eval-seeds", e.eval_seeds, "Victim training repetitions")->capture_default_str();
}

inline GraphBundle load_dataset(const DatasetFlags& d) {
  return load_bundle(d.path, LoadOptions{.largest_component = !d.no_lcc});
}

inline std::vector<std::uint64_t> eval_seed_list(std::uint64_t seed, std::size_t count) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(derive_seed(seed, 9000 + i));
  return out;
}

inline std::vector<EvalReport> run_evaluations(const GraphBundle& g, const InjectionPlan& plan, const EvalFlags& e,
                                               const TrainOptions& train_opts, const SmoothOptions& smoothing,
                                               std::uint64_t seed, const std::string& attack_name) {
  std::vector<Variant> victims;
  for (const auto& v : split_list(e.victims)) victims.push_back(parse_variant(v));
  std::vector<Mode> modes;
  for (const auto& m : split_list(e.modes)) modes.push_back(parse_mode(m));
  if (victims.empty() || modes.empty()) throw ConfigError("need at least one victim and one mode");
  if (e.eval_seeds == 0) throw ConfigError("--eval-seeds must be positive");
  const auto seeds = eval_seed_list(seed, e.eval_seeds);
  std::vector<EvalReport> reports;
  for (Variant v : victims)
    for (Mode m : modes) {
      EvalReport r = evaluate(g, plan, m, v, seeds, EvalOptions{train_opts, smoothing});
      r.attack = attack_name;
      reports.push_back(std::move(r));
    }
  return reports;
}

inline void write_json(const fs::path& path, const json& j) { std::ofstream(path) << j.dump(2) << '\n'; }

inline json bundle_summary(const GraphBundle& g) {
  return {{"n", g.n()},
          {"m", g.m()},
          {"dim", g.dim()},
          {"classes", g.num_classes},
          {"feature_kind", g.feature_kind == FeatureKind::kBinary ? "binary" : "continuous"},
          {"value_cap", g.value_cap}};
}

inline json manifest(const std::string& command, const std::vector<std::string>& argv, json config) {
  return {{"toolkit", "lpgia"}, {"version", kVersion}, {"command", command}, {"argv", argv}, {"config", std::move(config)}};
}

/// Entry point shared by the lpgia binary and the tests. `args` excludes the
/// program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Label-propagation node injection attack toolkit", "lpgia"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::uint64_t seed = 0;
  std::string out_dir;

  // gen-synth
  CsbmParams csbm;
  csbm.n = 300;
  csbm.classes = 3;
  csbm.dim = 150;
  csbm.p_in = 0.025;
  csbm.p_out = 0.004;
  csbm.mu = 0.8;
  csbm.threshold = 1.8;
  auto* gen = app.add_subcommand("gen-synth", "Write a contextual-SBM bundle directory");
  gen->add_option("--out", out_dir, "Output bundle directory")->required();
  gen->add_option("--seed", seed, "Generator seed")->capture_default_str();
  gen->add_option("--n", csbm.n, "Node count")->capture_default_str();
  gen->add_option("--classes", csbm.classes, "Class count")->capture_default_str();
  gen->add_option("--dim", csbm.dim, "Feature dimension")->capture_default_str();
  gen->add_option("--p-in", csbm.p_in, "Within-class edge probability")->capture_default_str();
  gen->add_option("--p-out", csbm.p_out, "Cross-class edge probability")->capture_default_str();
  gen->add_option("--mu", csbm.mu, "Class feature shift")->capture_default_str();
  gen->add_option("--threshold", csbm.threshold, "Feature sparsification threshold")->capture_default_str();

  // train
  DatasetFlags train_data;
  TrainFlags train_flags;
  std::size_t train_ensemble = 20;
  std::string train_variant = "gcn";
  auto* trn = app.add_subcommand("train", "Train a surrogate ensemble and write checkpoints");
  add_dataset_flags(trn, train_data);
  add_train_flags(trn, train_flags);
  trn->add_option("--out", out_dir, "Output directory")->required();
  trn->add_option("--seed", seed, "Base seed")->capture_default_str();
  trn->add_option("--ensemble", train_ensemble, "Ensemble size")->capture_default_str();
  trn->add_option("--variant", train_variant, "gcn or sgc")->capture_default_str();

  // attack
  DatasetFlags atk_data;
  TrainFlags atk_train;
  EvalFlags atk_eval;
  AttackFlags atk;
  auto* att = app.add_subcommand("attack", "Run an injection attack and evaluate it");
  add_dataset_flags(att, atk_data);
  add_train_flags(att, atk_train);
  add_eval_flags(att, atk_eval);
  att->add_option("--out", out_dir, "Output directory")->required();
  att->add_option("--seed", seed, "Base seed")->capture_default_str();
  auto* ratio_opt = att->add_option("--ratio", atk.ratio, "Fake nodes as a fraction of n")->capture_default_str();
  auto* nfake_opt = att->add_option("--n-fake", atk.n_fake, "Absolute fake node count");
  ratio_opt->excludes(nfake_opt);
  att->add_option("--alpha", atk.alpha, "Smoothing coefficient")->capture_default_str();
  att->add_option("--beta", atk.beta, "Propagation-score mix")->capture_default_str();
  att->add_option("--nk", atk.nk, "Candidates retained per greedy step")->capture_default_str();
  att->add_option("--ensemble", atk.ensemble, "Surrogate ensemble size")->capture_default_str();
  att->add_option("--iters", atk.iters, "Maximum smoothing iterations")->capture_default_str();
  att->add_option("--tol", atk.tol, "Smoothing convergence tolerance")->capture_default_str();
  att->add_option("--strategy", atk.strategy, "ours | random | node,cluster,feature")->capture_default_str();
  att->add_option("--victim-pool", atk.victim_pool, "all | non_train | test_only")->capture_default_str();
  att->add_flag("--no-recompute", atk.no_recompute, "Do not re-smooth after each injection");
  att->add_flag("--target-from-raw", atk.target_from_raw, "Target labels from the raw prediction");
  att->add_flag("--dump-scores", atk.dump_scores, "Also write scores.csv");

  // eval
  DatasetFlags ev_data;
  TrainFlags ev_train;
  EvalFlags ev_eval;
  std::string plan_path;
  double ev_alpha = 0.9;
  auto* evl = app.add_subcommand("eval", "Evaluate an existing plan");
  add_dataset_flags(evl, ev_data);
  add_train_flags(evl, ev_train);
  add_eval_flags(evl, ev_eval);
  evl->add_option("--plan", plan_path, "plan.json from attack")->required();
  evl->add_option("--out", out_dir, "Output directory")->required();
  evl->add_option("--seed", seed, "Base seed")->capture_default_str();
  evl->add_option("--alpha", ev_alpha, "Smoothing coefficient for similarity stats")->capture_default_str();

  // report
  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* rep = app.add_subcommand("report", "Merge report.json files into one CSV summary");
  rep->add_option("inputs", report_inputs, "report.json files")->required();
  rep->add_option("--out", report_out, "CSV path (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      csbm.seed = seed;
      GraphBundle g = gen_csbm(csbm);
      save_bundle(g, out_dir);
      out << "n=" << g.n() << " m=" << g.m() << " classes=" << g.num_classes << " dim=" << g.dim()
          << " homophily=" << detail::format_double(edge_homophily(g)) << '\n';
      return kExitOk;
    }

    if (trn->parsed()) {
      const Variant variant = parse_variant(train_variant);
      const GraphBundle g = load_dataset(train_data);
      fs::create_directories(out_dir);
      const auto ens = build_ensemble(g, train_ensemble, seed, train_flags.options(), variant);
      for (std::size_t i = 0; i < ens.members.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "member_%03zu.ckpt", i);
        save_checkpoint(ens.members[i], fs::path(out_dir) / name);
      }
      const auto test = split_mask(g.split, Split::kTest);
      const double acc = accuracy(argmax_rows(ens.z0), g.labels, test);
      write_json(fs::path(out_dir) / "manifest.json",
                 manifest("train", args,
                          {{"dataset", train_data.path}, {"no_lcc", train_data.no_lcc}, {"seed", seed},
                           {"ensemble", train_ensemble}, {"variant", train_variant}, {"train", train_flags.to_json()},
                           {"bundle", bundle_summary(g)}, {"member0_test_acc", acc}}));
      out << "trained " << ens.members.size() << " members, member 0 test accuracy " << detail::format_double(acc)
          << '\n';
      return kExitOk;
    }

    if (att->parsed()) {
      const StrategySpec spec = parse_strategy(atk.strategy);
      const GraphBundle g = load_dataset(atk_data);
      AttackConfig cfg;
      if (atk.n_fake >= 0) {
        cfg.n_fake = std::size_t(atk.n_fake);
      } else {
        if (!(atk.ratio >= 0.0)) throw ConfigError("--ratio must be non-negative");
        cfg.n_fake = std::size_t(std::floor(atk.ratio * double(g.n()) + 1e-9));
      }
      cfg.alpha = atk.alpha;
      cfg.beta = atk.beta;
      cfg.n_k = atk.nk;
      cfg.smooth_iters = atk.iters;
      cfg.tol = atk.tol;
      cfg.ensemble_size = atk.ensemble;
      cfg.seed = seed;
      cfg.victim_pool = parse_victim_pool(atk.victim_pool);
      cfg.recompute_smooth = !atk.no_recompute;
      cfg.target_from_smoothed = !atk.target_from_raw;
      cfg.validate();

      const json config = {{"dataset", atk_data.path},
                           {"no_lcc", atk_data.no_lcc},
                           {"seed", seed},
                           {"n_fake", cfg.n_fake},
                           {"ratio", atk.n_fake >= 0 ? json(nullptr) : json(atk.ratio)},
                           {"alpha", cfg.alpha},
                           {"beta", cfg.beta},
                           {"nk", cfg.n_k},
                           {"ensemble", cfg.ensemble_size},
                           {"iters", cfg.smooth_iters},
                           {"tol", cfg.tol},
                           {"strategy", to_string(spec)},
                           {"victim_pool", to_string(cfg.victim_pool)},
                           {"recompute_smooth", cfg.recompute_smooth},
                           {"target_from_smoothed", cfg.target_from_smoothed},
                           {"victims", atk_eval.victims},
                           {"modes", atk_eval.modes},
                           {"eval_seeds", atk_eval.eval_seeds},
                           {"train", atk_train.to_json()},
                           {"bundle", bundle_summary(g)}};
      fs::create_directories(out_dir);
      write_json(fs::path(out_dir) / "manifest.json", manifest("attack", args, config));

      const auto ens = build_ensemble(g, cfg.ensemble_size, seed, atk_train.options());
      const InjectionPlan plan = baseline_attack(g, ens, cfg, spec);
      save_plan(plan, fs::path(out_dir) / "plan.json");
      if (atk.dump_scores) {
        const auto pool = make_pool(g, cfg.victim_pool);
        const ProbMatrix zs = smooth(g.adjacency, ens.z0, cfg.smoothing());
        write_scores_csv(score_nodes(g.adjacency, ens.z0, cfg.target_from_smoothed ? zs : ens.z0,
                                     pool_members(pool), cfg.beta),
                         fs::path(out_dir) / "scores.csv");
      }
      if (plan.audit.terminated_early)
        err << "warning: victim pool exhausted after " << plan.fakes.size() << " of " << cfg.n_fake
            << " fake nodes\n";
      const auto reports =
          run_evaluations(g, plan, atk_eval, atk_train.options(), cfg.smoothing(), seed, to_string(spec));
      write_reports(reports, fs::path(out_dir) / "report.json", fs::path(out_dir) / "report.csv");
      for (const auto& r : reports)
        out << to_string(r.victim) << ' ' << to_string(r.mode) << ": clean " << detail::format_double(r.clean_acc)
            << " attacked " << detail::format_double(r.attacked_acc) << " drop " << detail::format_double(r.drop)
            << '\n';
      return kExitOk;
    }

    if (evl->parsed()) {
      const GraphBundle g = load_dataset(ev_data);
      const InjectionPlan plan = load_plan(plan_path);
      fs::create_directories(out_dir);
      write_json(fs::path(out_dir) / "manifest.json",
                 manifest("eval", args,
                          {{"dataset", ev_data.path}, {"no_lcc", ev_data.no_lcc}, {"plan", plan_path}, {"seed", seed},
                           {"victims", ev_eval.victims}, {"modes", ev_eval.modes}, {"eval_seeds", ev_eval.eval_seeds},
                           {"alpha", ev_alpha}, {"train", ev_train.to_json()}, {"bundle", bundle_summary(g)}}));
      SmoothOptions smoothing;
      smoothing.alpha = ev_alpha;
      const auto reports = run_evaluations(g, plan, ev_eval, ev_train.options(), smoothing, seed, "plan");
      write_reports(reports, fs::path(out_dir) / "report.json", fs::path(out_dir) / "report.csv");
      for (const auto& r : reports)
        out << to_string(r.victim) << ' ' << to_string(r.mode) << ": drop " << detail::format_double(r.drop) << '\n';
      return kExitOk;
    }

    if (rep->parsed()) {
      std::ostringstream csv;
      csv << kReportCsvHeader << '\n';
      for (const auto& path : report_inputs) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open " + path);
        const json j = json::parse(in);
        for (const auto& r : j.is_array() ? j : json::array({j})) csv << csv_row(report_from_json(r)) << '\n';
      }
      if (report_out.empty()) out << csv.str();
      else std::ofstream(report_out) << csv.str();
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitCompute;
  }
  return kExitUsage;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}

}  // namespace lpgia::cli
