#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpgia/graph.hpp"

namespace lpgia {

/// One injected node: its edge budget, pseudo label, victim cluster and
/// generated feature row.
struct FakeNode {
  std::size_t budget = 0;
  Label pseudo_label = -1;
  std::vector<NodeId> victims;
  SparseVector feature;
};

struct PlanAudit {
  std::size_t total_edges = 0;  // the floor(n_fake * avg degree) target
  std::size_t delta_x = 0;
  std::vector<std::size_t> short_clusters;  // fake indices whose cluster fell short of budget
  std::vector<std::size_t> empty_features;  // fake indices with no nonzero feature
  bool terminated_early = false;
};

/// The attack output. Fake node u gets id base_nodes + u in the perturbed graph.
struct InjectionPlan {
  std::size_t base_nodes = 0;
  std::size_t dim = 0;
  std::vector<FakeNode> fakes;
  PlanAudit audit;

  std::size_t edge_count() const {
    std::size_t e = 0;
    for (const auto& f : fakes) e += f.victims.size();
    return e;
  }
};

inline nlohmann::json to_json(const InjectionPlan& plan) {
  nlohmann::json fakes = nlohmann::json::array();
  for (std::size_t u = 0; u < plan.fakes.size(); ++u) {
    const auto& f = plan.fakes[u];
    nlohmann::json feat = nlohmann::json::array();
    for (auto [k, x] : f.feature) feat.push_back({k, x});
    fakes.push_back({{"fake_id", plan.base_nodes + u},
                     {"budget", f.budget},
                     {"pseudo_label", f.pseudo_label},
                     {"victims", f.victims},
                     {"feature", feat}});
  }
  return {{"base_nodes", plan.base_nodes},
          {"dim", plan.dim},
          {"fakes", fakes},
          {"audit",
           {{"total_edges", plan.audit.total_edges},
            {"delta_x", plan.audit.delta_x},
            {"short_clusters", plan.audit.short_clusters},
            {"empty_features", plan.audit.empty_features},
            {"terminated_early", plan.audit.terminated_early}}}};
}

inline InjectionPlan plan_from_json(const nlohmann::json& j) {
  InjectionPlan plan;
  plan.base_nodes = j.at("base_nodes").get<std::size_t>();
  plan.dim = j.at("dim").get<std::size_t>();
  for (const auto& jf : j.at("fakes")) {
    FakeNode f;
    if (jf.at("fake_id").get<std::size_t>() != plan.base_nodes + plan.fakes.size())
      throw ValidationError("plan fake ids must be consecutive from base_nodes");
    f.budget = jf.at("budget").get<std::size_t>();
    f.pseudo_label = jf.at("pseudo_label").get<Label>();
    f.victims = jf.at("victims").get<std::vector<NodeId>>();
    for (const auto& e : jf.at("feature")) f.feature.emplace_back(e.at(0).get<std::int32_t>(), e.at(1).get<double>());
    plan.fakes.push_back(std::move(f));
  }
  const auto& a = j.at("audit");
  plan.audit.total_edges = a.at("total_edges").get<std::size_t>();
  plan.audit.delta_x = a.at("delta_x").get<std::size_t>();
  plan.audit.short_clusters = a.at("short_clusters").get<std::vector<std::size_t>>();
  plan.audit.empty_features = a.at("empty_features").get<std::vector<std::size_t>>();
  plan.audit.terminated_early = a.value("terminated_early", false);
  return plan;
}

inline void save_plan(const InjectionPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << to_json(plan).dump(2) << '\n';
}

inline InjectionPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return plan_from_json(nlohmann::json::parse(in));
}

}  // namespace lpgia
