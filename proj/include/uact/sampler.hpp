#pragma once

// Stratified trajectory sampling over bimanual/single-arm pools, plus the
// distribution metrics used to compare strategies (Gini, Lorenz curve,
// Coverage@T, rank-probability).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "uact/counter_rng.hpp"
#include "uact/error.hpp"
#include "uact/manifest.hpp"
#include "uact/parallel.hpp"

namespace uact {

struct TrajectoryEntry {
  std::string id;
  std::string dataset;
  std::string embodiment;
  std::string task;
  std::string skill;
  bool single_arm = false;
};

using IdBuckets = std::map<std::string, std::vector<std::string>>;

struct StrataIndex {
  std::vector<TrajectoryEntry> trajectories;  // sorted by id
  IdBuckets by_task;
  IdBuckets by_embodiment;
  IdBuckets by_skill;

  std::size_t size() const { return trajectories.size(); }
};

inline StrataIndex build_strata_index(std::vector<TrajectoryEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].id == entries[i - 1].id) throw Error("duplicate-id", "duplicate trajectory id '" + entries[i].id + "'");
  }
  StrataIndex idx;
  for (const auto& e : entries) {
    idx.by_task[e.task].push_back(e.id);
    idx.by_embodiment[e.embodiment].push_back(e.id);
    idx.by_skill[e.skill].push_back(e.id);
  }
  idx.trajectories = std::move(entries);
  return idx;
}

inline StrataIndex strata_from_manifest(const CorpusManifest& m) {
  std::vector<TrajectoryEntry> entries;
  for (const auto& h : m.episodes) entries.push_back({h.id, h.dataset, h.embodiment, h.task, h.skill, h.single_arm});
  return build_strata_index(std::move(entries));
}

enum class Strategy { TrajectoryUniform, TaskUniform, EmbodimentUniform, DualWeighted };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::TrajectoryUniform: return "trajectory-uniform";
    case Strategy::TaskUniform: return "task-uniform";
    case Strategy::EmbodimentUniform: return "embodiment-uniform";
    case Strategy::DualWeighted: return "dual-weighted";
  }
  return "trajectory-uniform";
}

inline Strategy parse_strategy(std::string_view s) {
  std::string norm(s);
  std::replace(norm.begin(), norm.end(), '_', '-');
  for (Strategy v : {Strategy::TrajectoryUniform, Strategy::TaskUniform, Strategy::EmbodimentUniform,
                     Strategy::DualWeighted}) {
    if (norm == strategy_name(v)) return v;
  }
  throw Error("unknown-strategy", "unknown sampling strategy '" + std::string(s) + "'");
}

using ProbabilityTable = std::map<std::string, double>;

// Bimanual pool: mass spread by strategy (within a stratum uniformly over
// trajectories). Single-arm pool: always trajectory-uniform and scaled to
// `single_arm_budget`. When one pool is empty the other takes all mass.
inline ProbabilityTable weights_for(const StrataIndex& index, Strategy strategy, double single_arm_budget) {
  if (index.trajectories.empty()) throw Error("empty-index", "cannot weight an empty index");
  if (!(single_arm_budget >= 0.0 && single_arm_budget <= 1.0)) {
    throw Error("bad-budget", "single-arm budget must lie in [0, 1]");
  }
  std::map<std::string, std::size_t> task_count, embodiment_count;
  std::size_t n_single = 0, n_bimanual = 0;
  for (const auto& t : index.trajectories) {
    if (t.single_arm) {
      ++n_single;
    } else {
      ++n_bimanual;
      ++task_count[t.task];
      ++embodiment_count[t.embodiment];
    }
  }
  if (n_bimanual == 0 && single_arm_budget < 1.0) {
    throw Error("empty-bimanual-pool", "no bimanual trajectories but the budget leaves them mass");
  }
  const double single_mass = n_single == 0 ? 0.0 : (n_bimanual == 0 ? 1.0 : single_arm_budget);
  const double bimanual_mass = 1.0 - single_mass;

  std::vector<double> raw(index.trajectories.size(), 0.0);
  double bim_total = 0.0;
  for (std::size_t i = 0; i < index.trajectories.size(); ++i) {
    const auto& t = index.trajectories[i];
    if (t.single_arm) continue;
    const double nt = static_cast<double>(task_count[t.task]);
    const double ne = static_cast<double>(embodiment_count[t.embodiment]);
    switch (strategy) {
      case Strategy::TrajectoryUniform: raw[i] = 1.0; break;
      case Strategy::TaskUniform: raw[i] = 1.0 / nt; break;
      case Strategy::EmbodimentUniform: raw[i] = 1.0 / ne; break;
      case Strategy::DualWeighted: raw[i] = 1.0 / (nt * ne); break;
    }
    bim_total += raw[i];
  }
  ProbabilityTable p;
  for (std::size_t i = 0; i < index.trajectories.size(); ++i) {
    const auto& t = index.trajectories[i];
    p[t.id] = t.single_arm ? single_mass / static_cast<double>(n_single) : bimanual_mass * raw[i] / bim_total;
  }
  return p;
}

// How the single-arm budget is honoured: in expectation (one table), or
// exactly within every batch of `batch_size` consecutive draws.
enum class BudgetMode { Expectation, PerBatch };

struct SamplingPlan {
  Strategy strategy = Strategy::TaskUniform;
  double single_arm_budget = 0.5;
  BudgetMode budget_mode = BudgetMode::Expectation;
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  ProbabilityTable probabilities;
  std::vector<std::string> draws;
  bool operator==(const SamplingPlan&) const = default;
};

namespace detail {

struct Cdf {
  std::vector<const std::string*> ids;
  std::vector<double> cumulative;

  const std::string& sample(double u) const {
    const double target = u * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    std::size_t k = static_cast<std::size_t>(it - cumulative.begin());
    if (k >= ids.size()) k = ids.size() - 1;
    return *ids[k];
  }
};

template <typename Pred>
Cdf make_cdf(const ProbabilityTable& p, Pred keep) {
  Cdf c;
  double acc = 0.0;
  for (const auto& [id, prob] : p) {
    if (!keep(id) || prob <= 0.0) continue;
    acc += prob;
    c.ids.push_back(&id);
    c.cumulative.push_back(acc);
  }
  return c;
}

}  // namespace detail

// Draw i is a pure function of (seed, i) and the table, so any partition of
// the index range across workers reproduces the serial result bitwise.
inline std::vector<std::string> draw(const ProbabilityTable& probabilities, std::uint64_t seed, std::size_t count,
                                     unsigned workers = worker_count()) {
  std::vector<std::string> out(count);
  if (count == 0) return out;
  const auto cdf = detail::make_cdf(probabilities, [](const std::string&) { return true; });
  if (cdf.ids.empty()) throw Error("empty-table", "probability table has no positive mass");
  const CounterRng rng(seed);
  parallel_for(count, [&](std::size_t i) { out[i] = cdf.sample(rng.uniform(i)); }, workers);
  return out;
}

inline SamplingPlan make_plan(const StrataIndex& index, Strategy strategy, double single_arm_budget,
                              std::uint64_t seed, std::size_t count, BudgetMode mode = BudgetMode::Expectation,
                              std::size_t batch_size = 0, unsigned workers = worker_count()) {
  SamplingPlan plan;
  plan.strategy = strategy;
  plan.single_arm_budget = single_arm_budget;
  plan.budget_mode = mode;
  plan.batch_size = batch_size;
  plan.seed = seed;
  plan.probabilities = weights_for(index, strategy, single_arm_budget);
  if (mode == BudgetMode::Expectation) {
    plan.draws = draw(plan.probabilities, seed, count, workers);
    return plan;
  }
  if (batch_size == 0) throw Error("bad-config", "per-batch budget needs a positive batch size");
  std::set<std::string> single;
  for (const auto& t : index.trajectories) {
    if (t.single_arm) single.insert(t.id);
  }
  const auto single_cdf = detail::make_cdf(plan.probabilities, [&](const std::string& id) { return single.count(id) > 0; });
  const auto bim_cdf = detail::make_cdf(plan.probabilities, [&](const std::string& id) { return single.count(id) == 0; });
  std::size_t single_slots = static_cast<std::size_t>(std::llround(single_arm_budget * static_cast<double>(batch_size)));
  if (single_cdf.ids.empty()) single_slots = 0;
  if (bim_cdf.ids.empty()) single_slots = batch_size;
  const CounterRng rng(seed);
  plan.draws.assign(count, {});
  parallel_for(count, [&](std::size_t i) {
    const bool from_single = (i % batch_size) < single_slots;
    plan.draws[i] = (from_single ? single_cdf : bim_cdf).sample(rng.uniform(i));
  }, workers);
  return plan;
}

inline json plan_to_json(const SamplingPlan& p) {
  return json{{"plan", "sampling"},
              {"version", 1},
              {"strategy", strategy_name(p.strategy)},
              {"single_arm_budget", p.single_arm_budget},
              {"budget_mode", p.budget_mode == BudgetMode::Expectation ? "expectation" : "per-batch"},
              {"batch_size", p.batch_size},
              {"seed", p.seed},
              {"probabilities", p.probabilities},
              {"draws", p.draws}};
}

inline SamplingPlan plan_from_json(const json& j) {
  if (j.at("plan") != "sampling" || j.at("version") != 1) throw Error("report-version", "not a sampling plan v1");
  SamplingPlan p;
  p.strategy = parse_strategy(j.at("strategy").get<std::string>());
  p.single_arm_budget = j.at("single_arm_budget");
  p.budget_mode = j.at("budget_mode") == "per-batch" ? BudgetMode::PerBatch : BudgetMode::Expectation;
  p.batch_size = j.at("batch_size");
  p.seed = j.at("seed");
  p.probabilities = j.at("probabilities").get<ProbabilityTable>();
  p.draws = j.at("draws").get<std::vector<std::string>>();
  double total = 0.0;
  for (const auto& [id, v] : p.probabilities) total += v;
  if (!p.probabilities.empty() && std::abs(total - 1.0) > 1e-9) {
    throw Error("report-inconsistent", "plan probabilities do not sum to 1");
  }
  for (const auto& d : p.draws) {
    if (!p.probabilities.count(d)) throw Error("report-inconsistent", "plan draws unknown id '" + d + "'");
  }
  return p;
}

// ---------------------------------------------------------------------------
// Metrics

inline std::vector<double> sorted_masses(const std::vector<double>& p) {
  std::vector<double> v = p;
  std::sort(v.begin(), v.end());
  return v;
}

inline std::vector<double> values_of(const std::map<std::string, double>& m) {
  std::vector<double> v;
  v.reserve(m.size());
  for (const auto& [k, x] : m) v.push_back(x);
  return v;
}

// Discrete Lorenz curve: (k/n, share of mass held by the k smallest items).
inline std::vector<std::pair<double, double>> lorenz(const std::vector<double>& probabilities) {
  if (probabilities.empty()) throw Error("empty-distribution", "Lorenz curve of an empty distribution");
  const auto v = sorted_masses(probabilities);
  double total = 0.0;
  for (double x : v) total += x;
  const double n = static_cast<double>(v.size());
  std::vector<std::pair<double, double>> pts;
  pts.reserve(v.size() + 1);
  pts.emplace_back(0.0, 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    acc += v[k];
    pts.emplace_back(static_cast<double>(k + 1) / n, k + 1 == v.size() ? 1.0 : acc / total);
  }
  return pts;
}

// G = 1 - 2 * (trapezoid area under the Lorenz curve).
inline double gini(const std::vector<double>& probabilities) {
  const auto pts = lorenz(probabilities);
  const double n = static_cast<double>(probabilities.size());
  double twice_area = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) twice_area += pts[k - 1].second + pts[k].second;
  return 1.0 - twice_area / n;
}

inline double gini(const std::map<std::string, double>& probabilities) { return gini(values_of(probabilities)); }

inline std::vector<std::pair<double, double>> lorenz(const std::map<std::string, double>& probabilities) {
  return lorenz(values_of(probabilities));
}

// Sums trajectory probabilities per group (skill, task, embodiment...).
inline std::map<std::string, double> group_mass(const ProbabilityTable& p,
                                                const std::map<std::string, std::string>& group_of) {
  std::map<std::string, double> out;
  for (const auto& [id, prob] : p) out[group_of.at(id)] += prob;
  return out;
}

inline std::vector<std::size_t> coverage_at(const std::vector<std::string>& draws,
                                            const std::map<std::string, std::string>& skill_of) {
  std::vector<std::size_t> out;
  out.reserve(draws.size());
  std::set<std::string> seen;
  for (const auto& d : draws) {
    const auto it = skill_of.find(d);
    seen.insert(it == skill_of.end() ? d : it->second);
    out.push_back(seen.size());
  }
  return out;
}

inline std::vector<std::pair<std::size_t, double>> rank_probability(const std::vector<double>& probabilities) {
  if (probabilities.empty()) throw Error("empty-distribution", "rank-probability of an empty distribution");
  auto v = probabilities;
  std::sort(v.begin(), v.end(), std::greater<>());
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(i + 1, v[i]);
  return out;
}

inline std::map<std::string, std::string> skill_map(const StrataIndex& idx) {
  std::map<std::string, std::string> m;
  for (const auto& t : idx.trajectories) m[t.id] = t.skill;
  return m;
}

inline std::map<std::string, std::string> embodiment_map(const StrataIndex& idx) {
  std::map<std::string, std::string> m;
  for (const auto& t : idx.trajectories) m[t.id] = t.embodiment;
  return m;
}

inline std::map<std::string, std::string> task_map(const StrataIndex& idx) {
  std::map<std::string, std::string> m;
  for (const auto& t : idx.trajectories) m[t.id] = t.task;
  return m;
}

// Metrics document for a plan: skill-level Lorenz/Gini/rank-probability,
// embodiment masses and the Coverage@T curve of the plan's draws.
inline json plan_metrics(const SamplingPlan& plan, const StrataIndex& idx) {
  const auto skills = group_mass(plan.probabilities, skill_map(idx));
  const auto embodiments = group_mass(plan.probabilities, embodiment_map(idx));
  const auto tasks = group_mass(plan.probabilities, task_map(idx));
  json lor = json::array();
  for (const auto& [x, y] : lorenz(skills)) lor.push_back({x, y});
  json rp = json::array();
  for (const auto& [r, p] : rank_probability(values_of(skills))) rp.push_back({r, p});
  return json{{"metrics", "sampling"},
              {"version", 1},
              {"strategy", strategy_name(plan.strategy)},
              {"draws", plan.draws.size()},
              {"skill_gini", gini(skills)},
              {"task_gini", gini(tasks)},
              {"embodiment_gini", gini(embodiments)},
              {"skill_mass", skills},
              {"embodiment_mass", embodiments},
              {"lorenz", lor},
              {"rank_probability", rp},
              {"coverage", coverage_at(plan.draws, skill_map(idx))},
              {"total_skills", skills.size()}};
}

}  // namespace uact
