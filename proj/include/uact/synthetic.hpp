#pragma once

// Synthetic corpora.
//
// generate_corpus: raw interchange documents on smooth parametric EEF
// trajectories across several source layouts, with an exact number of
// episodes carrying one injected defect each. The defect list is the oracle
// the cleaning stage is checked against.
//
// skewed_task_corpus / reference_skew_corpus: strata fixtures for the sampler.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uact/counter_rng.hpp"
#include "uact/error.hpp"
#include "uact/rotation.hpp"
#include "uact/sampler.hpp"
#include "uact/schema.hpp"

namespace uact::synth {

using json = nlohmann::json;

// Injection order is also the cycle used to assign kinds.
inline const std::vector<std::string>& defect_kinds() {
  static const std::vector<std::string> kinds{
      "empty-instruction", "garbled",       "misaligned-subtasks", "black-frame",      "blurred",
      "action-spike",      "rate-mismatch", "abnormal-length",     "ambiguous-action",
  };
  return kinds;
}

struct SynthConfig {
  std::size_t episodes = 100;
  double defect_rate = 0.16;
  std::uint64_t seed = 0;
  int min_length = 40;
  int max_length = 80;

  void validate() const {
    if (!(defect_rate >= 0.0 && defect_rate <= 1.0)) throw Error("bad-config", "defect rate must lie in [0, 1]");
    if (min_length < 12 || max_length < min_length) throw Error("bad-config", "need 12 <= min_length <= max_length");
  }
};

struct InjectedDefect {
  std::string id;
  std::string kind;
  bool operator==(const InjectedDefect&) const = default;
};

struct SyntheticCorpus {
  std::vector<std::string> documents;  // one JSON line each, no trailing newline
  std::string schemas;                 // JSONL registry text
  std::vector<InjectedDefect> defects; // sorted by id
};

namespace detail {

struct SourceLayout {
  const char* dataset;
  const char* embodiment;
  std::vector<Arm> arms;
  RotationRepr repr;
  ActionMode mode;
  double grip_lo, grip_hi;
};

inline const std::vector<SourceLayout>& clean_layouts() {
  static const std::vector<SourceLayout> layouts{
      {"synth_quat", "arm_franka", {Arm::Right}, RotationRepr::QuatWXYZ, ActionMode::Absolute, 0.0, 255.0},
      {"synth_dual_euler", "dual_aloha", {Arm::Left, Arm::Right}, RotationRepr::EulerXYZ, ActionMode::Absolute, 0.0, 1.0},
      {"synth_xyzw", "arm_ur5", {Arm::Left}, RotationRepr::QuatXYZW, ActionMode::Absolute, -1.0, 1.0},
      {"synth_rotmat", "arm_kinova", {Arm::Right}, RotationRepr::RotMat9, ActionMode::Absolute, 0.0, 100.0},
      {"synth_delta", "arm_xarm", {Arm::Right}, RotationRepr::AxisAngle, ActionMode::Delta, 0.0, 1.0},
  };
  return layouts;
}

inline const SourceLayout& ambiguous_layout() {
  static const SourceLayout l{"synth_unlabeled", "arm_widowx", {Arm::Right}, RotationRepr::Unspecified,
                              ActionMode::Absolute, 0.0, 1.0};
  return l;
}

inline ActionSchemaDescriptor schema_of(const SourceLayout& l) {
  ActionSchemaDescriptor d;
  d.dataset = l.dataset;
  d.arms = l.arms;
  d.rotation_repr = l.repr;
  d.mode = l.mode;
  d.frame = l.mode == ActionMode::Delta ? ReferenceFrame::Eef : ReferenceFrame::Base;
  d.gripper_range = {l.grip_lo, l.grip_hi};
  const int rot = rotation_arity(l.repr).value_or(3);
  int index = 0;
  for (Arm arm : l.arms) {
    for (DimRole r : {DimRole::TransX, DimRole::TransY, DimRole::TransZ}) d.dims.push_back({index++, arm, r});
    for (int k = 0; k < rot; ++k) d.dims.push_back({index++, arm, static_cast<DimRole>(static_cast<int>(DimRole::Rot0) + k)});
    d.dims.push_back({index++, arm, DimRole::Gripper});
  }
  return d;
}

struct TaskSpec {
  const char* task;
  const char* skill;
  const char* instruction;
  const char* first;
  const char* second;
};

inline const std::vector<TaskSpec>& tasks() {
  static const std::vector<TaskSpec> t{
      {"pick_cup", "pick", "pick up the red cup", "reach the cup", "lift the cup"},
      {"pick_block", "pick", "pick up the green block", "reach the block", "lift the block"},
      {"place_bowl", "place", "place the bowl on the plate", "carry the bowl", "lower the bowl"},
      {"open_drawer", "open", "open the top drawer", "grasp the handle", "pull the drawer"},
      {"close_lid", "close", "close the box lid", "reach the lid", "push the lid down"},
      {"wipe_table", "wipe", "wipe the table with the sponge", "grab the sponge", "wipe left to right"},
  };
  return t;
}

// Smooth per-arm motion: position and rotation vector follow slow sinusoids
// (per-step translation below 1 cm, rotation below 0.02 rad).
struct ArmTrajectory {
  Vec3 centre, amp, phase;
  Vec3 rot0, rot_amp;
  double omega;

  Vec3 position(double t) const {
    Vec3 p;
    for (int k = 0; k < 3; ++k) p[k] = centre[k] + amp[k] * std::sin(omega * t + phase[k]);
    return p;
  }
  Vec3 rotvec(double t) const {
    Vec3 r;
    for (int k = 0; k < 3; ++k) r[k] = rot0[k] + rot_amp[k] * std::sin(omega * t + phase[(k + 1) % 3]);
    return r;
  }
};

inline ArmTrajectory make_trajectory(const CounterRng& rng, std::uint64_t key, std::uint32_t lane) {
  ArmTrajectory a;
  const auto u = [&](std::uint32_t k) { return rng.uniform(key, lane * 64 + k); };
  for (int k = 0; k < 3; ++k) {
    a.centre[k] = 0.2 + 0.4 * u(k);
    a.amp[k] = 0.02 + 0.06 * u(3 + k);
    a.phase[k] = 6.283185307179586 * u(6 + k);
    a.rot0[k] = -0.5 + u(9 + k);
    a.rot_amp[k] = 0.05 + 0.15 * u(12 + k);
  }
  a.omega = 0.04 + 0.06 * u(15);
  return a;
}

inline double gripper_at(int t, int n) { return t < n / 2 ? 0.0 : 1.0; }

// Raw action block for one arm at frame t in the layout's encoding.
inline void append_arm_block(json& out, const SourceLayout& l, const ArmTrajectory& a, int t, int n) {
  const double g = l.grip_lo + gripper_at(t, n) * (l.grip_hi - l.grip_lo);
  if (l.mode == ActionMode::Delta) {
    const Vec3 dp = a.position(t + 1) - a.position(t);
    const Vec3 dr = relative_rotvec(rotvec_to_matrix(a.rotvec(t)), rotvec_to_matrix(a.rotvec(t + 1)));
    for (int k = 0; k < 3; ++k) out.push_back(dp[k]);
    for (int k = 0; k < 3; ++k) out.push_back(dr[k]);
    out.push_back(g);
    return;
  }
  const Vec3 p = a.position(t);
  for (int k = 0; k < 3; ++k) out.push_back(p[k]);
  const Vec3 r = a.rotvec(t);
  switch (l.repr) {
    case RotationRepr::QuatWXYZ: {
      const Quat q = rotvec_to_quat(r);
      for (double v : {q.w, q.x, q.y, q.z}) out.push_back(v);
      break;
    }
    case RotationRepr::QuatXYZW: {
      const Quat q = rotvec_to_quat(r);
      for (double v : {q.x, q.y, q.z, q.w}) out.push_back(v);
      break;
    }
    case RotationRepr::RotMat9: {
      const Mat3 m = rotvec_to_matrix(r);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) out.push_back(m(i, j));
      }
      break;
    }
    default:  // Euler angles, axis-angle and the unlabeled layout all carry three numbers
      for (int k = 0; k < 3; ++k) out.push_back(r[k]);
      break;
  }
  out.push_back(g);
}

}  // namespace detail

inline std::string episode_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ep-%05zu", i);
  return buf;
}

inline std::string schema_registry_text() {
  SchemaRegistry reg;
  for (const auto& l : detail::clean_layouts()) reg.emplace(l.dataset, detail::schema_of(l));
  reg.emplace(detail::ambiguous_layout().dataset, detail::schema_of(detail::ambiguous_layout()));
  return render_schema_registry(reg);
}

// Exactly round(defect_rate * episodes) episodes are defective, chosen by a
// seeded permutation; kinds cycle through defect_kinds() in that order.
inline SyntheticCorpus generate_corpus(const SynthConfig& cfg) {
  cfg.validate();
  const CounterRng rng(cfg.seed, 0x5e4du);
  const std::size_t n = cfg.episodes;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i, i, 7)]);
  }
  const auto defect_count = static_cast<std::size_t>(std::llround(cfg.defect_rate * static_cast<double>(n)));
  std::vector<int> kind_of(n, -1);
  const auto& kinds = defect_kinds();
  for (std::size_t j = 0; j < defect_count; ++j) kind_of[order[j]] = static_cast<int>(j % kinds.size());

  SyntheticCorpus out;
  out.schemas = schema_registry_text();
  const auto& layouts = detail::clean_layouts();
  for (std::size_t i = 0; i < n; ++i) {
    const int kind = kind_of[i];
    const std::string defect = kind >= 0 ? kinds[static_cast<std::size_t>(kind)] : "";
    const auto& layout = defect == "ambiguous-action" ? detail::ambiguous_layout() : layouts[i % layouts.size()];
    const auto& task = detail::tasks()[rng.below(detail::tasks().size(), i, 1)];
    int len = cfg.min_length + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_length - cfg.min_length + 1), i, 2));
    if (defect == "abnormal-length") len = 5;

    json doc;
    doc["id"] = episode_id(i);
    doc["dataset"] = layout.dataset;
    doc["embodiment"] = layout.embodiment;
    doc["task"] = task.task;
    doc["skill"] = task.skill;
    doc["fps"] = 30.0;
    doc["action_rate"] = defect == "rate-mismatch" ? 60.0 : 30.0;
    if (defect == "empty-instruction") {
      doc["instruction"] = "   ";
    } else if (defect == "garbled") {
      doc["instruction"] = std::string("asdkjh!!!####") + std::string(10, '%');
    } else {
      doc["instruction"] = task.instruction;
    }
    json spans = json::array();
    if (defect == "misaligned-subtasks") {
      spans.push_back({{"start", len + 5}, {"end", len + 20}, {"text", task.first}});
    } else if (i % 7 == 3) {
      // Overlapping annotation: repaired by realignment, never rejected.
      spans.push_back({{"start", 0}, {"end", len / 2 + 3}, {"text", task.first}});
      spans.push_back({{"start", len / 2}, {"end", len}, {"text", task.second}});
    } else {
      spans.push_back({{"start", 0}, {"end", len / 2}, {"text", task.first}});
      spans.push_back({{"start", len / 2}, {"end", len}, {"text", task.second}});
    }
    doc["subtasks"] = spans;

    std::vector<detail::ArmTrajectory> arms;
    for (std::size_t a = 0; a < layout.arms.size(); ++a) {
      arms.push_back(detail::make_trajectory(rng, i, static_cast<std::uint32_t>(10 + a)));
    }
    const bool with_stats = i % 11 != 5 || !defect.empty();
    const int spike_at = len / 3;
    json frames = json::array();
    for (int t = 0; t < len; ++t) {
      json action = json::array();
      for (const auto& a : arms) detail::append_arm_block(action, layout, a, t, len);
      if (defect == "action-spike") {
        if (layout.mode == ActionMode::Delta && t == spike_at) action[0] = 0.5;
        if (layout.mode == ActionMode::Absolute && t >= spike_at) action[0] = action[0].get<double>() + 0.5;
      }
      json f{{"index", t}, {"action", action}};
      if (with_stats) {
        double brightness = 0.35 + 0.3 * rng.uniform(i, 1000u + static_cast<std::uint32_t>(t));
        double sharpness = 0.5 + 1.5 * rng.uniform(i, 5000u + static_cast<std::uint32_t>(t));
        if (defect == "black-frame" && t == len / 2) brightness = 0.0;
        if (defect == "blurred" && t % 10 < 3) sharpness = 0.01;
        f["brightness"] = brightness;
        f["sharpness"] = sharpness;
      }
      frames.push_back(std::move(f));
    }
    doc["frames"] = std::move(frames);
    out.documents.push_back(doc.dump());
    if (!defect.empty()) out.defects.push_back({doc["id"].get<std::string>(), defect});
  }
  return out;
}

inline json defects_to_json(const SynthConfig& cfg, const SyntheticCorpus& c) {
  json list = json::array();
  for (const auto& d : c.defects) list.push_back({{"id", d.id}, {"kind", d.kind}});
  return {{"report", "synthetic-defects"}, {"version", 1},       {"seed", cfg.seed},
          {"episodes", cfg.episodes},      {"defect_rate", cfg.defect_rate}, {"defects", list}};
}

inline std::vector<InjectedDefect> defects_from_json(const json& j) {
  if (j.at("report") != "synthetic-defects" || j.at("version") != 1) {
    throw Error("report-version", "not a synthetic-defects v1 manifest");
  }
  std::vector<InjectedDefect> out;
  for (const auto& d : j.at("defects")) out.push_back({d.at("id"), d.at("kind")});
  return out;
}

// ---------------------------------------------------------------------------
// Sampler fixtures

// Three bimanual tasks with 1000 / 100 / 10 trajectories on one embodiment.
inline StrataIndex skewed_task_corpus() {
  std::vector<TrajectoryEntry> e;
  const std::pair<const char*, int> spec[] = {{"task_a", 1000}, {"task_b", 100}, {"task_c", 10}};
  for (const auto& [task, count] : spec) {
    for (int k = 0; k < count; ++k) {
      e.push_back({std::string(task) + "-" + std::to_string(k), "skew", "dual_a", task, task, false});
    }
  }
  return build_strata_index(std::move(e));
}

// Long-tailed reference corpus:
//   dual_big    3000 trajectories over 10 tasks with Zipf-like counts (task = skill)
//   dual_multi  1500 trajectories over 300 tasks, 5 each (task = skill)
//   dual_s00..s11  12 small embodiments, 20 trajectories each, all on the head task
//   single_arm  400 single-arm trajectories over the 10 head tasks
// Most embodiments only ever show the head skill, so balancing embodiments
// pushes mass onto it.
inline StrataIndex reference_skew_corpus() {
  std::vector<TrajectoryEntry> e;
  const int big_counts[10] = {1500, 600, 300, 200, 150, 100, 60, 40, 30, 20};
  const auto head = [](int k) { return "head_" + std::to_string(k); };
  const auto add = [&](const std::string& emb, const std::string& task, int count, bool single) {
    for (int k = 0; k < count; ++k) {
      e.push_back({emb + "/" + task + "/" + std::to_string(k), "reference", emb, task, task, single});
    }
  };
  for (int k = 0; k < 10; ++k) add("dual_big", head(k), big_counts[k], false);
  for (int k = 0; k < 300; ++k) add("dual_multi", "tail_" + std::to_string(k), 5, false);
  for (int s = 0; s < 12; ++s) {
    char emb[16];
    std::snprintf(emb, sizeof emb, "dual_s%02d", s);
    add(emb, head(0), 20, false);
  }
  for (int k = 0; k < 10; ++k) add("single_arm", head(k), 40, true);
  return build_strata_index(std::move(e));
}

}  // namespace uact::synth
