#pragma once

// Unified action space: per-arm delta EEF actions with rotation vectors,
// padded to a fixed [left 7 | right 7] layout and cut into chunks.

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uact/error.hpp"
#include "uact/rotation.hpp"
#include "uact/types.hpp"

namespace uact {

// Body: translation expressed in the current EEF frame, R_t^T (p_{t+1} - p_t).
// Base: translation left in the base frame, p_{t+1} - p_t.
enum class TranslationFrame { Body, Base };

// Single-arm sources always land in the right slot; the left slot is zero.
inline UnifiedAction pad_to_dual(const ArmAction& a, Arm /*source_arm*/) {
  UnifiedAction u;
  u.right = a;
  u.arm_mask = {false, true};
  return u;
}

inline UnifiedAction dual_action(const ArmAction& left, const ArmAction& right) {
  UnifiedAction u;
  u.left = left;
  u.right = right;
  u.arm_mask = {true, true};
  return u;
}

inline ArmAction delta_between(const ArmState& cur, const ArmState& next, TranslationFrame frame) {
  const Mat3 rc = cur.pose.rotation();
  const Mat3 rn = next.pose.rotation();
  const Vec3 dp = next.pose.position - cur.pose.position;
  ArmAction a;
  a.dpos = frame == TranslationFrame::Body ? Vec3(rc.transpose() * dp) : dp;
  a.rotvec = relative_rotvec(rc, rn);
  a.gripper = next.gripper;  // setpoint, not a difference
  return a;
}

// Delta sources already carry per-step motion; only the rotation encoding changes.
inline ArmAction delta_passthrough(const ArmState& step) {
  ArmAction a;
  a.dpos = step.pose.position;
  a.rotvec = quat_to_rotvec(step.pose.orientation);
  a.gripper = step.gripper;
  return a;
}

inline std::vector<UnifiedAction> absolute_to_delta(const EpisodeRecord& e,
                                                    TranslationFrame frame = TranslationFrame::Body) {
  if (e.arms.empty()) throw Error("no-arms", "episode '" + e.id + "' declares no arms");
  const auto arm_action = [&](Arm arm, std::size_t t) {
    const auto& slot = [&](std::size_t k) -> const ArmState& {
      const auto& s = arm == Arm::Left ? e.frames[k].left : e.frames[k].right;
      if (!s) throw Error("arm-state-missing", "episode '" + e.id + "' frame lacks a declared arm");
      return *s;
    };
    return e.mode == ActionMode::Delta ? delta_passthrough(slot(t)) : delta_between(slot(t), slot(t + 1), frame);
  };

  std::size_t count = 0;
  if (e.mode == ActionMode::Absolute) {
    if (e.frames.size() < 2) throw Error("too-few-frames", "episode '" + e.id + "' needs at least 2 frames");
    count = e.frames.size() - 1;
  } else {
    if (e.frames.empty()) throw Error("too-few-frames", "episode '" + e.id + "' has no frames");
    count = e.frames.size();
  }

  std::vector<UnifiedAction> out;
  out.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    if (e.arms.size() == 1) {
      out.push_back(pad_to_dual(arm_action(e.arms.front(), t), e.arms.front()));
    } else {
      out.push_back(dual_action(arm_action(Arm::Left, t), arm_action(Arm::Right, t)));
    }
  }
  return out;
}

// Per-frame state summary: per arm [position, rotation vector, gripper],
// zero for inactive arms. Delta sources have no absolute pose, so only the
// grippers are filled.
inline std::array<double, kUnifiedDims> state_vector(const EpisodeRecord& e, std::size_t frame) {
  std::array<double, kUnifiedDims> s{};
  const auto fill = [&](const ArmState& a, std::size_t base) {
    if (e.mode == ActionMode::Absolute) {
      const RotVec r = quat_to_rotvec(a.pose.orientation);
      for (int i = 0; i < 3; ++i) {
        s[base + i] = a.pose.position[i];
        s[base + 3 + i] = r[i];
      }
    }
    s[base + 6] = a.gripper;
  };
  const auto& f = e.frames.at(frame);
  if (e.arms.size() == 1) {
    const auto& slot = e.arms.front() == Arm::Left ? f.left : f.right;
    if (slot) fill(*slot, kArmDims);
  } else {
    if (f.left) fill(*f.left, 0);
    if (f.right) fill(*f.right, kArmDims);
  }
  return s;
}

using ChunkMatrix = Eigen::Matrix<double, Eigen::Dynamic, kUnifiedDims, Eigen::RowMajor>;

struct ActionChunk {
  std::string episode_id;
  std::uint32_t start_frame = 0;
  std::uint16_t validity = 0;  // rows [0, validity) are real, the rest zero padding
  std::array<bool, 2> arm_mask{false, true};
  ChunkMatrix actions;         // H x 14
  std::array<double, kUnifiedDims> state{};

  int horizon() const { return static_cast<int>(actions.rows()); }
  bool operator==(const ActionChunk& o) const {
    return episode_id == o.episode_id && start_frame == o.start_frame && validity == o.validity &&
           arm_mask == o.arm_mask && actions.rows() == o.actions.rows() && actions == o.actions && state == o.state;
  }
};

// Windows start at 0, stride apart, for every start inside the sequence; a
// window running past the end is zero padded and records its validity.
inline std::vector<ActionChunk> chunk(const std::vector<UnifiedAction>& actions, int horizon, int stride,
                                      const std::string& episode_id = {},
                                      const std::vector<std::array<double, kUnifiedDims>>& states = {}) {
  if (horizon < 1 || stride < 1) throw Error("bad-chunk-params", "chunk length and stride must be >= 1");
  if (horizon > 65535) throw Error("bad-chunk-params", "chunk length must fit in 16 bits");
  if (actions.empty()) throw Error("empty-actions", "cannot chunk an empty action sequence");
  std::vector<ActionChunk> out;
  for (std::size_t start = 0; start < actions.size(); start += static_cast<std::size_t>(stride)) {
    ActionChunk c;
    c.episode_id = episode_id;
    c.start_frame = static_cast<std::uint32_t>(start);
    c.arm_mask = actions[start].arm_mask;
    c.actions = ChunkMatrix::Zero(horizon, kUnifiedDims);
    const std::size_t valid = std::min<std::size_t>(static_cast<std::size_t>(horizon), actions.size() - start);
    c.validity = static_cast<std::uint16_t>(valid);
    for (std::size_t r = 0; r < valid; ++r) {
      const auto row = actions[start + r].to_array();
      for (int k = 0; k < kUnifiedDims; ++k) c.actions(static_cast<Eigen::Index>(r), k) = row[k];
    }
    if (start < states.size()) c.state = states[start];
    out.push_back(std::move(c));
  }
  return out;
}

// Delta actions of an episode chunked with the state at each window start.
inline std::vector<ActionChunk> chunk_episode(const EpisodeRecord& e, int horizon, int stride,
                                              TranslationFrame frame = TranslationFrame::Body) {
  const auto actions = absolute_to_delta(e, frame);
  std::vector<std::array<double, kUnifiedDims>> states;
  states.reserve(actions.size());
  for (std::size_t t = 0; t < actions.size(); ++t) states.push_back(state_vector(e, t));
  return chunk(actions, horizon, stride, e.id, states);
}

struct NormStats {
  std::array<double, kUnifiedDims> mean{};
  std::array<double, kUnifiedDims> stddev{};  // 0 marks a pass-through channel
  double clip = 5.0;                          // bound on |normalized value|, in sigmas
  std::size_t count = 0;
  bool operator==(const NormStats&) const = default;
};

// Two passes over the real (unpadded) rows of active arms: first count, sum,
// min and max; then squared deviations from the mean. A channel whose min
// equals its max, or that no chunk ever activates, gets sigma 0.
inline NormStats fit_norm(const std::vector<ActionChunk>& chunks, double clip = 5.0) {
  if (chunks.size() < 2) throw Error("too-few-chunks", "normalization needs at least 2 chunks");
  NormStats st;
  st.clip = clip;
  std::array<std::size_t, kUnifiedDims> n{};
  std::array<double, kUnifiedDims> sum{}, lo{}, hi{};
  lo.fill(INFINITY);
  hi.fill(-INFINITY);
  const auto active = [](const ActionChunk& c, int k) { return c.arm_mask[k < kArmDims ? 0 : 1]; };
  for (const auto& c : chunks) {
    for (int r = 0; r < c.validity; ++r) {
      for (int k = 0; k < kUnifiedDims; ++k) {
        if (!active(c, k)) continue;
        const double v = c.actions(r, k);
        ++n[k];
        sum[k] += v;
        lo[k] = std::min(lo[k], v);
        hi[k] = std::max(hi[k], v);
      }
    }
  }
  for (int k = 0; k < kUnifiedDims; ++k) st.mean[k] = n[k] ? sum[k] / static_cast<double>(n[k]) : 0.0;
  std::array<double, kUnifiedDims> ss{};
  for (const auto& c : chunks) {
    for (int r = 0; r < c.validity; ++r) {
      for (int k = 0; k < kUnifiedDims; ++k) {
        if (!active(c, k)) continue;
        const double d = c.actions(r, k) - st.mean[k];
        ss[k] += d * d;
      }
    }
  }
  for (int k = 0; k < kUnifiedDims; ++k) {
    st.stddev[k] = (n[k] == 0 || lo[k] == hi[k]) ? 0.0 : std::sqrt(ss[k] / static_cast<double>(n[k]));
    st.count = std::max(st.count, n[k]);
  }
  return st;
}

// Padding rows, inactive arms and zero-sigma channels are left untouched.
inline ActionChunk apply_norm(ActionChunk c, const NormStats& st) {
  for (int r = 0; r < c.validity; ++r) {
    for (int k = 0; k < kUnifiedDims; ++k) {
      if (!c.arm_mask[k < kArmDims ? 0 : 1] || st.stddev[k] == 0.0) continue;
      const double z = (c.actions(r, k) - st.mean[k]) / st.stddev[k];
      c.actions(r, k) = std::clamp(z, -st.clip, st.clip);
    }
  }
  return c;
}

inline ActionChunk invert_norm(ActionChunk c, const NormStats& st) {
  for (int r = 0; r < c.validity; ++r) {
    for (int k = 0; k < kUnifiedDims; ++k) {
      if (!c.arm_mask[k < kArmDims ? 0 : 1] || st.stddev[k] == 0.0) continue;
      c.actions(r, k) = c.actions(r, k) * st.stddev[k] + st.mean[k];
    }
  }
  return c;
}

inline nlohmann::json norm_stats_to_json(const NormStats& st) {
  return {{"mean", st.mean}, {"stddev", st.stddev}, {"clip", st.clip}, {"count", st.count}};
}

inline NormStats norm_stats_from_json(const nlohmann::json& j) {
  NormStats st;
  st.mean = j.at("mean").get<std::array<double, kUnifiedDims>>();
  st.stddev = j.at("stddev").get<std::array<double, kUnifiedDims>>();
  st.clip = j.at("clip").get<double>();
  st.count = j.at("count").get<std::size_t>();
  return st;
}

}  // namespace uact
