#pragma once

// Core trajectory types shared by every stage of the pipeline.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uact/rotation.hpp"

namespace uact {

enum class Arm : std::uint8_t { Left = 0, Right = 1 };

inline const char* arm_name(Arm a) { return a == Arm::Left ? "left" : "right"; }

enum class ActionMode : std::uint8_t { Absolute, Delta };

struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation;

  // Renormalizes the orientation; the stored quaternion is always unit.
  static Pose make(const Vec3& position, const Quat& orientation) {
    return Pose{position, orientation.normalized()};
  }
  Mat3 rotation() const { return quat_to_matrix(orientation); }
  bool operator==(const Pose& o) const { return position == o.position && orientation == o.orientation; }
};

// One arm's per-frame slot. For absolute sources the pose is the EEF pose in
// the base frame; for delta sources it holds the per-step motion.
struct ArmState {
  Pose pose;
  double gripper = 0.0;  // normalized, 0 = closed
  bool operator==(const ArmState&) const = default;
};

struct ArmAction {
  Vec3 dpos = Vec3::Zero();
  RotVec rotvec = RotVec::Zero();
  double gripper = 0.0;

  std::array<double, 7> to_array() const {
    return {dpos[0], dpos[1], dpos[2], rotvec[0], rotvec[1], rotvec[2], gripper};
  }
  bool operator==(const ArmAction& o) const {
    return dpos == o.dpos && rotvec == o.rotvec && gripper == o.gripper;
  }
};

inline constexpr int kArmDims = 7;
inline constexpr int kUnifiedDims = 14;

// [left 7 | right 7]; an inactive arm is all zeros.
struct UnifiedAction {
  ArmAction left;
  ArmAction right;
  std::array<bool, 2> arm_mask{false, true};

  std::array<double, kUnifiedDims> to_array() const {
    std::array<double, kUnifiedDims> out{};
    const auto l = left.to_array();
    const auto r = right.to_array();
    for (int i = 0; i < kArmDims; ++i) {
      out[i] = arm_mask[0] ? l[i] : 0.0;
      out[kArmDims + i] = arm_mask[1] ? r[i] : 0.0;
    }
    return out;
  }
  bool operator==(const UnifiedAction&) const = default;
};

struct FrameRecord {
  std::int64_t index = 0;
  std::optional<ArmState> left;
  std::optional<ArmState> right;
  std::vector<double> raw_action;
  std::optional<double> brightness;  // mean gray level in [0, 1]
  std::optional<double> sharpness;   // variance of the second difference, >= 0
  bool operator==(const FrameRecord&) const = default;
};

struct SubtaskSpan {
  std::int64_t start = 0;  // inclusive frame
  std::int64_t end = 0;    // exclusive frame
  std::string text;
  bool operator==(const SubtaskSpan&) const = default;
};

struct EpisodeRecord {
  std::string id;
  std::string dataset;
  std::string embodiment;
  std::string task;
  std::string skill;  // defaults to task when the source has none
  double fps = 0.0;
  double action_rate = 0.0;
  std::string instruction;
  std::vector<SubtaskSpan> subtasks;
  std::vector<FrameRecord> frames;

  // Carried from the schema at ingest.
  std::vector<Arm> arms;
  ActionMode mode = ActionMode::Absolute;
  std::size_t action_dim = 0;
  bool viewpoint_ok = true;
  std::vector<std::string> flags;

  bool single_arm() const { return arms.size() == 1; }
  bool has_arm(Arm a) const {
    for (Arm x : arms) {
      if (x == a) return true;
    }
    return false;
  }
  bool operator==(const EpisodeRecord&) const = default;
};

inline bool has_flag(const EpisodeRecord& e, const std::string& flag) {
  for (const auto& f : e.flags) {
    if (f == flag) return true;
  }
  return false;
}

inline void add_flag(EpisodeRecord& e, const std::string& flag) {
  if (!has_flag(e, flag)) e.flags.push_back(flag);
}

}  // namespace uact
