#pragma once

// Small hand-built records shared by the unit tests.

#include <cmath>
#include <string>
#include <vector>

#include "uact/rotation.hpp"
#include "uact/schema.hpp"
#include "uact/types.hpp"

namespace fixtures {

using namespace uact;

// Right-arm episode, absolute mode, quat_wxyz raw layout (8 dims), moving
// 1 cm per frame along x with identity orientation.
inline EpisodeRecord right_arm_episode(const std::string& id, std::size_t frames = 20, const std::string& task = "pick") {
  EpisodeRecord e;
  e.id = id;
  e.dataset = "ds";
  e.embodiment = "arm";
  e.task = task;
  e.skill = task;
  e.fps = 10;
  e.action_rate = 10;
  e.instruction = "pick up the cup";
  e.arms = {Arm::Right};
  e.mode = ActionMode::Absolute;
  e.action_dim = 8;
  for (std::size_t t = 0; t < frames; ++t) {
    FrameRecord f;
    f.index = static_cast<std::int64_t>(t);
    ArmState s;
    s.pose = Pose::make(Vec3(0.01 * static_cast<double>(t), 0, 0), Quat{});
    s.gripper = t < frames / 2 ? 0.0 : 1.0;
    f.right = s;
    f.raw_action = {s.pose.position.x(), 0, 0, 1, 0, 0, 0, s.gripper};
    f.brightness = 0.5;
    f.sharpness = 1.0;
    e.frames.push_back(f);
  }
  return e;
}

inline const char* kRightQuatSchema =
    R"({"dataset":"ds","arms":["right"],"rotation_repr":"quat_wxyz","mode":"absolute","frame":"base",)"
    R"("gripper_range":[0,1],"dims":[)"
    R"({"index":0,"arm":"right","role":"trans_x"},{"index":1,"arm":"right","role":"trans_y"},)"
    R"({"index":2,"arm":"right","role":"trans_z"},{"index":3,"arm":"right","role":"rot_0"},)"
    R"({"index":4,"arm":"right","role":"rot_1"},{"index":5,"arm":"right","role":"rot_2"},)"
    R"({"index":6,"arm":"right","role":"rot_3"},{"index":7,"arm":"right","role":"gripper"}]})";

}  // namespace fixtures
