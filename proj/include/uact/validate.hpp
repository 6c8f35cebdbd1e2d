#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "uact/types.hpp"

namespace uact {

struct ValidationIssue {
  std::string code;
  std::string detail;
  bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  bool contains(const std::string& code) const {
    return std::any_of(issues.begin(), issues.end(), [&](const auto& i) { return i.code == code; });
  }
  bool operator==(const ValidationReport&) const = default;
};

namespace detail {

// First occurrence of each code wins; later duplicates are dropped.
class IssueSink {
 public:
  explicit IssueSink(ValidationReport& r) : report_(r) {}
  void add(const std::string& code, const std::string& detail) {
    if (!report_.contains(code)) report_.issues.push_back({code, detail});
  }

 private:
  ValidationReport& report_;
};

inline void check_arm_state(const ArmState& s, const std::string& where, IssueSink& sink) {
  if (!s.pose.position.allFinite() || !std::isfinite(s.gripper)) sink.add("non-finite", where);
  const double n = s.pose.orientation.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitTolerance) sink.add("orientation-not-unit", where);
  if (!(s.gripper >= 0.0 && s.gripper <= 1.0)) sink.add("gripper-out-of-range", where);
}

}  // namespace detail

// Reports every violated invariant; never throws and never mutates.
inline ValidationReport validate_episode(const EpisodeRecord& e) {
  ValidationReport report;
  detail::IssueSink sink(report);

  if (e.id.empty()) sink.add("empty-id", "episode id is empty");
  if (!(e.fps > 0.0) || !std::isfinite(e.fps)) sink.add("fps-nonpositive", "fps must be > 0");
  if (!(e.action_rate > 0.0) || !std::isfinite(e.action_rate)) {
    sink.add("action-rate-nonpositive", "action_rate must be > 0");
  }
  if (e.arms.empty()) sink.add("no-arms", "episode declares no arms");
  if (e.frames.empty()) sink.add("no-frames", "episode has no frames");

  for (std::size_t i = 0; i < e.frames.size(); ++i) {
    const FrameRecord& f = e.frames[i];
    const std::string where = "frame " + std::to_string(i);
    if (i > 0 && f.index <= e.frames[i - 1].index) sink.add("frame-index-order", where);
    if (f.raw_action.size() != e.action_dim) sink.add("dim-count-mismatch", where);
    for (double v : f.raw_action) {
      if (!std::isfinite(v)) sink.add("non-finite", where + " raw_action");
    }
    for (Arm a : {Arm::Left, Arm::Right}) {
      const auto& slot = a == Arm::Left ? f.left : f.right;
      if (e.has_arm(a) && !slot) sink.add("arm-state-missing", where + " " + arm_name(a));
      if (!e.has_arm(a) && slot) sink.add("undeclared-arm-state", where + " " + arm_name(a));
      if (slot) detail::check_arm_state(*slot, where + " " + arm_name(a), sink);
    }
    if (f.brightness && !(*f.brightness >= 0.0 && *f.brightness <= 1.0)) sink.add("brightness-out-of-range", where);
    if (f.sharpness && !(*f.sharpness >= 0.0)) sink.add("sharpness-negative", where);
  }

  const auto n = static_cast<std::int64_t>(e.frames.size());
  for (const auto& s : e.subtasks) {
    if (s.start >= s.end) sink.add("subtask-empty", "[" + std::to_string(s.start) + "," + std::to_string(s.end) + ")");
    if (s.start < 0 || s.end > n) {
      sink.add("subtask-out-of-range", "[" + std::to_string(s.start) + "," + std::to_string(s.end) + ")");
    }
  }
  std::vector<SubtaskSpan> sorted = e.subtasks;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].start < sorted[i - 1].end) {
      sink.add("subtask-overlap", "span starting at " + std::to_string(sorted[i].start));
    }
  }
  return report;
}

}  // namespace uact
