#pragma once

// Declarative per-dataset action layouts.
//
// A descriptor names, for every raw action dimension, which arm it belongs to
// and whether it is a translation, rotation or gripper component. Rotation
// blocks are rot_0..rot_{n-1} where n depends on the representation
// (3 for Euler and axis-angle, 4 for quaternions, 9 for row-major matrices).

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "uact/episode_io.hpp"
#include "uact/error.hpp"
#include "uact/types.hpp"

namespace uact {

enum class RotationRepr { EulerXYZ, EulerZYX, QuatWXYZ, QuatXYZW, RotMat9, AxisAngle, Unspecified };
enum class ReferenceFrame { Base, Eef, Unspecified };

enum class DimRole : std::uint8_t {
  TransX, TransY, TransZ,
  Rot0, Rot1, Rot2, Rot3, Rot4, Rot5, Rot6, Rot7, Rot8,
  Gripper
};

struct DimSpec {
  int index = 0;
  Arm arm = Arm::Right;
  DimRole role = DimRole::TransX;
  bool operator==(const DimSpec&) const = default;
};

struct GripperRange {
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const GripperRange&) const = default;
};

struct ActionSchemaDescriptor {
  std::string dataset;
  std::vector<Arm> arms;  // sorted, left before right
  std::vector<DimSpec> dims;
  RotationRepr rotation_repr = RotationRepr::Unspecified;
  ActionMode mode = ActionMode::Absolute;
  ReferenceFrame frame = ReferenceFrame::Unspecified;
  GripperRange gripper_range;

  // Unspecified rotation parses fine but is rejected by the action filter.
  bool ambiguous() const { return rotation_repr == RotationRepr::Unspecified; }
  std::size_t dimension_count() const { return dims.size(); }
  bool operator==(const ActionSchemaDescriptor&) const = default;
};

class SchemaError : public Error {
 public:
  SchemaError(std::string code, std::string field, int line, const std::string& message)
      : Error(std::move(code), "line " + std::to_string(line) + ", field '" + field + "': " + message),
        field_(std::move(field)),
        line_(line) {}

  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  std::string field_;
  int line_;
};

namespace detail {

inline constexpr std::array<std::pair<RotationRepr, std::string_view>, 7> kReprNames{{
    {RotationRepr::EulerXYZ, "euler_xyz"},
    {RotationRepr::EulerZYX, "euler_zyx"},
    {RotationRepr::QuatWXYZ, "quat_wxyz"},
    {RotationRepr::QuatXYZW, "quat_xyzw"},
    {RotationRepr::RotMat9, "rotmat9"},
    {RotationRepr::AxisAngle, "axis_angle"},
    {RotationRepr::Unspecified, "unspecified"},
}};

inline constexpr std::array<std::pair<ReferenceFrame, std::string_view>, 3> kFrameNames{{
    {ReferenceFrame::Base, "base"},
    {ReferenceFrame::Eef, "eef"},
    {ReferenceFrame::Unspecified, "unspecified"},
}};

inline constexpr std::array<std::string_view, 13> kRoleNames{
    "trans_x", "trans_y", "trans_z", "rot_0", "rot_1", "rot_2", "rot_3",
    "rot_4",   "rot_5",   "rot_6",   "rot_7", "rot_8", "gripper"};

}  // namespace detail

inline std::string_view repr_name(RotationRepr r) {
  for (const auto& [v, n] : detail::kReprNames) {
    if (v == r) return n;
  }
  return "unspecified";
}

inline std::string_view frame_name(ReferenceFrame f) {
  for (const auto& [v, n] : detail::kFrameNames) {
    if (v == f) return n;
  }
  return "unspecified";
}

inline std::string_view role_name(DimRole r) { return detail::kRoleNames[static_cast<std::size_t>(r)]; }

inline std::optional<RotationRepr> find_repr(std::string_view s) {
  for (const auto& [v, n] : detail::kReprNames) {
    if (n == s) return v;
  }
  return std::nullopt;
}

inline std::optional<ReferenceFrame> find_frame(std::string_view s) {
  for (const auto& [v, n] : detail::kFrameNames) {
    if (n == s) return v;
  }
  return std::nullopt;
}

inline std::optional<DimRole> find_role(std::string_view s) {
  for (std::size_t i = 0; i < detail::kRoleNames.size(); ++i) {
    if (detail::kRoleNames[i] == s) return static_cast<DimRole>(i);
  }
  return std::nullopt;
}

// Number of rotation components the representation occupies per arm;
// nullopt for "unspecified", which admits any contiguous rot_0..rot_k block.
inline std::optional<int> rotation_arity(RotationRepr r) {
  switch (r) {
    case RotationRepr::EulerXYZ:
    case RotationRepr::EulerZYX:
    case RotationRepr::AxisAngle: return 3;
    case RotationRepr::QuatWXYZ:
    case RotationRepr::QuatXYZW: return 4;
    case RotationRepr::RotMat9: return 9;
    case RotationRepr::Unspecified: return std::nullopt;
  }
  return std::nullopt;
}

inline bool is_rotation_role(DimRole r) { return r >= DimRole::Rot0 && r <= DimRole::Rot8; }
inline int rotation_slot(DimRole r) { return static_cast<int>(r) - static_cast<int>(DimRole::Rot0); }

namespace detail {

inline int line_of_offset(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

inline const json& require(const json& obj, const char* field, int line) {
  auto it = obj.find(field);
  if (it == obj.end()) throw SchemaError("missing-field", field, line, "required field missing");
  return *it;
}

inline std::string require_string(const json& obj, const char* field, int line) {
  const json& v = require(obj, field, line);
  if (!v.is_string()) throw SchemaError("type-error", field, line, "expected a string");
  return v.get<std::string>();
}

inline void check_coverage(const ActionSchemaDescriptor& d, int line) {
  const auto arity = rotation_arity(d.rotation_repr);
  for (Arm arm : d.arms) {
    std::array<int, 13> seen{};
    for (const auto& dim : d.dims) {
      if (dim.arm == arm) ++seen[static_cast<std::size_t>(dim.role)];
    }
    for (std::size_t r = 0; r < seen.size(); ++r) {
      if (seen[r] > 1) {
        throw SchemaError("duplicate-role", "dims", line,
                          std::string(arm_name(arm)) + " declares role " + std::string(kRoleNames[r]) + " twice");
      }
    }
    for (DimRole r : {DimRole::TransX, DimRole::TransY, DimRole::TransZ, DimRole::Gripper}) {
      if (seen[static_cast<std::size_t>(r)] == 0) {
        throw SchemaError("incomplete-dims", "dims", line,
                          std::string(arm_name(arm)) + " lacks role " + std::string(role_name(r)));
      }
    }
    int rot_count = 0;
    int highest = -1;
    for (int k = 0; k < 9; ++k) {
      if (seen[static_cast<std::size_t>(DimRole::Rot0) + k]) {
        ++rot_count;
        highest = k;
      }
    }
    const bool contiguous = rot_count == highest + 1;
    if (arity ? (rot_count != *arity || !contiguous) : !contiguous) {
      throw SchemaError("rotation-arity-mismatch", "dims", line,
                        std::string(arm_name(arm)) + " has " + std::to_string(rot_count) +
                            " rotation dims for representation " + std::string(repr_name(d.rotation_repr)));
    }
  }
}

inline ActionSchemaDescriptor schema_from_json(const json& j, int line) {
  if (!j.is_object()) throw SchemaError("type-error", "<document>", line, "descriptor must be a JSON object");
  ActionSchemaDescriptor d;
  d.dataset = require_string(j, "dataset", line);
  if (d.dataset.empty()) throw SchemaError("type-error", "dataset", line, "dataset must be non-empty");

  const json& arms = require(j, "arms", line);
  if (!arms.is_array() || arms.empty()) throw SchemaError("type-error", "arms", line, "expected non-empty array");
  std::set<Arm> arm_set;
  for (const auto& a : arms) {
    if (!a.is_string()) throw SchemaError("type-error", "arms", line, "expected arm names");
    const auto s = a.get<std::string>();
    if (s == "left") arm_set.insert(Arm::Left);
    else if (s == "right") arm_set.insert(Arm::Right);
    else throw SchemaError("unknown-enum", "arms", line, "unknown arm '" + s + "'");
  }
  if (arm_set.size() != arms.size()) throw SchemaError("duplicate-arm", "arms", line, "arm listed twice");
  d.arms.assign(arm_set.begin(), arm_set.end());

  const auto repr = require_string(j, "rotation_repr", line);
  const auto r = find_repr(repr);
  if (!r) throw SchemaError("unknown-enum", "rotation_repr", line, "unknown representation '" + repr + "'");
  d.rotation_repr = *r;

  const auto mode = require_string(j, "mode", line);
  if (mode == "absolute") d.mode = ActionMode::Absolute;
  else if (mode == "delta") d.mode = ActionMode::Delta;
  else throw SchemaError("unknown-enum", "mode", line, "unknown mode '" + mode + "'");

  if (j.contains("frame")) {
    if (!j["frame"].is_string()) throw SchemaError("type-error", "frame", line, "expected a string");
    const auto f = find_frame(j["frame"].get<std::string>());
    if (!f) throw SchemaError("unknown-enum", "frame", line, "unknown frame");
    d.frame = *f;
  }

  if (j.contains("gripper_range")) {
    const json& g = j["gripper_range"];
    if (!g.is_array() || g.size() != 2 || !g[0].is_number() || !g[1].is_number()) {
      throw SchemaError("type-error", "gripper_range", line, "expected [lo, hi]");
    }
    d.gripper_range = {g[0].get<double>(), g[1].get<double>()};
    if (!std::isfinite(d.gripper_range.lo) || !std::isfinite(d.gripper_range.hi) ||
        !(d.gripper_range.lo < d.gripper_range.hi)) {
      throw SchemaError("bad-gripper-range", "gripper_range", line, "need finite lo < hi");
    }
  }

  const json& dims = require(j, "dims", line);
  if (!dims.is_array() || dims.empty()) throw SchemaError("type-error", "dims", line, "expected non-empty array");
  std::set<int> indices;
  for (const auto& dj : dims) {
    if (!dj.is_object()) throw SchemaError("type-error", "dims", line, "each dim must be an object");
    const json& idx = require(dj, "index", line);
    if (!idx.is_number_integer()) throw SchemaError("type-error", "dims.index", line, "expected an integer");
    DimSpec spec;
    spec.index = idx.get<int>();
    const auto arm = require_string(dj, "arm", line);
    if (arm == "left") spec.arm = Arm::Left;
    else if (arm == "right") spec.arm = Arm::Right;
    else throw SchemaError("unknown-enum", "dims.arm", line, "unknown arm '" + arm + "'");
    if (!arm_set.count(spec.arm)) {
      throw SchemaError("undeclared-arm", "dims.arm", line, "dim uses undeclared arm '" + arm + "'");
    }
    const auto role = require_string(dj, "role", line);
    const auto rr = find_role(role);
    if (!rr) throw SchemaError("unknown-enum", "dims.role", line, "unknown role '" + role + "'");
    spec.role = *rr;
    if (!indices.insert(spec.index).second) {
      throw SchemaError("duplicate-dim-index", "dims.index", line, "index " + std::to_string(spec.index) + " repeated");
    }
    d.dims.push_back(spec);
  }
  const int n = static_cast<int>(d.dims.size());
  for (const auto& spec : d.dims) {
    if (spec.index < 0 || spec.index >= n) {
      throw SchemaError("dim-index-out-of-range", "dims.index", line,
                        "index " + std::to_string(spec.index) + " outside [0, " + std::to_string(n) + ")");
    }
  }
  std::sort(d.dims.begin(), d.dims.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  check_coverage(d, line);
  return d;
}

}  // namespace detail

// Parses one descriptor document. Never crashes: every failure surfaces as a
// SchemaError naming the line and field. `first_line` offsets line numbers
// when the document is one line of a larger registry.
inline ActionSchemaDescriptor parse_schema(std::string_view text, int first_line = 1) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& ex) {
    throw SchemaError("invalid-json", "<document>", first_line - 1 + detail::line_of_offset(text, ex.byte),
                      ex.what());
  }
  try {
    return detail::schema_from_json(j, first_line);
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& ex) {
    throw SchemaError("type-error", "<document>", first_line, ex.what());
  }
}

inline std::string render_schema(const ActionSchemaDescriptor& d) {
  json j;
  j["dataset"] = d.dataset;
  json arms = json::array();
  for (Arm a : d.arms) arms.push_back(arm_name(a));
  j["arms"] = arms;
  j["rotation_repr"] = std::string(repr_name(d.rotation_repr));
  j["mode"] = mode_name(d.mode);
  j["frame"] = std::string(frame_name(d.frame));
  j["gripper_range"] = {d.gripper_range.lo, d.gripper_range.hi};
  json dims = json::array();
  for (const auto& s : d.dims) {
    dims.push_back({{"index", s.index}, {"arm", arm_name(s.arm)}, {"role", std::string(role_name(s.role))}});
  }
  j["dims"] = dims;
  return j.dump();
}

using SchemaRegistry = std::map<std::string, ActionSchemaDescriptor>;

// One descriptor per non-blank line.
inline SchemaRegistry parse_schema_registry(std::string_view text) {
  SchemaRegistry reg;
  int line = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view row = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line;
    if (row.find_first_not_of(" \t\r") != std::string_view::npos) {
      auto d = parse_schema(row, line);
      const std::string name = d.dataset;
      if (!reg.emplace(name, std::move(d)).second) {
        throw SchemaError("duplicate-dataset", "dataset", line, "dataset '" + name + "' registered twice");
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return reg;
}

inline SchemaRegistry load_schema_registry(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open schema registry '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_schema_registry(text);
}

inline std::string render_schema_registry(const SchemaRegistry& reg) {
  std::string out;
  for (const auto& [name, d] : reg) out += render_schema(d) + "\n";
  return out;
}

}  // namespace uact
