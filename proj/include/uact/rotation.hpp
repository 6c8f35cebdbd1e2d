#pragma once

// SO(3) conversions between Euler angles, unit quaternions, rotation
// matrices and rotation vectors r = theta * k with theta in [0, pi].
//
// Conventions:
//   * quaternions are scalar-first (w, x, y, z);
//   * an Euler triple (a0, a1, a2) for convention "ABC" rotates about the
//     fixed axes A, then B, then C: R = R_C(a2) * R_B(a1) * R_A(a0);
//   * matrices are proper rotations, rotmat9 layouts are row-major.

#include <Eigen/Core>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "uact/error.hpp"

namespace uact {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using RotVec = Eigen::Vector3d;

struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quat operator-() const { return {-w, -x, -y, -z}; }
  Quat normalized() const {
    const double n = norm();
    return {w / n, x / n, y / n, z / n};
  }
  bool operator==(const Quat&) const = default;
};

inline constexpr double kSmallAngle = 1e-8;
inline constexpr double kUnitTolerance = 1e-6;
inline constexpr double kOrthoTolerance = 1e-6;

enum class EulerConvention { XYZ, ZYX, ZYZ };

inline EulerConvention parse_euler_convention(std::string_view tag) {
  if (tag == "XYZ" || tag == "xyz") return EulerConvention::XYZ;
  if (tag == "ZYX" || tag == "zyx") return EulerConvention::ZYX;
  if (tag == "ZYZ" || tag == "zyz") return EulerConvention::ZYZ;
  throw Error("unknown-euler-convention", "unknown Euler convention '" + std::string(tag) + "'");
}

inline Mat3 axis_rotation(int axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 r = Mat3::Identity();
  const int i = (axis + 1) % 3;
  const int j = (axis + 2) % 3;
  r(i, i) = c;
  r(i, j) = -s;
  r(j, i) = s;
  r(j, j) = c;
  return r;
}

inline Mat3 euler_to_matrix(const Vec3& angles, EulerConvention convention) {
  int axes[3];
  switch (convention) {
    case EulerConvention::XYZ: axes[0] = 0, axes[1] = 1, axes[2] = 2; break;
    case EulerConvention::ZYX: axes[0] = 2, axes[1] = 1, axes[2] = 0; break;
    case EulerConvention::ZYZ: axes[0] = 2, axes[1] = 1, axes[2] = 2; break;
    default: throw Error("unknown-euler-convention", "unknown Euler convention");
  }
  const Mat3 r0 = axis_rotation(axes[0], angles[0]);
  const Mat3 r1 = axis_rotation(axes[1], angles[1]);
  const Mat3 r2 = axis_rotation(axes[2], angles[2]);
  return r2 * (r1 * r0);
}

inline Mat3 quat_to_matrix(const Quat& q_in) {
  const Quat q = q_in.normalized();
  const double ww = q.w * q.w, xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
  const double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
  const double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
  Mat3 r;
  r << ww + xx - yy - zz, 2.0 * (xy - wz), 2.0 * (xz + wy),
       2.0 * (xy + wz), ww - xx + yy - zz, 2.0 * (yz - wx),
       2.0 * (xz - wy), 2.0 * (yz + wx), ww - xx - yy + zz;
  return r;
}

// Shepperd's method; result has w >= 0.
inline Quat matrix_to_quat(const Mat3& r) {
  const double tr = r.trace();
  Quat q;
  if (tr >= r(0, 0) && tr >= r(1, 1) && tr >= r(2, 2)) {
    const double s = std::sqrt(1.0 + tr) * 2.0;
    q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
  } else if (r(0, 0) >= r(1, 1) && r(0, 0) >= r(2, 2)) {
    const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
  } else if (r(1, 1) >= r(2, 2)) {
    const double s = std::sqrt(1.0 - r(0, 0) + r(1, 1) - r(2, 2)) * 2.0;
    q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
  } else {
    const double s = std::sqrt(1.0 - r(0, 0) - r(1, 1) + r(2, 2)) * 2.0;
    q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
  }
  if (q.w < 0.0) q = -q;
  return q.normalized();
}

// Largest deviation of R^T R from I, and of det(R) from +1.
inline double orthonormality_error(const Mat3& r) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(r.determinant() - 1.0));
}

inline bool is_rotation_matrix(const Mat3& r, double tol = kOrthoTolerance) {
  return r.allFinite() && orthonormality_error(r) <= tol;
}

namespace detail {

// Flip the axis so its first clearly nonzero component is positive.
inline Vec3 canonical_half_turn_axis(Vec3 axis) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(axis[i]) > 1e-12) {
      if (axis[i] < 0.0) axis = -axis;
      break;
    }
  }
  return axis;
}

}  // namespace detail

inline RotVec quat_to_rotvec(const Quat& q_in) {
  const double n = q_in.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitTolerance) {
    throw Error("non-unit-quaternion", "quaternion norm " + std::to_string(n) + " is not within 1e-6 of 1");
  }
  // Collapse the double cover onto w >= 0 before anything else, so q and -q
  // follow the same arithmetic path.
  Quat q = q_in.w < 0.0 ? -q_in : q_in;
  q = q.normalized();
  const Vec3 v(q.x, q.y, q.z);
  const double s = v.norm();
  if (s < kSmallAngle) {
    return v * (2.0 / q.w);
  }
  const double theta = 2.0 * std::atan2(s, q.w);
  if (q.w == 0.0) {
    return detail::canonical_half_turn_axis(v / s) * std::numbers::pi;
  }
  return v * (theta / s);
}

inline RotVec matrix_to_rotvec(const Mat3& r) {
  if (!is_rotation_matrix(r)) {
    throw Error("non-orthonormal", "matrix is not a proper rotation within 1e-6");
  }
  const Vec3 vee(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double s = 0.5 * vee.norm();
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(s, c);

  if (theta < kSmallAngle) {
    // theta / (2 sin theta) = 1/2 + theta^2 / 12 + O(theta^4)
    return vee * (0.5 + theta * theta / 12.0);
  }
  if (c > -0.99) {
    return vee * (theta / (2.0 * std::sin(theta)));
  }

  // Near a half turn the antisymmetric part vanishes; read the axis from the
  // symmetric part (R + R^T)/2 = c I + (1 - c) k k^T.
  const Mat3 kkt = (0.5 * (r + r.transpose()) - c * Mat3::Identity()) / (1.0 - c);
  int j = 0;
  kkt.diagonal().maxCoeff(&j);
  Vec3 axis = kkt.col(j) / std::sqrt(std::max(kkt(j, j), 0.0));
  axis.normalize();
  if (vee.norm() > 1e-12) {
    if (axis.dot(vee) < 0.0) axis = -axis;
  } else {
    axis = detail::canonical_half_turn_axis(axis);
  }
  return axis * theta;
}

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v[2], v[1],
       v[2], 0.0, -v[0],
       -v[1], v[0], 0.0;
  return m;
}

inline Mat3 rotvec_to_matrix(const RotVec& r) {
  const double theta = r.norm();
  if (!std::isfinite(theta) || theta > std::numbers::pi + 1e-9) {
    throw Error("rotvec-out-of-range", "rotation vector norm exceeds pi");
  }
  const Mat3 k = skew(r);
  if (theta < kSmallAngle) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * k + b * k * k;
}

// Any-magnitude axis-angle to quaternion (w >= 0). Used at ingest, where raw
// axis-angle data need not be canonical.
inline Quat rotvec_to_quat(const Vec3& r) {
  const double theta = r.norm();
  const double half = 0.5 * theta;
  const double scale = theta < kSmallAngle ? 0.5 - theta * theta / 48.0 : std::sin(half) / theta;
  Quat q{std::cos(half), r[0] * scale, r[1] * scale, r[2] * scale};
  if (q.w < 0.0) q = -q;
  return q.normalized();
}

// Explicit loops: (A^T A) is then bitwise symmetric, so relative_rotvec(R, R)
// is exactly zero.
inline Mat3 transpose_times(const Mat3& a, const Mat3& b) {
  Mat3 out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      out(i, j) = a(0, i) * b(0, j) + a(1, i) * b(1, j) + a(2, i) * b(2, j);
    }
  }
  return out;
}

// Rotation taking frame a to frame b, expressed in frame a.
inline RotVec relative_rotvec(const Mat3& ra, const Mat3& rb) { return matrix_to_rotvec(transpose_times(ra, rb)); }

}  // namespace uact
