#pragma once

// Spatial (6-D) vector algebra. Motion vectors are ordered [angular; linear],
// force vectors [moment; force], both expressed in a body frame.

#include "rmpwbc/types.hpp"

namespace rmpwbc::spatial {

// Plucker transform from frame A to frame B. `E` maps A coordinates to B
// coordinates and `r` is the origin of B expressed in A.
struct Transform {
  Mat3 E = Mat3::Identity();
  Vec3 r = Vec3::Zero();

  static Transform identity() { return {}; }

  // B is obtained from A by rotating with `rot` (B axes in A coordinates) and
  // translating by `pos` (in A coordinates).
  static Transform from_pose(const Mat3& rot, const Vec3& pos) { return {rot.transpose(), pos}; }

  Vec6 apply_motion(const Vec6& m) const {
    Vec6 out;
    out.head<3>() = E * m.head<3>();
    out.tail<3>() = E * (m.tail<3>() - r.cross(m.head<3>()));
    return out;
  }

  // X^T f : maps a force expressed in B back to A.
  Vec6 apply_force_transpose(const Vec6& f) const {
    Vec6 out;
    const Vec3 lin = E.transpose() * f.tail<3>();
    out.head<3>() = E.transpose() * f.head<3>() + r.cross(lin);
    out.tail<3>() = lin;
    return out;
  }

  Mat6 motion_matrix() const {
    Mat6 X = Mat6::Zero();
    X.topLeftCorner<3, 3>() = E;
    X.bottomRightCorner<3, 3>() = E;
    X.bottomLeftCorner<3, 3>() = -E * skew(r);
    return X;
  }

  // (this * other) : first apply `other` (A->B), then this (B->C).
  Transform operator*(const Transform& other) const { return {E * other.E, other.r + other.E.transpose() * r}; }

  Transform inverse() const { return {E.transpose(), -E * r}; }

  // Pose of B in A.
  Mat3 rotation() const { return E.transpose(); }
  const Vec3& translation() const { return r; }
};

inline Vec6 cross_motion(const Vec6& v, const Vec6& m) {
  Vec6 out;
  out.head<3>() = v.head<3>().cross(m.head<3>());
  out.tail<3>() = v.head<3>().cross(m.tail<3>()) + v.tail<3>().cross(m.head<3>());
  return out;
}

inline Vec6 cross_force(const Vec6& v, const Vec6& f) {
  Vec6 out;
  out.head<3>() = v.head<3>().cross(f.head<3>()) + v.tail<3>().cross(f.tail<3>());
  out.tail<3>() = v.head<3>().cross(f.tail<3>());
  return out;
}

// Rigid-body inertia about the body origin, from mass, centre of mass and
// rotational inertia about the centre of mass.
inline Mat6 rigid_body_inertia(double mass, const Vec3& com, const Mat3& inertia_com) {
  const Mat3 c = skew(com);
  Mat6 I;
  I.topLeftCorner<3, 3>() = inertia_com + mass * c * c.transpose();
  I.topRightCorner<3, 3>() = mass * c;
  I.bottomLeftCorner<3, 3>() = mass * c.transpose();
  I.bottomRightCorner<3, 3>() = mass * Mat3::Identity();
  return I;
}

inline Mat3 axis_rotation(const Vec3& axis, double angle) { return Eigen::AngleAxisd(angle, axis).toRotationMatrix(); }

}  // namespace rmpwbc::spatial
