#include "rmpwbc/biped.hpp"

#include <algorithm>
#include <cmath>

namespace rmpwbc::biped {
namespace {

Mat3 rod_inertia(double mass, double length, double radius) {
  const double transverse = mass * (3.0 * radius * radius + length * length) / 12.0;
  return Vec3(transverse, transverse, 0.5 * mass * radius * radius).asDiagonal();
}

}  // namespace

LegNames leg_names(Side side) {
  const std::string p = side == Side::Left ? "l_" : "r_";
  return {p + "hip_abd", p + "hip_flex", p + "knee", p + "foot", p + "shank"};
}

ModelDescription pat_description(const Dimensions& dims) {
  ModelDescription desc;
  BodyDescription base;
  base.name = "base";
  base.joint_type = JointType::Floating;
  base.mass = dims.base_mass;
  base.com_offset = Vec3(0.0, 0.0, 0.06);
  // Box 0.12 x 0.20 x 0.25 m.
  base.rotational_inertia = Vec3(dims.base_mass / 12.0 * (0.20 * 0.20 + 0.25 * 0.25),
                                 dims.base_mass / 12.0 * (0.12 * 0.12 + 0.25 * 0.25),
                                 dims.base_mass / 12.0 * (0.12 * 0.12 + 0.20 * 0.20))
                                .asDiagonal();
  desc.bodies.push_back(base);

  for (Side side : {Side::Left, Side::Right}) {
    const LegNames n = leg_names(side);
    BodyDescription abd;
    abd.name = n.abduction;
    abd.parent = "base";
    abd.joint_axis = Vec3::UnitX();
    abd.translation_to_parent = Vec3(0.0, lateral_sign(side) * dims.hip_half_width, 0.0);
    abd.mass = dims.hip_mass;
    abd.rotational_inertia = Vec3(2e-4, 2e-4, 2e-4).asDiagonal();
    desc.bodies.push_back(abd);

    BodyDescription thigh;
    thigh.name = n.flexion;
    thigh.parent = n.abduction;
    thigh.joint_axis = Vec3::UnitY();
    thigh.mass = dims.thigh_mass;
    thigh.com_offset = Vec3(0.0, 0.0, -0.08);
    thigh.rotational_inertia = rod_inertia(dims.thigh_mass, dims.thigh_length, 0.03);
    desc.bodies.push_back(thigh);

    BodyDescription shank;
    shank.name = n.knee;
    shank.parent = n.flexion;
    shank.joint_axis = Vec3::UnitY();
    shank.translation_to_parent = Vec3(0.0, 0.0, -dims.thigh_length);
    shank.mass = dims.shank_mass;
    shank.com_offset = Vec3(0.0, 0.0, -0.4 * dims.shank_length);
    shank.rotational_inertia = rod_inertia(dims.shank_mass, dims.shank_length, dims.shank_radius);
    desc.bodies.push_back(shank);

    desc.frames.push_back({n.foot, n.knee, Vec3(0.0, 0.0, -dims.shank_length)});
    desc.capsules.push_back({n.shank_capsule, n.knee, Vec3::Zero(), Vec3(0.0, 0.0, -dims.shank_length),
                             dims.shank_radius});
    desc.actuated_joint_names.insert(desc.actuated_joint_names.end(), {n.abduction, n.flexion, n.knee});
  }
  return desc;
}

Dimensions dimensions_of(const ModelDescription& desc) {
  auto body = [&](const std::string& name) -> const BodyDescription& {
    for (const auto& b : desc.bodies)
      if (b.name == name) return b;
    throw ConfigError("biped model has no body '" + name + "'");
  };
  auto frame = [&](const std::string& name) -> const FrameDescription& {
    for (const auto& f : desc.frames)
      if (f.name == name) return f;
    throw ConfigError("biped model has no frame '" + name + "'");
  };
  auto capsule = [&](const std::string& name) -> const CapsuleDescription& {
    for (const auto& c : desc.capsules)
      if (c.name == name) return c;
    throw ConfigError("biped model has no capsule '" + name + "'");
  };
  Dimensions d;
  std::array<Dimensions, 2> legs;
  for (Side side : {Side::Left, Side::Right}) {
    const LegNames n = leg_names(side);
    Dimensions& l = legs[static_cast<int>(side)];
    l.hip_half_width = lateral_sign(side) * body(n.abduction).translation_to_parent.y();
    l.thigh_length = -body(n.knee).translation_to_parent.z();
    l.shank_length = -frame(n.foot).offset.z();
    l.shank_radius = capsule(n.shank_capsule).radius;
    if (!(l.hip_half_width > 0.0) || !(l.thigh_length > 0.0) || !(l.shank_length > 0.0))
      throw ConfigError("biped leg geometry must have positive hip offset and link lengths");
  }
  const Dimensions& a = legs[0];
  const Dimensions& b = legs[1];
  if (std::abs(a.hip_half_width - b.hip_half_width) > 1e-12 || std::abs(a.thigh_length - b.thigh_length) > 1e-12 ||
      std::abs(a.shank_length - b.shank_length) > 1e-12 || std::abs(a.shank_radius - b.shank_radius) > 1e-12)
    throw ConfigError("biped legs must be mirror images");
  d.hip_half_width = a.hip_half_width;
  d.thigh_length = a.thigh_length;
  d.shank_length = a.shank_length;
  d.shank_radius = a.shank_radius;
  return d;
}

std::array<double, 3> leg_ik(const Dimensions& dims, const Vec3& foot) {
  const double L1 = dims.thigh_length;
  const double L2 = dims.shank_length;
  const double abd = std::atan2(foot.y(), -foot.z());
  // Foot in the leg plane after undoing abduction.
  const Vec3 t(foot.x(), 0.0, -std::hypot(foot.y(), foot.z()));
  const double D = std::min(t.norm(), L1 + L2 - 1e-9);
  const double c = std::clamp((D * D - L1 * L1 - L2 * L2) / (2.0 * L1 * L2), -1.0, 1.0);
  const double knee = std::acos(c);
  const Vec3 v(-L2 * std::sin(knee), 0.0, -L1 - L2 * std::cos(knee));
  const double flex = std::atan2(t.x(), t.z()) - std::atan2(v.x(), v.z());
  return {abd, std::remainder(flex, 2.0 * M_PI), knee};
}

RobotState standing_state(const RobotModel& model, const Dimensions& dims, double base_height,
                          double foot_clearance) {
  RobotState s = model.neutral_state();
  s.base_position = Vec3(0.0, 0.0, base_height);
  // Fixed-point iteration placing both feet directly below the center of mass.
  double foot_x = 0.0;
  for (int iter = 0; iter < 20; ++iter) {
    for (Side side : {Side::Left, Side::Right}) {
      const LegNames n = leg_names(side);
      const auto q = leg_ik(dims, Vec3(foot_x, 0.0, -(base_height - foot_clearance)));
      s.joint_positions[model.joint_velocity_index(n.abduction) - 6] = q[0];
      s.joint_positions[model.joint_velocity_index(n.flexion) - 6] = q[1];
      s.joint_positions[model.joint_velocity_index(n.knee) - 6] = q[2];
    }
    const double com_x = model.center_of_mass(model.kinematics(s)).x();
    if (std::abs(com_x - foot_x) < 1e-12) break;
    foot_x = com_x;
  }
  return s;
}

}  // namespace rmpwbc::biped
