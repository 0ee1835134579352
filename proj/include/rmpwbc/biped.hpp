#pragma once

// The 6-DoF point-foot biped: a torso and two three-joint legs
// (hip abduction, hip flexion, knee).

#include <array>
#include <string>

#include "rmpwbc/model.hpp"

namespace rmpwbc::biped {

enum class Side { Left = 0, Right = 1 };

inline Side other(Side s) { return s == Side::Left ? Side::Right : Side::Left; }
// +1 for the left leg, -1 for the right leg (world y).
inline double lateral_sign(Side s) { return s == Side::Left ? 1.0 : -1.0; }
inline const char* side_name(Side s) { return s == Side::Left ? "left" : "right"; }

struct Dimensions {
  double hip_half_width = 0.07;
  double thigh_length = 0.25;
  double shank_length = 0.25;
  double shank_radius = 0.015;
  double base_mass = 3.4;
  double hip_mass = 0.25;
  double thigh_mass = 0.55;
  double shank_mass = 0.2;
};

ModelDescription pat_description(const Dimensions& dims = {});

// Leg geometry read back from a description with the biped topology (link
// masses are left at their defaults). Throws ConfigError if bodies, frames or
// capsules are missing or the legs differ.
Dimensions dimensions_of(const ModelDescription& desc);

struct LegNames {
  std::string abduction, flexion, knee, foot, shank_capsule;
};
LegNames leg_names(Side side);

// Joint angles (abduction, flexion, knee) placing the foot at `foot` given in
// the hip frame (base axes, origin at the hip). Knee points forward.
std::array<double, 3> leg_ik(const Dimensions& dims, const Vec3& foot);

// Standing configuration with both feet below the center of mass and the base at
// `base_height`, level and at rest.
RobotState standing_state(const RobotModel& model, const Dimensions& dims, double base_height,
                          double foot_clearance = 0.0);

}  // namespace rmpwbc::biped
