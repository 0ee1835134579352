#pragma once

// Reaction-force reference from a single-rigid-body model. Dynamics are
// linearized about the current yaw and discretized with forward Euler; the
// force sequence over the horizon is the solution of one condensed QP.

#include <array>
#include <span>
#include <vector>

#include "rmpwbc/qp.hpp"
#include "rmpwbc/types.hpp"

namespace rmpwbc::locomotion {

struct SrbParams {
  double mass = 5.4;
  Mat3 inertia = Mat3::Identity() * 0.05;  // body frame, about the CoM
  double dt = 0.03;
  int horizon = 20;
  double mu = 0.7;
  double fz_max = 150.0;
  double gravity = kGravity;
  // State weights in the order roll, pitch, yaw, position, angular velocity, linear velocity.
  std::array<double, 12> state_weights{50.0, 50.0, 10.0, 0.0, 0.0, 80.0, 0.2, 0.2, 0.2, 2.0, 2.0, 1.0};
  double force_weight = 1e-4;  // on the deviation from the static weight split

  void validate() const;
};

struct SrbState {
  Vec3 rpy = Vec3::Zero();  // roll, pitch, yaw
  Vec3 pos = Vec3::Zero();
  Vec3 omega = Vec3::Zero();  // world frame
  Vec3 vel = Vec3::Zero();
};

// One horizon interval: which feet may push, where they are, the fraction of
// full normal load allowed, and the reference state at the end of the interval.
struct SrbStep {
  std::array<bool, 2> contact{true, true};
  std::array<double, 2> load{1.0, 1.0};
  std::array<Vec3, 2> foot{Vec3::Zero(), Vec3::Zero()};
  SrbState reference;
};

struct SrbPlan {
  std::vector<std::array<Vec3, 2>> forces;  // per interval, zero for feet not in contact
  qp::Status status = qp::Status::Solved;
  bool fallback = false;
  double objective = 0.0;
};

// Linear dynamics x+ = A x + B u + c for one interval (state ordering as in
// the weights, u stacks the forces of feet in contact).
struct SrbDiscrete {
  MatX A;
  MatX B;
  VecX c;
};
SrbDiscrete srb_discretize(const SrbParams& params, double yaw, const Vec3& com_ref, const SrbStep& step);

VecX srb_vector(const SrbState& s);

// Forces for the whole horizon. On an infeasible QP the static split is
// repeated over the horizon and `fallback` is set.
SrbPlan srb_reaction_forces(const SrbState& x0, std::span<const SrbStep> steps, const SrbParams& params);

// Vertical weight support shared by inverse horizontal distance to the CoM.
std::array<Vec3, 2> static_force_split(const Vec3& com, const std::array<Vec3, 2>& feet,
                                       const std::array<bool, 2>& contact, double mass, double gravity = kGravity);

}  // namespace rmpwbc::locomotion
