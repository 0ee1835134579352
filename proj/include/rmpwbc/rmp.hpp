#pragma once

// Riemannian motion policies: natural (f, M) and canonical (a, M) forms, the
// pushforward / pullback / resolve operators, and the leaf policies used by
// the swing-leg controller.

#include <memory>
#include <span>
#include <vector>

#include "rmpwbc/model.hpp"
#include "rmpwbc/types.hpp"

namespace rmpwbc::rmp {

struct NaturalRmp {
  VecX f;
  MatX M;

  int dim() const { return static_cast<int>(f.size()); }
  static NaturalRmp zero(int n) { return {VecX::Zero(n), MatX::Zero(n, n)}; }
  NaturalRmp& operator+=(const NaturalRmp& other);
};

struct CanonicalRmp {
  VecX a;
  MatX M;

  int dim() const { return static_cast<int>(a.size()); }
};

NaturalRmp operator+(NaturalRmp lhs, const NaturalRmp& rhs);

NaturalRmp to_natural(const CanonicalRmp& rmp);
// a = M^+ f. M is returned unchanged.
CanonicalRmp resolve(const NaturalRmp& rmp);

// Task-space quantities produced by a task map at one state.
struct TaskMapValue {
  VecX x;
  VecX xd;
  MatX J;
  VecX Jdot_qdot;
};

class TaskMap {
 public:
  virtual ~TaskMap() = default;
  virtual int dim() const = 0;
  virtual TaskMapValue evaluate(const RobotModel& model, const KinematicsCache& kin, const RobotState& state) const = 0;
};

// Configuration-space identity; position uses the base position, the base
// rotation vector and the joint angles.
class IdentityMap final : public TaskMap {
 public:
  explicit IdentityMap(int nv) : nv_(nv) {}
  int dim() const override { return nv_; }
  TaskMapValue evaluate(const RobotModel& model, const KinematicsCache& kin, const RobotState& state) const override;

 private:
  int nv_;
};

// World position of a frame.
class PointMap final : public TaskMap {
 public:
  explicit PointMap(FrameId frame) : frame_(frame) {}
  int dim() const override { return 3; }
  TaskMapValue evaluate(const RobotModel& model, const KinematicsCache& kin, const RobotState& state) const override;

 private:
  FrameId frame_;
};

// Surface distance between two capsules.
class CapsuleDistanceMap final : public TaskMap {
 public:
  CapsuleDistanceMap(int capsule_a, int capsule_b) : a_(capsule_a), b_(capsule_b) {}
  int dim() const override { return 1; }
  TaskMapValue evaluate(const RobotModel& model, const KinematicsCache& kin, const RobotState& state) const override;

 private:
  int a_, b_;
};

struct TaskState {
  VecX x;
  VecX xd;
};

TaskState pushforward(const RobotModel& model, const RobotState& state, const TaskMap& map);

// A child RMP together with the map from the parent space: its Jacobian and
// curvature term Jdot * parent velocity.
struct ChildRmp {
  NaturalRmp rmp;
  MatX J;
  VecX Jdot_qdot;
};

// f' = sum J^T (f - M Jdot qd), M' = sum J^T M J. Nested trees compose by
// pulling back an intermediate node first and passing the result on as a
// child of its own parent. Throws DimensionError on inconsistent children.
NaturalRmp pullback(std::span<const ChildRmp> children);
NaturalRmp pullback(std::span<const ChildRmp> children, int parent_dim);

struct AttractorParams {
  MatX Kp;
  MatX Kd;
  VecX x_des;
  VecX xd_des;
  VecX xdd_des;
};

// a = xdd_des + Kp (x_des - x) + Kd (xd_des - xd), M = Lambda.
CanonicalRmp attractor_rmp(const VecX& x, const VecX& xd, const AttractorParams& params, const MatX& Lambda);

struct CollisionRmpParams {
  double k_p = 1000.0;  // m/s^2
  double k_d = 10.0;   // 1/s
  double l_p = 0.015;  // m
  double l_d = 0.05;   // m
  double l_m = 0.02;   // m
  double v_d = 0.1;    // m/s
  double eps_d = 0.1;
  double eps_m = 0.1;
  double mu = 2.0;
  double r = 0.06;     // m, metric cutoff

  void validate() const;
};

// Logistic velocity gate, 1 when approaching (xd < 0), 0 when separating.
double velocity_gate(double xd, double v_d);
// Piecewise-quadratic distance gate: x^2/r^2 - 2x/r + 1 for x <= r, else 0.
double distance_gate(double x, double r);
double distance_gate_derivative(double x, double r);

// One-dimensional repulsive policy on the capsule surface distance.
CanonicalRmp collision_rmp(double x, double xd, const CollisionRmpParams& params);

}  // namespace rmpwbc::rmp
