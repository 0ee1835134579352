#include "rmpwbc/rmp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rmpwbc/linalg.hpp"

namespace rmpwbc::rmp {

NaturalRmp& NaturalRmp::operator+=(const NaturalRmp& other) {
  if (other.dim() != dim()) throw DimensionError("adding RMPs of different dimension");
  f += other.f;
  M += other.M;
  return *this;
}

NaturalRmp operator+(NaturalRmp lhs, const NaturalRmp& rhs) { return lhs += rhs; }

NaturalRmp to_natural(const CanonicalRmp& rmp) { return {rmp.M * rmp.a, rmp.M}; }

CanonicalRmp resolve(const NaturalRmp& rmp) { return {linalg::psd_pinv(rmp.M) * rmp.f, rmp.M}; }

TaskMapValue IdentityMap::evaluate(const RobotModel&, const KinematicsCache&, const RobotState& state) const {
  TaskMapValue v;
  v.x = VecX(nv_);
  const Eigen::AngleAxisd aa(state.base_orientation);
  v.x << state.base_position, aa.axis() * aa.angle(), state.joint_positions;
  v.xd = state.velocity;
  v.J = MatX::Identity(nv_, nv_);
  v.Jdot_qdot = VecX::Zero(nv_);
  return v;
}

TaskMapValue PointMap::evaluate(const RobotModel& model, const KinematicsCache& kin, const RobotState&) const {
  TaskMapValue v;
  v.x = model.frame_position(kin, frame_);
  v.J = model.point_jacobian(kin, frame_);
  v.xd = v.J * kin.qd;
  v.Jdot_qdot = model.jdot_qdot(kin, frame_).tail<3>();
  return v;
}

TaskMapValue CapsuleDistanceMap::evaluate(const RobotModel& model, const KinematicsCache& kin,
                                          const RobotState&) const {
  const WitnessPair w = model.capsule_witness(kin, a_, b_);
  TaskMapValue v;
  v.x = VecX::Constant(1, w.distance);
  v.xd = VecX::Constant(1, w.distance_rate);
  v.J = w.jacobian_rel;
  v.Jdot_qdot = VecX::Constant(1, w.jdot_qdot_rel);
  return v;
}

TaskState pushforward(const RobotModel& model, const RobotState& state, const TaskMap& map) {
  const auto kin = model.kinematics(state);
  auto v = map.evaluate(model, kin, state);
  return {std::move(v.x), std::move(v.xd)};
}

NaturalRmp pullback(std::span<const ChildRmp> children, int parent_dim) {
  NaturalRmp out = NaturalRmp::zero(parent_dim);
  for (const ChildRmp& c : children) {
    const int m = c.rmp.dim();
    if (c.rmp.M.rows() != m || c.rmp.M.cols() != m || c.J.rows() != m || c.J.cols() != parent_dim ||
        c.Jdot_qdot.size() != m) {
      throw DimensionError("pullback: child of dimension " + std::to_string(m) + " inconsistent with parent " +
                           std::to_string(parent_dim));
    }
    const MatX JtM = c.J.transpose() * c.rmp.M;
    out.f.noalias() += c.J.transpose() * c.rmp.f - JtM * c.Jdot_qdot;
    out.M.noalias() += JtM * c.J;
  }
  return out;
}

NaturalRmp pullback(std::span<const ChildRmp> children) {
  if (children.empty()) throw DimensionError("pullback: parent dimension unknown without children");
  return pullback(children, static_cast<int>(children.front().J.cols()));
}

CanonicalRmp attractor_rmp(const VecX& x, const VecX& xd, const AttractorParams& p, const MatX& Lambda) {
  const auto n = x.size();
  if (xd.size() != n || p.x_des.size() != n || p.xd_des.size() != n || p.xdd_des.size() != n ||
      p.Kp.rows() != n || p.Kd.rows() != n || Lambda.rows() != n) {
    throw DimensionError("attractor_rmp: dimension mismatch");
  }
  return {p.xdd_des + p.Kp * (p.x_des - x) + p.Kd * (p.xd_des - xd), Lambda};
}

void CollisionRmpParams::validate() const {
  for (double v : {k_p, k_d, l_p, l_d, l_m, v_d, mu, r}) {
    if (!(v > 0.0)) throw ConfigError("collision RMP parameters must be strictly positive");
  }
  if (!(eps_d > 0.0) || !(eps_m > 0.0)) throw ConfigError("collision RMP offsets eps_d, eps_m must be positive");
}

double velocity_gate(double xd, double v_d) { return 1.0 - 1.0 / (1.0 + std::exp(-xd / v_d)); }

double distance_gate(double x, double r) {
  if (x > r) return 0.0;
  // (x - r)^2 / r^2, factored so the cutoff values come out exact
  return (x - r) * (x - r) / (r * r);
}

double distance_gate_derivative(double x, double r) {
  if (x > r) return 0.0;
  return 2.0 * (x - r) / (r * r);
}

CanonicalRmp collision_rmp(double x, double xd, const CollisionRmpParams& p) {
  const double sigma = velocity_gate(xd, p.v_d);
  const double xc = std::max(x, 0.0);
  const double accel = p.k_p * std::exp(-x / p.l_p) - p.k_d * sigma * xd / (xc / p.l_d + p.eps_d);
  const double metric = sigma * distance_gate(x, p.r) * p.mu / (xc / p.l_m + p.eps_m);
  return {VecX::Constant(1, accel), MatX::Constant(1, 1, metric)};
}

}  // namespace rmpwbc::rmp
