#include "rmpwbc/sim.hpp"

#include <cmath>

#include <Eigen/LU>

namespace rmpwbc::sim {

void ContactParams::validate() const {
  if (!(stiffness > 0.0) || !(damping > 0.0) || !(mu > 0.0)) throw ConfigError("contact parameters must be positive");
}

void SimParams::validate() const {
  if (!(dt > 0.0) || dt > 1e-3 + 1e-15) throw ConfigError("physics step must be in (0, 1 ms]");
  if (!(max_speed > 0.0)) throw ConfigError("speed limit must be positive");
  contact.validate();
}

SimWorld::SimWorld(const RobotModel& model, RobotState state, SimParams params, std::array<std::string, 2> foot_frames)
    : model_(&model), state_(std::move(state)), params_(params) {
  params_.validate();
  for (int i = 0; i < 2; ++i) feet_[i] = model.frame(foot_frames[i]);
}

void SimWorld::set_state(const RobotState& s) {
  state_ = s;
  contacts_ = {};
  started_ = false;
}

void SimWorld::step(const VecX& tau, const Vec3& base_force) {
  const RobotModel& m = *model_;
  if (tau.size() != static_cast<int>(m.actuated_velocity_indices().size()))
    throw DimensionError("SimWorld::step: torque size does not match the actuated joints");
  if (!tau.allFinite()) throw SimulationAborted("non-finite torque at t = " + std::to_string(time_));

  const double dt = params_.dt;
  // Leapfrog start: the first velocity update is a half step so positions
  // are second-order accurate under constant forces.
  const double hv = started_ ? dt : 0.5 * dt;
  const auto& cp = params_.contact;

  const KinematicsCache kin = m.kinematics(state_);
  const DynamicsTerms dyn = m.dynamics(kin);
  VecX gen = dyn.S_a.transpose() * tau - dyn.bias;
  if (base_force.squaredNorm() > 0.0) gen += m.point_jacobian(kin, 0, kin.p[0]).transpose() * base_force;

  struct Candidate {
    int foot;
    Vec3 p;
    MatX J;
    bool sliding = false;
    Vec2 slide_dir = Vec2::Zero();
    bool enabled = true;
  };
  std::vector<Candidate> cand;
  for (int i = 0; i < 2; ++i) {
    const Vec3 p = m.frame_position(kin, feet_[i]);
    if (p.z() < 0.0) {
      if (!contacts_[i].active) contacts_[i].anchor = Vec3(p.x(), p.y(), 0.0);
      cand.push_back({i, p, m.point_jacobian(kin, feet_[i])});
    } else {
      contacts_[i] = {};
    }
  }

  const VecX rhs0 = dyn.A * state_.velocity + hv * gen;
  VecX qd_next;
  std::vector<Vec3> forces(cand.size(), Vec3::Zero());
  const double c_spring = cp.damping + dt * cp.stiffness;
  for (int iter = 0; iter <= 2 * static_cast<int>(cand.size()); ++iter) {
    // Each contact force is affine in the new velocity: f = f0 - C J qd+.
    MatX lhs = dyn.A;
    VecX rhs = rhs0;
    std::vector<Vec3> f0(cand.size(), Vec3::Zero());
    std::vector<Mat3> C(cand.size(), Mat3::Zero());
    for (std::size_t k = 0; k < cand.size(); ++k) {
      const Candidate& ck = cand[k];
      if (!ck.enabled) continue;
      f0[k].z() = -cp.stiffness * ck.p.z();
      C[k](2, 2) = c_spring;
      if (ck.sliding) {
        // Kinetic friction along a fixed direction, proportional to the implicit normal force.
        f0[k].head<2>() = cp.mu * ck.slide_dir * f0[k].z();
        C[k].block<2, 1>(0, 2) = cp.mu * ck.slide_dir * c_spring;
      } else {
        f0[k].head<2>() = -cp.stiffness * (ck.p - contacts_[ck.foot].anchor).head<2>();
        C[k](0, 0) = C[k](1, 1) = c_spring;
      }
      lhs += hv * ck.J.transpose() * C[k] * ck.J;
      rhs += hv * ck.J.transpose() * f0[k];
    }
    qd_next = lhs.partialPivLu().solve(rhs);

    bool changed = false;
    for (std::size_t k = 0; k < cand.size(); ++k) {
      Candidate& ck = cand[k];
      if (!ck.enabled) continue;
      const Vec3 f = f0[k] - C[k] * (ck.J * qd_next);
      forces[k] = f;
      if (f.z() < 0.0) {
        ck.enabled = false;
        forces[k].setZero();
        changed = true;
        continue;
      }
      const double ft = f.head<2>().norm();
      if (!ck.sliding && ft > cp.mu * f.z()) {
        ck.sliding = true;
        ck.slide_dir = f.head<2>() / ft;
        changed = true;
      }
    }
    if (!changed) break;
  }

  if (!qd_next.allFinite() || qd_next.lpNorm<Eigen::Infinity>() > params_.max_speed)
    throw SimulationAborted("velocity diverged at t = " + std::to_string(time_));
  state_ = state_.integrated(qd_next, dt);
  state_.velocity = qd_next;
  if (!state_.base_position.allFinite() || !state_.joint_positions.allFinite())
    throw SimulationAborted("non-finite configuration at t = " + std::to_string(time_));
  time_ += dt;
  started_ = true;

  const KinematicsCache kin_next = m.kinematics(state_);
  for (std::size_t k = 0; k < cand.size(); ++k) {
    FootContact& fc = contacts_[cand[k].foot];
    fc.active = cand[k].enabled;
    fc.sliding = cand[k].enabled && cand[k].sliding;
    fc.force = forces[k];
    if (fc.sliding) {
      const Vec3 p = m.frame_position(kin_next, feet_[cand[k].foot]);
      fc.anchor.head<2>() = p.head<2>() + fc.force.head<2>() / cp.stiffness;
    }
  }
}

void Disturbance::validate() const {
  if (!(magnitude >= 10.0 && magnitude <= 100.0)) throw ConfigError("push magnitude must lie in [10, 100] N");
  if (!(duration > 0.0)) throw ConfigError("push duration must be positive");
  if (!std::isfinite(angle)) throw ConfigError("push angle must be finite");
}

Vec3 disturbance_force(const Disturbance& d, double t, double t_start) {
  if (t < t_start || t >= t_start + d.duration) return Vec3::Zero();
  return Vec3(d.magnitude * std::cos(d.angle), d.magnitude * std::sin(d.angle), 0.0);
}

std::string_view failure_name(FailureCause c) {
  switch (c) {
    case FailureCause::None: return "none";
    case FailureCause::BaseTooLow: return "base_too_low";
    case FailureCause::SelfCollision: return "self_collision";
    case FailureCause::ControllerFailure: return "controller_failure";
  }
  return "none";
}

FailureCause parse_failure(std::string_view s) {
  for (FailureCause c : {FailureCause::None, FailureCause::BaseTooLow, FailureCause::SelfCollision,
                         FailureCause::ControllerFailure})
    if (failure_name(c) == s) return c;
  throw ConfigError("unknown failure cause '" + std::string(s) + "'");
}

FailureCause detect_failure(double base_height, double clearance, const FailureCriteria& c) {
  if (base_height < c.min_base_height) return FailureCause::BaseTooLow;
  if (clearance < c.min_clearance) return FailureCause::SelfCollision;
  return FailureCause::None;
}

}  // namespace rmpwbc::sim
