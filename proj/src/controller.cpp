#include "rmpwbc/controller.hpp"

#include <cmath>

#include "json.hpp"

#include "rmpwbc/linalg.hpp"

namespace rmpwbc::control {

using namespace locomotion;

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Proposed: return "proposed";
    case Strategy::Baseline: return "baseline";
    case Strategy::NoAvoidance: return "no_avoidance";
    case Strategy::Apf: return "apf";
  }
  return "proposed";
}

Strategy parse_strategy(std::string_view s) {
  for (Strategy x : {Strategy::Proposed, Strategy::Baseline, Strategy::NoAvoidance, Strategy::Apf})
    if (strategy_name(x) == s) return x;
  throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

void ControllerConfig::validate() const {
  gait.validate();
  tvr.validate();
  srb.validate();
  restricted.validate();
  extended.validate();
  collision.validate();
  if (!(base_height > 0.0) || !(swing_apex >= 0.0) || !(mpc_period > 0.0))
    throw ConfigError("invalid controller timing or geometry");
  for (const Gains& g : {orientation, height, swing})
    if (g.kp < 0.0 || g.kd < 0.0) throw ConfigError("controller gains must be non-negative");
  if (!(crossing_band >= 0.0) || !(crossing_setback >= 0.0)) throw ConfigError("invalid crossing offsets");
  if (horizontal_damping < 0.0) throw ConfigError("horizontal damping must be non-negative");
  if (!(friction_mu > 0.0) || !(fz_max > 0.0)) throw ConfigError("invalid contact force bounds");
  if (!(force_weight > 0.0) || !(accel_weight > 0.0)) throw ConfigError("QP weights must be positive");
  if (!(apf.k_p >= 0.0) || !(apf.l_p > 0.0)) throw ConfigError("invalid potential-field parameters");
}

const StepRegion& ControllerConfig::region() const {
  return strategy == Strategy::Baseline ? restricted : extended;
}

std::string to_json_line(const ControlRecord& r) {
  nlohmann::json j;
  j["t"] = r.time;
  j["phase"] = phase_name(r.phase);
  j["qp"] = qp::to_string(r.qp_status);
  j["held"] = r.held_torque;
  j["leaves"] = r.rmp_leaves;
  j["clearance"] = r.clearance;
  j["dyn_residual"] = r.dynamics_residual;
  j["mpc_fallback"] = r.mpc_fallback;
  j["tau"] = std::vector<double>(r.tau.data(), r.tau.data() + r.tau.size());
  j["fr"] = std::vector<double>(r.fr.data(), r.fr.data() + r.fr.size());
  j["swing_target"] = {r.swing_target.x(), r.swing_target.y(), r.swing_target.z()};
  auto& lv = j["levels"] = nlohmann::json::array();
  for (const auto& l : r.levels) lv.push_back({{"name", l.name}, {"rank", l.rank}, {"residual", l.residual}});
  return j.dump();
}

struct BipedController::Estimate {
  KinematicsCache kin;
  DynamicsTerms dyn;
  Eigen::LLT<MatX> llt;
  Vec3 com;
  Vec3 com_vel;
  Mat3 R;
  Vec3 omega;  // world
  std::array<Vec3, 2> foot;
  PhaseInfo phase;
};

namespace {

Vec3 rpy_of(const Mat3& R) {
  return Vec3(std::atan2(R(2, 1), R(2, 2)), std::asin(std::clamp(-R(2, 0), -1.0, 1.0)), std::atan2(R(1, 0), R(0, 0)));
}

Vec3 rotation_log(const Mat3& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

int side_index(Side s) { return static_cast<int>(s); }

}  // namespace

BipedController::BipedController(const RobotModel& model, ControllerConfig config)
    : model_(&model), config_(std::move(config)), gait_(config_.gait) {
  config_.validate();
  for (Side s : {Side::Left, Side::Right}) {
    const auto n = biped::leg_names(s);
    foot_[side_index(s)] = model.frame(n.foot);
    shank_[side_index(s)] = model.capsule_index(n.shank_capsule);
  }
  base_ = model.frame("base");
  config_.srb.mass = model.total_mass();
  config_.srb.mu = config_.friction_mu;
  config_.srb.fz_max = config_.fz_max;
}

void BipedController::reset(const RobotState& s, double t0) {
  t0_ = t0;
  phase_key_ = -1;
  last_mpc_ = -1e9;
  replanned_ = false;
  qp_failures_ = consecutive_failures_ = completed_steps_ = 0;
  footholds_.clear();
  tau_prev_ = VecX::Zero(static_cast<int>(model_->actuated_velocity_indices().size()));

  const auto kin = model_->kinematics(s);
  const Vec3 com = model_->center_of_mass(kin);
  com_height_ = com.z() + (config_.base_height - s.base_position.z());
  yaw_ = rpy_of(kin.R[0]).z();
  for (int i = 0; i < 2; ++i) landing_[i] = model_->frame_position(kin, foot_[i]);

  // Composite inertia about the CoM from the base block of the mass matrix.
  const MatX A = model_->mass_matrix(kin);
  const double m = A(3, 3);
  const Mat3 mc = A.block<3, 3>(0, 3);
  const Vec3 c(mc(2, 1) / m, mc(0, 2) / m, mc(1, 0) / m);
  config_.srb.inertia = A.topLeftCorner<3, 3>() - m * skew(c) * skew(c).transpose();
}

void BipedController::on_phase_change(const PhaseInfo& ph, const Estimate& e, double t) {
  if (is_swing(ph.phase)) {
    const Side s = moving_side(ph.phase);
    Vec3 start = e.foot[side_index(s)];
    Vec3 target = start;
    target.z() = config_.swing_target_z;
    swing_ = SwingTrajectory(t, t + ph.remaining(), start, target, config_.swing_apex);
    replanned_ = false;
  }
  if (ph.phase == Phase::DualSupport1 || ph.phase == Phase::DualSupport2) {
    if (phase_key_ >= 0) ++completed_steps_;
    for (int i = 0; i < 2; ++i) landing_[i] = e.foot[i];
  }
}

void BipedController::plan_forces(const Estimate& e, double tau_g) {
  const auto& p = config_.srb;
  const PhaseInfo now = e.phase;
  std::vector<SrbStep> steps(p.horizon);
  SrbState ref;
  ref.rpy = Vec3(0.0, 0.0, yaw_);
  ref.pos = Vec3(e.com.x(), e.com.y(), com_height_);
  for (int k = 0; k < p.horizon; ++k) {
    const PhaseInfo ph = k == 0 ? now : gait_.at(tau_g + k * p.dt);
    SrbStep& st = steps[k];
    for (int i = 0; i < 2; ++i) {
      st.contact[i] = ph.contact[i];
      st.load[i] = ph.load[i];
      Vec3 f = e.foot[i];
      // A foot in the air is expected at its swing target once it lands.
      if (!now.contact[i] && (k * p.dt >= now.remaining())) f = swing_.target();
      f.z() = 0.0;
      st.foot[i] = f;
    }
    st.reference = ref;
  }
  SrbState x0;
  x0.rpy = rpy_of(e.R);
  x0.pos = e.com;
  x0.omega = e.omega;
  x0.vel = e.com_vel;
  const SrbPlan plan = srb_reaction_forces(x0, steps, p);
  f_ref_ = plan.forces.front();
  mpc_fallback_ = plan.fallback;
}

VecX BipedController::update(const RobotState& s, double t) {
  const RobotModel& m = *model_;
  const int nv = m.nv();
  const double tau_g = t - t0_;

  Estimate e;
  e.kin = m.kinematics(s);
  e.dyn = m.dynamics(e.kin);
  e.llt.compute(e.dyn.A);
  e.com = m.center_of_mass(e.kin);
  e.com_vel = m.com_jacobian(e.kin) * s.velocity;
  e.R = e.kin.R[0];
  e.omega = e.kin.omega[0];
  for (int i = 0; i < 2; ++i) e.foot[i] = m.frame_position(e.kin, foot_[i]);
  e.phase = gait_.at(tau_g);
  const PhaseInfo& ph = e.phase;

  const long cycle = static_cast<long>(std::floor(tau_g / config_.gait.period + 1e-12));
  const long key = cycle * kNumPhases + static_cast<long>(ph.phase);
  bool replan_forces = tau_g - last_mpc_ >= config_.mpc_period - 1e-9;
  if (key != phase_key_) {
    on_phase_change(ph, e, t);
    phase_key_ = key;
    replan_forces = true;
  }

  const bool swinging = is_swing(ph.phase);
  const Side swing_side = moving_side(ph.phase);
  const int sw = side_index(swing_side);
  const int st = 1 - sw;

  if (swinging && !replanned_ && ph.progress() >= 0.5) {
    const Vec3 raw = tvr_plan(e.com.head<2>(), e.com_vel.head<2>(), e.foot[st], swing_side, ph.remaining(), config_.tvr);
    Vec3 target = clamp_step(raw, e.foot[st], swing_side, config_.region());
    // Crossed feet at the same sagittal position would put the shanks through each other.
    const double out = biped::lateral_sign(swing_side) * (target.y() - e.foot[st].y());
    const double dx = target.x() - e.foot[st].x();
    if (out < config_.crossing_band && std::abs(dx) < config_.crossing_setback)
      target.x() = e.foot[st].x() - config_.crossing_setback;
    target.z() = config_.swing_target_z;
    swing_.retarget(t, target);
    footholds_.push_back({t, swing_side, target, raw});
    replanned_ = true;
  }

  if (replan_forces) {
    plan_forces(e, tau_g);
    last_mpc_ = tau_g;
  }

  // Contact constraint.
  std::vector<int> contacts;
  for (int i = 0; i < 2; ++i)
    if (ph.contact[i]) contacts.push_back(i);
  const int nc = static_cast<int>(contacts.size());
  wbc::ContactConstraint cc{MatX(3 * nc, nv), VecX(3 * nc)};
  for (int k = 0; k < nc; ++k) {
    cc.Jc.middleRows(3 * k, 3) = m.point_jacobian(e.kin, foot_[contacts[k]]);
    cc.Jcdot_qdot.segment<3>(3 * k) = m.jdot_qdot(e.kin, foot_[contacts[k]]).tail<3>();
  }

  // Base tasks.
  const MatX Jb = m.frame_jacobian(e.kin, base_);
  const Vec6 Jb_dot = m.jdot_qdot(e.kin, base_);
  const Mat3 R_des = Eigen::AngleAxisd(yaw_, Vec3::UnitZ()).toRotationMatrix();
  const Vec3 rot_err = rotation_log(R_des * e.R.transpose());
  const Vec3 base_vel = Jb.bottomRows(3) * s.velocity;

  Vec3 total_force = Vec3::Zero();
  for (int i = 0; i < 2; ++i) total_force += f_ref_[i];
  Vec3 lin_cmd = total_force / m.total_mass() + m.gravity();
  lin_cmd.head<2>() -= config_.horizontal_damping * base_vel.head<2>();
  lin_cmd.z() = config_.height.kp * (config_.base_height - s.base_position.z()) - config_.height.kd * base_vel.z();

  std::array<wbc::TaskLevel, 2> tasks{
      wbc::TaskLevel{"orientation", Jb.topRows(3), Jb_dot.head<3>(),
                     config_.orientation.kp * rot_err - config_.orientation.kd * e.omega},
      wbc::TaskLevel{"position", Jb.bottomRows(3), Jb_dot.tail<3>(), lin_cmd}};
  const wbc::Projection proj = wbc::project_tasks(cc, tasks, e.llt);

  // Swing-leg RMP tree in the remaining null space.
  std::vector<rmp::ChildRmp> leaves;
  const rmp::CapsuleDistanceMap dmap(shank_[0], shank_[1]);
  const rmp::TaskMapValue dist = dmap.evaluate(m, e.kin, s);
  if (swinging) {
    const rmp::PointMap fmap(foot_[sw]);
    const rmp::TaskMapValue fv = fmap.evaluate(m, e.kin, s);
    const Kinematic3 ref = swing_.eval(t);
    rmp::AttractorParams ap{Mat3::Identity() * config_.swing.kp, Mat3::Identity() * config_.swing.kd, ref.pos, ref.vel,
                            ref.acc};
    const MatX Lambda = linalg::operational_inertia(fv.J, e.llt);
    leaves.push_back({rmp::to_natural(rmp::attractor_rmp(fv.x, fv.xd, ap, Lambda)), fv.J, fv.Jdot_qdot});
    if (config_.collision_leaf())
      leaves.push_back({rmp::to_natural(rmp::collision_rmp(dist.x[0], dist.xd[0], config_.collision)), dist.J,
                        dist.Jdot_qdot});
    if (config_.apf_leaf())
      leaves.push_back({rmp::to_natural(wbc::apf_rmp(dist.x[0], config_.apf)), dist.J, dist.Jdot_qdot});
  }
  VecX qdd_cmd = proj.qdd;
  if (!leaves.empty()) {
    const rmp::NaturalRmp root = rmp::pullback(leaves, nv);
    qdd_cmd = wbc::final_accel(proj.qdd, proj.N, wbc::modified_pullback(root, proj.N, proj.qdd));
  }

  // Reaction-force relaxation and torques.
  wbc::WbcQpInput in;
  in.A = e.dyn.A;
  in.bias = e.dyn.bias;
  in.S_a = e.dyn.S_a;
  in.Jc = cc.Jc;
  in.qdd_cmd = qdd_cmd;
  in.f_ref = VecX(3 * nc);
  for (int k = 0; k < nc; ++k) {
    const int i = contacts[k];
    in.f_ref.segment<3>(3 * k) = f_ref_[i];
    in.bounds.push_back({config_.friction_mu, 0.0, config_.fz_max * std::clamp(ph.load[i], 0.0, 1.0)});
  }
  in.Q1 = MatX::Identity(3 * nc, 3 * nc) * config_.force_weight;
  in.Q2 = MatX::Identity(6, 6) * config_.accel_weight;
  const wbc::WbcQpOutput out = wbc::solve_wbc_qp(in);

  record_ = {};
  record_.time = t;
  record_.phase = ph.phase;
  record_.qp_status = out.status;
  record_.levels = proj.levels;
  record_.rmp_leaves = static_cast<int>(leaves.size());
  record_.clearance = dist.x[0];
  record_.swing_target = swing_.target();
  record_.mpc_fallback = mpc_fallback_;
  if (out.ok() && out.tau.allFinite()) {
    tau_prev_ = out.tau;
    consecutive_failures_ = 0;
    record_.fr = out.fr;
    record_.dynamics_residual = out.dynamics_residual;
  } else {
    ++qp_failures_;
    ++consecutive_failures_;
    record_.held_torque = true;
  }
  record_.tau = tau_prev_;
  return tau_prev_;
}

}  // namespace rmpwbc::control
