#pragma once

// Walking controller for the point-foot biped. Each tick: gait phase, footstep
// replanning at mid-swing, reaction-force reference, prioritized projection
// (contacts, base orientation, base position), the swing-leg RMP tree in the
// remaining null space, and the reaction-force relaxation QP.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rmpwbc/biped.hpp"
#include "rmpwbc/locomotion.hpp"
#include "rmpwbc/rmp.hpp"
#include "rmpwbc/srb_planner.hpp"
#include "rmpwbc/wbc.hpp"

namespace rmpwbc::control {

using biped::Side;

// proposed: extended region + collision RMP; baseline: restricted region;
// no_avoidance: extended region without a collision leaf; apf: extended region
// with a potential-field leaf.
enum class Strategy { Proposed, Baseline, NoAvoidance, Apf };
std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view s);

struct Gains {
  double kp = 0.0;
  double kd = 0.0;
};

struct ControllerConfig {
  Strategy strategy = Strategy::Proposed;
  locomotion::GaitParams gait;
  locomotion::TvrParams tvr;
  locomotion::SrbParams srb;
  locomotion::StepRegion restricted = locomotion::StepRegion::restricted();
  locomotion::StepRegion extended = locomotion::StepRegion::extended();
  rmp::CollisionRmpParams collision;
  wbc::ApfParams apf;

  double base_height = 0.45;
  double swing_apex = 0.05;
  double swing_target_z = -0.002;  // slight penetration so touchdown precedes the landing phase
  double mpc_period = 0.03;
  double crossing_band = 0.035;    // outward step offset below which the shanks would touch
  double crossing_setback = 0.06;  // such steps land at least this far behind the stance foot

  Gains orientation{150.0, 20.0};
  Gains height{150.0, 20.0};
  double horizontal_damping = 0.0;  // on base velocity, added to the planned acceleration
  Gains swing{4000.0, 125.0};

  double friction_mu = 0.7;
  double fz_max = 150.0;
  double force_weight = 1.0;   // Q1, per contact force component
  double accel_weight = 100.0; // Q2, per floating-base acceleration component

  void validate() const;
  const locomotion::StepRegion& region() const;
  bool collision_leaf() const { return strategy == Strategy::Proposed; }
  bool apf_leaf() const { return strategy == Strategy::Apf; }
};

// Per-tick diagnostics.
struct ControlRecord {
  double time = 0.0;
  locomotion::Phase phase = locomotion::Phase::DualSupport1;
  qp::Status qp_status = qp::Status::Solved;
  bool held_torque = false;
  std::vector<wbc::LevelReport> levels;
  int rmp_leaves = 0;
  double clearance = 0.0;
  double dynamics_residual = 0.0;
  VecX tau;
  VecX fr;
  Vec3 swing_target = Vec3::Zero();
  bool mpc_fallback = false;
};

std::string to_json_line(const ControlRecord& r);

struct Foothold {
  double time = 0.0;
  Side side = Side::Left;
  Vec3 planned = Vec3::Zero();  // after region clamp
  Vec3 raw = Vec3::Zero();      // planner output
};

class BipedController {
 public:
  BipedController(const RobotModel& model, ControllerConfig config);

  // Starts the gait clock at time t0 from state s.
  void reset(const RobotState& s, double t0 = 0.0);
  // Torques for the actuated joints at time t.
  VecX update(const RobotState& s, double t);

  const ControlRecord& last_record() const { return record_; }
  const ControllerConfig& config() const { return config_; }
  const locomotion::GaitSchedule& gait() const { return gait_; }
  const std::vector<Foothold>& footholds() const { return footholds_; }
  int qp_failures() const { return qp_failures_; }
  int consecutive_qp_failures() const { return consecutive_failures_; }
  int completed_steps() const { return completed_steps_; }
  int shank_capsule(Side s) const { return shank_[static_cast<int>(s)]; }
  FrameId foot_frame(Side s) const { return foot_[static_cast<int>(s)]; }

 private:
  struct Estimate;
  void on_phase_change(const locomotion::PhaseInfo& ph, const Estimate& e, double t);
  void plan_forces(const Estimate& e, double tau_g);

  const RobotModel* model_;
  ControllerConfig config_;
  locomotion::GaitSchedule gait_;
  std::array<FrameId, 2> foot_;
  std::array<int, 2> shank_;
  FrameId base_;

  double t0_ = 0.0;
  long phase_key_ = -1;
  double last_mpc_ = -1e9;
  double com_height_ = 0.0;
  double yaw_ = 0.0;
  locomotion::SwingTrajectory swing_;
  bool replanned_ = false;
  std::array<Vec3, 2> f_ref_{Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, 2> landing_{Vec3::Zero(), Vec3::Zero()};
  VecX tau_prev_;
  int qp_failures_ = 0;
  int consecutive_failures_ = 0;
  int completed_steps_ = 0;
  bool mpc_fallback_ = false;
  std::vector<Foothold> footholds_;
  ControlRecord record_;
};

}  // namespace rmpwbc::control
