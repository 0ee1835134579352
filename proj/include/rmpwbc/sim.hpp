#pragma once

// Rigid-body simulation of the biped on a flat ground plane with penalty
// contact at the foot points, push disturbances and failure monitoring.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "rmpwbc/locomotion.hpp"
#include "rmpwbc/model.hpp"

namespace rmpwbc::sim {

struct ContactParams {
  double stiffness = 1e4;  // N/m, normal and tangential
  double damping = 200.0;  // N s/m
  double mu = 0.7;

  void validate() const;
};

struct SimParams {
  double dt = 1e-3;
  ContactParams contact;
  double max_speed = 200.0;  // any velocity coordinate beyond this aborts the run

  void validate() const;
};

struct FootContact {
  bool active = false;
  bool sliding = false;
  Vec3 anchor = Vec3::Zero();  // tangential spring rest point
  Vec3 force = Vec3::Zero();   // world frame, on the foot
};

// Thrown when the state stops being finite.
class SimulationAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SimWorld {
 public:
  SimWorld(const RobotModel& model, RobotState state, SimParams params = {},
           std::array<std::string, 2> foot_frames = {"l_foot", "r_foot"});

  // One integrator step. `base_force` is a world-frame force at the base origin.
  void step(const VecX& tau, const Vec3& base_force = Vec3::Zero());

  const RobotModel& model() const { return *model_; }
  const RobotState& state() const { return state_; }
  double time() const { return time_; }
  const SimParams& params() const { return params_; }
  const std::array<FootContact, 2>& contacts() const { return contacts_; }
  FrameId foot_frame(int i) const { return feet_[i]; }

  void set_state(const RobotState& s);

 private:
  const RobotModel* model_;
  RobotState state_;
  SimParams params_;
  std::array<FrameId, 2> feet_;
  std::array<FootContact, 2> contacts_;
  double time_ = 0.0;
  bool started_ = false;
};

struct Disturbance {
  double magnitude = 0.0;  // N
  double angle = 0.0;      // rad, in the base transverse plane, 0 = forward
  locomotion::TimingTag tag = locomotion::TimingTag::T1;
  double duration = 0.020;

  void validate() const;
};

// Base-frame push active over [t_start, t_start + duration).
Vec3 disturbance_force(const Disturbance& d, double t, double t_start);

enum class FailureCause { None, BaseTooLow, SelfCollision, ControllerFailure };
std::string_view failure_name(FailureCause c);
FailureCause parse_failure(std::string_view s);

struct FailureCriteria {
  double min_base_height = 0.25;
  double min_clearance = 0.0;
};

// Failure check for one sampled instant.
FailureCause detect_failure(double base_height, double clearance, const FailureCriteria& c = {});

struct TrialOutcome {
  bool success = true;
  FailureCause failure_cause = FailureCause::None;
  double failure_time = -1.0;
  double min_base_height = 0.0;
  double min_clearance = 0.0;  // over the monitored window
  int steps_taken = 0;
  int qp_failures = 0;
  Disturbance disturbance;
  double push_time = 0.0;
};

}  // namespace rmpwbc::sim
