#pragma once

#include <array>
#include <string_view>

#include "rmpwbc/biped.hpp"
#include "rmpwbc/types.hpp"

namespace rmpwbc::locomotion {

using biped::Side;

// One gait cycle in order. Transitions ramp the load on the foot that is
// about to lift off or has just landed.
enum class Phase {
  DualSupport1,
  RightLiftoff,
  RightSwing,
  RightLanding,
  DualSupport2,
  LeftLiftoff,
  LeftSwing,
  LeftLanding,
};
constexpr int kNumPhases = 8;

std::string_view phase_name(Phase p);
bool is_swing(Phase p);
bool is_transition(Phase p);

// Push timing tags: mid dual support 1, mid right swing, mid dual support 2,
// mid left swing.
enum class TimingTag { T1, T2, T3, T4 };
std::string_view tag_name(TimingTag t);
TimingTag parse_tag(std::string_view s);

struct GaitParams {
  double period = 0.6;
  double dual_support = 0.024;
  double transition = 0.018;

  double swing() const { return 0.5 * period - dual_support - 2.0 * transition; }
  void validate() const;
};

struct PhaseInfo {
  Phase phase = Phase::DualSupport1;
  double start = 0.0;     // within the cycle
  double duration = 0.0;
  double elapsed = 0.0;   // time since phase start
  std::array<bool, 2> contact{true, true};  // indexed by Side
  std::array<double, 2> load{1.0, 1.0};     // allowed fraction of full normal load, in [0, 1]

  double progress() const { return duration > 0.0 ? elapsed / duration : 1.0; }
  double remaining() const { return duration - elapsed; }
};

class GaitSchedule {
 public:
  explicit GaitSchedule(GaitParams params = {});

  const GaitParams& params() const { return params_; }
  double clock() const { return clock_; }
  void reset(double clock = 0.0) { clock_ = clock; }

  // Advances the clock by dt and returns the phase at the new time.
  PhaseInfo step(double dt);
  PhaseInfo at(double t) const;
  PhaseInfo current() const { return at(clock_); }

  double duration(Phase p) const;
  double phase_start(Phase p) const;
  // Time within the cycle of a timing tag.
  double tag_time(TimingTag tag) const;

 private:
  GaitParams params_;
  double clock_ = 0.0;
};

// Swing side for a swing or transition phase; Left for dual support.
Side moving_side(Phase p);

struct TvrParams {
  double com_height = 0.45;
  // Time after touchdown at which the predicted CoM velocity reverses.
  double reversal_time_sagittal = 0.3;
  double reversal_time_lateral = 0.3;
  double lateral_bias = 0.022;  // outward offset added on the swing side
  double gravity = kGravity;

  double omega() const;
  double kappa_sagittal() const;
  double kappa_lateral() const;
  void validate() const;
};

// Gain that makes the linear inverted pendulum reverse velocity `t_rev` after touchdown.
double kappa_for_reversal(double omega, double t_rev);

struct Lipm2 {
  Vec2 pos;
  Vec2 vel;
};

// Closed-form linear inverted pendulum about a fixed pivot.
Lipm2 lipm_rollout(const Lipm2& s, const Vec2& pivot, double omega, double t);

// Step target for the swing foot from the CoM state predicted at touchdown:
// p = com + kappa * v + bias (lateral bias towards the swing side).
Vec3 tvr_plan(const Vec2& com_pos, const Vec2& com_vel, const Vec3& stance_foot, Side swing_side,
              double time_to_touchdown, const TvrParams& params);

enum class RegionMode { Restricted, Extended };
std::string_view region_name(RegionMode m);

// Box relative to the stance foot. `outward` is the lateral offset of the
// swing foot from the stance foot measured towards the swing side; negative
// values cross the midline under the stance foot.
struct StepRegion {
  RegionMode mode = RegionMode::Extended;
  double sagittal_min = -0.2;
  double sagittal_max = 0.2;
  double outward_min = -0.15;
  double outward_max = 0.30;

  static StepRegion restricted();
  static StepRegion extended();
  void validate() const;
};

Vec3 clamp_step(const Vec3& target, const Vec3& stance_foot, Side swing_side, const StepRegion& region);
bool inside(const Vec3& target, const Vec3& stance_foot, Side swing_side, const StepRegion& region, double tol = 1e-12);

struct Kinematic1 {
  double pos = 0.0;
  double vel = 0.0;
  double acc = 0.0;
};

// Quintic between two boundary states over [0, T].
struct Quintic {
  std::array<double, 6> c{};  // ascending powers

  static Quintic fit(const Kinematic1& a, const Kinematic1& b, double T);
  Kinematic1 eval(double t) const;
  double jerk_cost(double T) const;  // integral of squared third derivative
};

struct Kinematic3 {
  Vec3 pos = Vec3::Zero();
  Vec3 vel = Vec3::Zero();
  Vec3 acc = Vec3::Zero();
};

// Minimum-jerk rest-to-rest motion; the vertical axis goes through `apex`
// above the higher endpoint at mid-time. t outside [t0, tf] clamps.
Kinematic3 min_jerk(double t, double t0, double tf, const Vec3& p0, const Vec3& pf, double apex);

// Swing foot reference. Horizontal axes are one quintic that can be refit
// towards a new target mid-flight; the vertical axis is two quintics meeting at
// the apex with zero vertical velocity.
class SwingTrajectory {
 public:
  SwingTrajectory() = default;
  SwingTrajectory(double t0, double tf, const Vec3& start, const Vec3& target, double apex);

  Kinematic3 eval(double t) const;
  // Keeps the reference continuous at time t and re-aims the horizontal motion.
  void retarget(double t, const Vec3& target);

  double t0() const { return t0_; }
  double tf() const { return tf_; }
  const Vec3& target() const { return target_; }

 private:
  double t0_ = 0.0, tf_ = 1.0;
  double th_ = 0.0;  // start of the current horizontal segment
  Vec3 target_ = Vec3::Zero();
  std::array<Quintic, 2> horizontal_;
  Quintic up_, down_;
};

}  // namespace rmpwbc::locomotion
