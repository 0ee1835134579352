#include "rmpwbc/locomotion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rmpwbc::locomotion {

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::DualSupport1: return "dual_support_1";
    case Phase::RightLiftoff: return "right_liftoff";
    case Phase::RightSwing: return "right_swing";
    case Phase::RightLanding: return "right_landing";
    case Phase::DualSupport2: return "dual_support_2";
    case Phase::LeftLiftoff: return "left_liftoff";
    case Phase::LeftSwing: return "left_swing";
    case Phase::LeftLanding: return "left_landing";
  }
  return "unknown";
}

bool is_swing(Phase p) { return p == Phase::RightSwing || p == Phase::LeftSwing; }

bool is_transition(Phase p) {
  return p == Phase::RightLiftoff || p == Phase::RightLanding || p == Phase::LeftLiftoff || p == Phase::LeftLanding;
}

Side moving_side(Phase p) {
  switch (p) {
    case Phase::RightLiftoff:
    case Phase::RightSwing:
    case Phase::RightLanding: return Side::Right;
    default: return Side::Left;
  }
}

std::string_view tag_name(TimingTag t) {
  static constexpr std::string_view names[] = {"T1", "T2", "T3", "T4"};
  return names[static_cast<int>(t)];
}

TimingTag parse_tag(std::string_view s) {
  for (TimingTag t : {TimingTag::T1, TimingTag::T2, TimingTag::T3, TimingTag::T4})
    if (tag_name(t) == s) return t;
  throw ConfigError("unknown timing tag '" + std::string(s) + "'");
}

void GaitParams::validate() const {
  if (!(period > 0.0) || !(dual_support > 0.0) || !(transition > 0.0))
    throw ConfigError("gait durations must be positive");
  if (!(swing() > 0.0)) throw ConfigError("gait period too short for dual support and transitions");
}

GaitSchedule::GaitSchedule(GaitParams params) : params_(params) { params_.validate(); }

double GaitSchedule::duration(Phase p) const {
  if (is_swing(p)) return params_.swing();
  if (is_transition(p)) return params_.transition;
  return params_.dual_support;
}

double GaitSchedule::phase_start(Phase p) const {
  double t = 0.0;
  for (int i = 0; i < static_cast<int>(p); ++i) t += duration(static_cast<Phase>(i));
  return t;
}

double GaitSchedule::tag_time(TimingTag tag) const {
  const Phase p = tag == TimingTag::T1   ? Phase::DualSupport1
                  : tag == TimingTag::T2 ? Phase::RightSwing
                  : tag == TimingTag::T3 ? Phase::DualSupport2
                                         : Phase::LeftSwing;
  return phase_start(p) + 0.5 * duration(p);
}

PhaseInfo GaitSchedule::at(double t) const {
  // Small slack so accumulated clock round-off lands on the intended phase.
  constexpr double kSlack = 1e-9;
  double tc = std::fmod(t + kSlack, params_.period);
  if (tc < 0.0) tc += params_.period;
  PhaseInfo info;
  double start = 0.0;
  for (int i = 0; i < kNumPhases; ++i) {
    const Phase p = static_cast<Phase>(i);
    const double d = duration(p);
    if (tc < start + d || i == kNumPhases - 1) {
      info.phase = p;
      info.start = start;
      info.duration = d;
      info.elapsed = std::clamp(tc - kSlack - start, 0.0, d);
      break;
    }
    start += d;
  }
  const int mv = static_cast<int>(moving_side(info.phase));
  const double s = info.progress();
  switch (info.phase) {
    case Phase::RightLiftoff:
    case Phase::LeftLiftoff: info.load[mv] = 1.0 - s; break;
    case Phase::RightLanding:
    case Phase::LeftLanding: info.load[mv] = s; break;
    case Phase::RightSwing:
    case Phase::LeftSwing:
      info.contact[mv] = false;
      info.load[mv] = 0.0;
      break;
    default: break;
  }
  return info;
}

PhaseInfo GaitSchedule::step(double dt) {
  clock_ += dt;
  return at(clock_);
}

double TvrParams::omega() const { return std::sqrt(gravity / com_height); }
double TvrParams::kappa_sagittal() const { return kappa_for_reversal(omega(), reversal_time_sagittal); }
double TvrParams::kappa_lateral() const { return kappa_for_reversal(omega(), reversal_time_lateral); }

void TvrParams::validate() const {
  if (!(com_height > 0.0)) throw ConfigError("TVR CoM height must be positive");
  if (!(reversal_time_sagittal > 0.0) || !(reversal_time_lateral > 0.0))
    throw ConfigError("TVR reversal times must be positive");
}

double kappa_for_reversal(double omega, double t_rev) { return 1.0 / (omega * std::tanh(omega * t_rev)); }

Lipm2 lipm_rollout(const Lipm2& s, const Vec2& pivot, double omega, double t) {
  const double c = std::cosh(omega * t), sh = std::sinh(omega * t);
  const Vec2 r = s.pos - pivot;
  return {pivot + r * c + s.vel * (sh / omega), r * (omega * sh) + s.vel * c};
}

Vec3 tvr_plan(const Vec2& com_pos, const Vec2& com_vel, const Vec3& stance_foot, Side swing_side,
              double time_to_touchdown, const TvrParams& params) {
  const double w = params.omega();
  const Lipm2 td = lipm_rollout({com_pos, com_vel}, stance_foot.head<2>(), w, std::max(time_to_touchdown, 0.0));
  Vec3 target;
  target.x() = td.pos.x() + params.kappa_sagittal() * td.vel.x();
  target.y() = td.pos.y() + params.kappa_lateral() * td.vel.y() + biped::lateral_sign(swing_side) * params.lateral_bias;
  target.z() = stance_foot.z();
  return target;
}

std::string_view region_name(RegionMode m) { return m == RegionMode::Extended ? "extended" : "restricted"; }

StepRegion StepRegion::restricted() { return {RegionMode::Restricted, -0.2, 0.2, 0.08, 0.30}; }
StepRegion StepRegion::extended() { return {RegionMode::Extended, -0.2, 0.2, -0.15, 0.30}; }

void StepRegion::validate() const {
  if (!(sagittal_min <= sagittal_max) || !(outward_min <= outward_max)) throw ConfigError("empty stepping region");
}

Vec3 clamp_step(const Vec3& target, const Vec3& stance_foot, Side swing_side, const StepRegion& region) {
  const double s = biped::lateral_sign(swing_side);
  const double dx = std::clamp(target.x() - stance_foot.x(), region.sagittal_min, region.sagittal_max);
  const double out = std::clamp(s * (target.y() - stance_foot.y()), region.outward_min, region.outward_max);
  return {stance_foot.x() + dx, stance_foot.y() + s * out, target.z()};
}

bool inside(const Vec3& target, const Vec3& stance_foot, Side swing_side, const StepRegion& region, double tol) {
  return (clamp_step(target, stance_foot, swing_side, region) - target).cwiseAbs().maxCoeff() <= tol;
}

Quintic Quintic::fit(const Kinematic1& a, const Kinematic1& b, double T) {
  Quintic q;
  const double h = b.pos - a.pos;
  const double T2 = T * T, T3 = T2 * T;
  q.c[0] = a.pos;
  q.c[1] = a.vel;
  q.c[2] = 0.5 * a.acc;
  q.c[3] = (20.0 * h - (8.0 * b.vel + 12.0 * a.vel) * T - (3.0 * a.acc - b.acc) * T2) / (2.0 * T3);
  q.c[4] = (-30.0 * h + (14.0 * b.vel + 16.0 * a.vel) * T + (3.0 * a.acc - 2.0 * b.acc) * T2) / (2.0 * T3 * T);
  q.c[5] = (12.0 * h - 6.0 * (b.vel + a.vel) * T + (b.acc - a.acc) * T2) / (2.0 * T3 * T2);
  return q;
}

Kinematic1 Quintic::eval(double t) const {
  const auto& k = c;
  return {((((k[5] * t + k[4]) * t + k[3]) * t + k[2]) * t + k[1]) * t + k[0],
          (((5.0 * k[5] * t + 4.0 * k[4]) * t + 3.0 * k[3]) * t + 2.0 * k[2]) * t + k[1],
          ((20.0 * k[5] * t + 12.0 * k[4]) * t + 6.0 * k[3]) * t + 2.0 * k[2]};
}

double Quintic::jerk_cost(double T) const {
  // Jerk is quadratic in t, so three-point Gauss-Legendre is exact for its square.
  static constexpr double nodes[] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr double weights[] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double t = 0.5 * T * (nodes[i] + 1.0);
    const double j = 6.0 * c[3] + 24.0 * c[4] * t + 60.0 * c[5] * t * t;
    s += weights[i] * j * j;
  }
  return 0.5 * T * s;
}

Kinematic3 min_jerk(double t, double t0, double tf, const Vec3& p0, const Vec3& pf, double apex) {
  if (!(tf > t0)) throw ConfigError("min_jerk requires t0 < tf");
  const double T = tf - t0;
  const double tau = std::clamp(t, t0, tf) - t0;
  Kinematic3 out;
  for (int i = 0; i < 2; ++i) {
    const auto k = Quintic::fit({p0[i]}, {pf[i]}, T).eval(tau);
    out.pos[i] = k.pos;
    out.vel[i] = k.vel;
    out.acc[i] = k.acc;
  }
  const double top = std::max(p0.z(), pf.z()) + apex;
  const double half = 0.5 * T;
  const auto k = tau <= half ? Quintic::fit({p0.z()}, {top}, half).eval(tau)
                             : Quintic::fit({top}, {pf.z()}, half).eval(tau - half);
  out.pos.z() = k.pos;
  out.vel.z() = k.vel;
  out.acc.z() = k.acc;
  return out;
}

SwingTrajectory::SwingTrajectory(double t0, double tf, const Vec3& start, const Vec3& target, double apex)
    : t0_(t0), tf_(tf), th_(t0), target_(target) {
  if (!(tf > t0)) throw ConfigError("swing trajectory requires t0 < tf");
  const double T = tf - t0;
  for (int i = 0; i < 2; ++i) horizontal_[i] = Quintic::fit({start[i]}, {target[i]}, T);
  const double top = std::max(start.z(), target.z()) + apex;
  up_ = Quintic::fit({start.z()}, {top}, 0.5 * T);
  down_ = Quintic::fit({top}, {target.z()}, 0.5 * T);
}

Kinematic3 SwingTrajectory::eval(double t) const {
  const double tc = std::clamp(t, t0_, tf_);
  Kinematic3 out;
  for (int i = 0; i < 2; ++i) {
    const auto k = horizontal_[i].eval(tc - th_);
    out.pos[i] = k.pos;
    out.vel[i] = k.vel;
    out.acc[i] = k.acc;
  }
  const double half = 0.5 * (tf_ - t0_);
  const auto k = tc - t0_ <= half ? up_.eval(tc - t0_) : down_.eval(tc - t0_ - half);
  out.pos.z() = k.pos;
  out.vel.z() = k.vel;
  out.acc.z() = k.acc;
  return out;
}

void SwingTrajectory::retarget(double t, const Vec3& target) {
  const double tc = std::clamp(t, t0_, tf_);
  const double remaining = tf_ - tc;
  if (remaining <= 1e-6) return;
  const Kinematic3 now = eval(tc);
  for (int i = 0; i < 2; ++i)
    horizontal_[i] = Quintic::fit({now.pos[i], now.vel[i], now.acc[i]}, {target[i]}, remaining);
  th_ = tc;
  target_.head<2>() = target.head<2>();
}

}  // namespace rmpwbc::locomotion
