#include "rmpwbc/srb_planner.hpp"

#include <algorithm>
#include <cmath>

#include "rmpwbc/wbc.hpp"

namespace rmpwbc::locomotion {
namespace {

constexpr double kLoadEps = 1e-6;

bool pushes(const SrbStep& s, int foot) { return s.contact[foot] && s.load[foot] > kLoadEps; }

int num_pushing(const SrbStep& s) { return pushes(s, 0) + pushes(s, 1); }

Mat3 yaw_rotation(double yaw) { return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix(); }

}  // namespace

void SrbParams::validate() const {
  if (!(mass > 0.0) || !(dt > 0.0) || horizon < 1 || !(mu > 0.0) || !(fz_max > 0.0))
    throw ConfigError("invalid reaction-force planner parameters");
  for (double w : state_weights)
    if (w < 0.0) throw ConfigError("planner state weights must be non-negative");
  if (!(force_weight > 0.0)) throw ConfigError("planner force weight must be positive");
}

VecX srb_vector(const SrbState& s) {
  VecX x(12);
  x << s.rpy, s.pos, s.omega, s.vel;
  return x;
}

SrbDiscrete srb_discretize(const SrbParams& p, double yaw, const Vec3& com_ref, const SrbStep& step) {
  const Mat3 Rz = yaw_rotation(yaw);
  const Mat3 I_world_inv = (Rz * p.inertia * Rz.transpose()).inverse();
  MatX Ac = MatX::Zero(12, 12);
  Ac.block<3, 3>(0, 6) = Rz.transpose();
  Ac.block<3, 3>(3, 9) = Mat3::Identity();
  const int nu = 3 * num_pushing(step);
  MatX Bc = MatX::Zero(12, nu);
  int col = 0;
  for (int f = 0; f < 2; ++f) {
    if (!pushes(step, f)) continue;
    Bc.block<3, 3>(6, col) = I_world_inv * skew(step.foot[f] - com_ref);
    Bc.block<3, 3>(9, col) = Mat3::Identity() / p.mass;
    col += 3;
  }
  SrbDiscrete d;
  d.A = MatX::Identity(12, 12) + p.dt * Ac;
  d.B = p.dt * Bc;
  d.c = VecX::Zero(12);
  d.c[11] = -p.gravity * p.dt;
  return d;
}

std::array<Vec3, 2> static_force_split(const Vec3& com, const std::array<Vec3, 2>& feet,
                                       const std::array<bool, 2>& contact, double mass, double gravity) {
  std::array<Vec3, 2> out{Vec3::Zero(), Vec3::Zero()};
  const double weight = mass * gravity;
  if (contact[0] && contact[1]) {
    const double d0 = (feet[0] - com).head<2>().norm();
    const double d1 = (feet[1] - com).head<2>().norm();
    const double w0 = d0 + d1 > 1e-12 ? d1 / (d0 + d1) : 0.5;
    out[0].z() = w0 * weight;
    out[1].z() = (1.0 - w0) * weight;
  } else {
    for (int f = 0; f < 2; ++f)
      if (contact[f]) out[f].z() = weight;
  }
  return out;
}

SrbPlan srb_reaction_forces(const SrbState& x0, std::span<const SrbStep> steps, const SrbParams& p) {
  const int H = static_cast<int>(steps.size());
  if (H == 0) throw DimensionError("srb_reaction_forces: empty horizon");

  std::vector<int> offset(H + 1, 0);
  for (int k = 0; k < H; ++k) offset[k + 1] = offset[k] + 3 * num_pushing(steps[k]);
  const int nu = offset[H];

  SrbPlan plan;
  plan.forces.assign(H, {Vec3::Zero(), Vec3::Zero()});
  auto fall_back = [&](qp::Status status) {
    plan.status = status;
    plan.fallback = true;
    for (int k = 0; k < H; ++k) {
      std::array<bool, 2> c{pushes(steps[k], 0), pushes(steps[k], 1)};
      plan.forces[k] = static_force_split(x0.pos, steps[k].foot, c, p.mass, p.gravity);
    }
    return plan;
  };
  if (nu == 0) return fall_back(qp::Status::Infeasible);

  // Prediction X = free + G U, stacked over k = 1..H.
  const double yaw = x0.rpy.z();
  std::vector<SrbDiscrete> model;
  model.reserve(H);
  for (int k = 0; k < H; ++k) model.push_back(srb_discretize(p, yaw, steps[k].reference.pos, steps[k]));
  const MatX& A = model.front().A;  // yaw-only linearization: A is the same for every interval

  VecX free(12 * H);
  MatX G = MatX::Zero(12 * H, nu);
  VecX x = srb_vector(x0);
  for (int k = 0; k < H; ++k) {
    x = A * x + model[k].c;
    free.segment<12>(12 * k) = x;
    const int cols = offset[k + 1] - offset[k];
    if (cols == 0) continue;
    MatX block = model[k].B;
    G.block(12 * k, offset[k], 12, cols) = block;
    for (int j = k + 1; j < H; ++j) {
      block = A * block;
      G.block(12 * j, offset[k], 12, cols) = block;
    }
  }

  VecX qdiag(12 * H);
  VecX ref(12 * H);
  for (int k = 0; k < H; ++k) {
    for (int i = 0; i < 12; ++i) qdiag[12 * k + i] = p.state_weights[i];
    ref.segment<12>(12 * k) = srb_vector(steps[k].reference);
  }

  qp::Problem P;
  const MatX QG = qdiag.asDiagonal() * G;
  P.H = 2.0 * (G.transpose() * QG);
  P.H.diagonal().array() += 2.0 * p.force_weight;
  P.g = 2.0 * QG.transpose() * (free - ref);
  // Force regularization is taken about the static weight split so an
  // equilibrium reference is reproduced exactly.
  for (int k = 0; k < H; ++k) {
    const std::array<bool, 2> c{pushes(steps[k], 0), pushes(steps[k], 1)};
    const auto split = static_force_split(steps[k].reference.pos, steps[k].foot, c, p.mass, p.gravity);
    int col = offset[k];
    for (int f = 0; f < 2; ++f) {
      if (!c[f]) continue;
      P.g.segment<3>(col) -= 2.0 * p.force_weight * split[f];
      col += 3;
    }
  }
  P.Aeq = MatX(0, nu);
  P.beq = VecX(0);

  std::vector<wbc::ContactForceBounds> bounds;
  for (int k = 0; k < H; ++k)
    for (int f = 0; f < 2; ++f)
      if (pushes(steps[k], f)) bounds.push_back({p.mu, 0.0, p.fz_max * std::clamp(steps[k].load[f], 0.0, 1.0)});
  wbc::friction_constraints(bounds, P.Ain, P.bin);

  const auto res = qp::solve(P);
  if (!res.ok()) return fall_back(res.status);
  plan.status = res.status;
  plan.objective = res.objective;
  for (int k = 0; k < H; ++k) {
    int col = offset[k];
    for (int f = 0; f < 2; ++f) {
      if (!pushes(steps[k], f)) continue;
      plan.forces[k][f] = res.x.segment<3>(col);
      col += 3;
    }
  }
  return plan;
}

}  // namespace rmpwbc::locomotion
