#pragma once

// Prioritized whole-body control: null-space task projection with the
// contact constraint on top, projected integration of an RMP tree, and the
// reaction-force relaxation QP followed by inverse dynamics.

#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "rmpwbc/model.hpp"
#include "rmpwbc/qp.hpp"
#include "rmpwbc/rmp.hpp"
#include "rmpwbc/types.hpp"

namespace rmpwbc::wbc {

// Stacked contact-point Jacobian (3 rows per point contact) and its bias.
struct ContactConstraint {
  MatX Jc;
  VecX Jcdot_qdot;

  int rows() const { return static_cast<int>(Jc.rows()); }
  static ContactConstraint none(int nv) { return {MatX(0, nv), VecX(0)}; }
};

// One priority level, evaluated at the current state.
struct TaskLevel {
  std::string name;
  MatX J;
  VecX Jdot_qdot;
  VecX xdd_cmd;
};

// xdd = xdd_des + Kp (x_des - x) + Kd (xd_des - xd), with the position error supplied.
VecX pd_command(const VecX& position_error, const VecX& xd, const VecX& xd_des, const VecX& xdd_des, const MatX& Kp,
                const MatX& Kd);

struct LevelReport {
  std::string name;
  int rows = 0;
  int rank = 0;
  double residual = 0.0;  // |J qdd_i + Jdot qd - xdd_cmd|
};

struct Projection {
  VecX qdd;                       // qdd_k
  MatX N;                         // N_k
  std::vector<VecX> level_qdd;    // qdd_0 .. qdd_k
  std::vector<MatX> level_N;      // N_0 .. N_k
  std::vector<MatX> level_Jpre;   // J_{i|pre} for i = 1..k
  std::vector<LevelReport> levels;  // contact first

  int num_levels() const { return static_cast<int>(level_qdd.size()); }
};

// Level 0: qdd_0 = Jc_bar (-Jcdot qd), N_0 = I - Jc_bar Jc.
Projection contact_accel(const ContactConstraint& contact, const Eigen::LLT<MatX>& A_llt);

Projection project_tasks(const ContactConstraint& contact, std::span<const TaskLevel> tasks, const MatX& A);
Projection project_tasks(const ContactConstraint& contact, std::span<const TaskLevel> tasks,
                         const Eigen::LLT<MatX>& A_llt);

// M_rmp = N^T M N, f_rmp = N^T (f - M qdd_k).
rmp::NaturalRmp modified_pullback(const rmp::NaturalRmp& root, const MatX& N, const VecX& qdd_k);

// qdd = qdd_k + N M_rmp^+ f_rmp.
VecX final_accel(const VecX& qdd_k, const MatX& N, const rmp::NaturalRmp& projected);

// Per-contact bounds on the reaction force in the world frame (flat ground).
struct ContactForceBounds {
  double mu = 0.7;
  double fz_min = 0.0;
  double fz_max = std::numeric_limits<double>::infinity();
};

// Rows of W and lower bounds b for W f >= b over stacked contact forces.
void friction_constraints(std::span<const ContactForceBounds> bounds, MatX& W, VecX& b);

struct WbcQpInput {
  MatX A;
  VecX bias;
  MatX S_a;  // actuated selection, n x nv
  MatX Jc;   // 3 nc x nv
  VecX qdd_cmd;
  VecX f_ref;  // planned reaction forces, 3 nc
  std::vector<ContactForceBounds> bounds;
  MatX Q1;  // 3 nc x 3 nc
  MatX Q2;  // 6 x 6
};

struct WbcQpOutput {
  qp::Status status = qp::Status::Infeasible;
  VecX qdd;
  VecX fr;
  VecX tau;
  VecX delta_f;
  VecX delta_fr;
  std::vector<int> active_constraints;
  double dynamics_residual = 0.0;
  double objective = 0.0;

  bool ok() const { return status == qp::Status::Solved; }
};

// Relaxes the floating-base acceleration and reaction forces so the floating
// base dynamics hold under the friction constraints, then extracts torques.
WbcQpOutput solve_wbc_qp(const WbcQpInput& in);

// tau = S_a (A qdd + bias - Jc^T fr)
VecX inverse_dynamics(const MatX& A, const VecX& bias, const MatX& S_a, const MatX& Jc, const VecX& qdd,
                      const VecX& fr);

struct ApfParams {
  double k_p = 1000.0;
  double l_p = 0.015;
};

// Purely repulsive potential-field leaf on the capsule distance: a =
// k_p exp(-x / l_p) with a unit metric, no velocity dependence.
rmp::CanonicalRmp apf_rmp(double x, const ApfParams& params);
// The same acceleration expressed along the witness normal.
Vec3 apf_baseline_accel(const WitnessPair& witness, const ApfParams& params);

}  // namespace rmpwbc::wbc
