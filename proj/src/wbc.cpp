#include "rmpwbc/wbc.hpp"

#include <algorithm>
#include <cmath>

#include "rmpwbc/linalg.hpp"

namespace rmpwbc::wbc {

VecX pd_command(const VecX& position_error, const VecX& xd, const VecX& xd_des, const VecX& xdd_des, const MatX& Kp,
                const MatX& Kd) {
  return xdd_des + Kp * position_error + Kd * (xd_des - xd);
}

Projection contact_accel(const ContactConstraint& contact, const Eigen::LLT<MatX>& A_llt) {
  const int nv = static_cast<int>(A_llt.rows());
  Projection out;
  LevelReport rep{"contact", contact.rows(), 0, 0.0};
  if (contact.rows() == 0) {
    out.qdd = VecX::Zero(nv);
    out.N = MatX::Identity(nv, nv);
  } else {
    if (contact.Jc.cols() != nv || contact.Jcdot_qdot.size() != contact.rows())
      throw DimensionError("contact_accel: contact Jacobian does not match the mass matrix");
    const auto dp = linalg::dyn_pinv(contact.Jc, A_llt);
    out.qdd = -dp.Jbar * contact.Jcdot_qdot;
    out.N = MatX::Identity(nv, nv) - dp.Jbar * contact.Jc;
    rep.rank = dp.rank;
    rep.residual = (contact.Jc * out.qdd + contact.Jcdot_qdot).norm();
  }
  out.level_qdd.push_back(out.qdd);
  out.level_N.push_back(out.N);
  out.levels.push_back(rep);
  return out;
}

Projection project_tasks(const ContactConstraint& contact, std::span<const TaskLevel> tasks,
                         const Eigen::LLT<MatX>& A_llt) {
  const int nv = static_cast<int>(A_llt.rows());
  Projection out = contact_accel(contact, A_llt);
  for (const TaskLevel& t : tasks) {
    const auto m = t.J.rows();
    if (t.J.cols() != nv || t.Jdot_qdot.size() != m || t.xdd_cmd.size() != m)
      throw DimensionError("project_tasks: task '" + t.name + "' has inconsistent dimensions");
    const MatX Jpre = t.J * out.N;
    const auto dp = linalg::dyn_pinv(Jpre, A_llt);
    out.qdd += dp.Jbar * (t.xdd_cmd - t.Jdot_qdot - t.J * out.qdd);
    out.N = out.N * (MatX::Identity(nv, nv) - dp.Jbar * Jpre);
    out.level_qdd.push_back(out.qdd);
    out.level_N.push_back(out.N);
    out.level_Jpre.push_back(Jpre);
    out.levels.push_back({t.name, static_cast<int>(m), dp.rank, (t.J * out.qdd + t.Jdot_qdot - t.xdd_cmd).norm()});
  }
  return out;
}

Projection project_tasks(const ContactConstraint& contact, std::span<const TaskLevel> tasks, const MatX& A) {
  const Eigen::LLT<MatX> llt(A);
  if (llt.info() != Eigen::Success) throw DimensionError("project_tasks: mass matrix is not positive definite");
  return project_tasks(contact, tasks, llt);
}

rmp::NaturalRmp modified_pullback(const rmp::NaturalRmp& root, const MatX& N, const VecX& qdd_k) {
  if (N.rows() != root.dim() || N.cols() != root.dim() || qdd_k.size() != root.dim())
    throw DimensionError("modified_pullback: dimension mismatch");
  rmp::NaturalRmp out;
  const MatX MN = root.M * N;
  out.M = N.transpose() * MN;
  out.M = 0.5 * (out.M + out.M.transpose());
  out.f = N.transpose() * (root.f - root.M * qdd_k);
  return out;
}

VecX final_accel(const VecX& qdd_k, const MatX& N, const rmp::NaturalRmp& projected) {
  return qdd_k + N * (linalg::psd_pinv(projected.M) * projected.f);
}

void friction_constraints(std::span<const ContactForceBounds> bounds, MatX& W, VecX& b) {
  const int nc = static_cast<int>(bounds.size());
  int rows = 0;
  for (const auto& c : bounds) rows += 5 + (std::isfinite(c.fz_max) ? 1 : 0);
  W = MatX::Zero(rows, 3 * nc);
  b = VecX::Zero(rows);
  int r = 0;
  for (int i = 0; i < nc; ++i) {
    const auto& c = bounds[i];
    const int x = 3 * i, y = x + 1, z = x + 2;
    // mu fz -/+ fx >= 0, mu fz -/+ fy >= 0
    for (int axis : {x, y}) {
      for (double sign : {1.0, -1.0}) {
        W(r, z) = c.mu;
        W(r, axis) = -sign;
        ++r;
      }
    }
    W(r, z) = 1.0;
    b[r++] = std::max(c.fz_min, 0.0);
    if (std::isfinite(c.fz_max)) {
      W(r, z) = -1.0;
      b[r++] = -c.fz_max;
    }
  }
}

VecX inverse_dynamics(const MatX& A, const VecX& bias, const MatX& S_a, const MatX& Jc, const VecX& qdd,
                      const VecX& fr) {
  VecX gen = A * qdd + bias;
  if (Jc.rows() > 0) gen -= Jc.transpose() * fr;
  return S_a * gen;
}

WbcQpOutput solve_wbc_qp(const WbcQpInput& in) {
  const int nv = static_cast<int>(in.A.rows());
  const int nf = static_cast<int>(in.Jc.rows());
  if (in.bias.size() != nv || in.qdd_cmd.size() != nv || in.f_ref.size() != nf || 3 * static_cast<int>(in.bounds.size()) != nf ||
      in.Jc.cols() != nv || in.Q2.rows() != 6 || in.Q1.rows() != nf)
    throw DimensionError("solve_wbc_qp: dimension mismatch");

  // Variables: [delta_f (6); delta_fr (nf)].
  const int n = 6 + nf;
  qp::Problem P;
  P.H = MatX::Zero(n, n);
  P.H.topLeftCorner(6, 6) = 2.0 * in.Q2;
  if (nf > 0) P.H.bottomRightCorner(nf, nf) = 2.0 * in.Q1;
  P.H += 1e-10 * MatX::Identity(n, n);
  P.g = VecX::Zero(n);

  const MatX Af = in.A.topRows(6);
  const MatX JcfT = in.Jc.leftCols(6).transpose();
  P.Aeq = MatX(6, n);
  P.Aeq.leftCols(6) = Af.leftCols(6);
  if (nf > 0) P.Aeq.rightCols(nf) = -JcfT;
  P.beq = -Af * in.qdd_cmd - in.bias.head(6);
  if (nf > 0) P.beq += JcfT * in.f_ref;

  MatX W;
  VecX wb;
  friction_constraints(in.bounds, W, wb);
  P.Ain = MatX::Zero(W.rows(), n);
  if (nf > 0) P.Ain.rightCols(nf) = W;
  P.bin = wb - (nf > 0 ? VecX(W * in.f_ref) : VecX::Zero(W.rows()));

  const auto res = qp::solve(P);
  WbcQpOutput out;
  out.status = res.status;
  out.active_constraints = res.active_inequalities;
  if (!res.ok()) return out;

  out.delta_f = res.x.head(6);
  out.delta_fr = res.x.tail(nf);
  out.qdd = in.qdd_cmd;
  out.qdd.head(6) += out.delta_f;
  out.fr = in.f_ref + out.delta_fr;
  out.objective = out.delta_fr.dot(in.Q1 * out.delta_fr) + out.delta_f.dot(in.Q2 * out.delta_f);
  VecX floating = Af * out.qdd + in.bias.head(6);
  if (nf > 0) floating -= JcfT * out.fr;
  out.dynamics_residual = floating.norm();
  out.tau = inverse_dynamics(in.A, in.bias, in.S_a, in.Jc, out.qdd, out.fr);
  return out;
}

rmp::CanonicalRmp apf_rmp(double x, const ApfParams& p) {
  return {VecX::Constant(1, p.k_p * std::exp(-x / p.l_p)), MatX::Identity(1, 1)};
}

Vec3 apf_baseline_accel(const WitnessPair& w, const ApfParams& p) {
  return p.k_p * std::exp(-w.distance / p.l_p) * w.normal;
}

}  // namespace rmpwbc::wbc
