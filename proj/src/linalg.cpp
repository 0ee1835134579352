#include "rmpwbc/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>

namespace rmpwbc::linalg {

MatX pinv(const MatX& M, double rel_tol) {
  if (M.size() == 0) return MatX::Zero(M.cols(), M.rows());
  Eigen::JacobiSVD<MatX> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecX& s = svd.singularValues();
  const double cutoff = rel_tol * (s.size() > 0 ? s[0] : 0.0);
  VecX inv = VecX::Zero(s.size());
  for (int i = 0; i < s.size(); ++i) {
    if (s[i] > cutoff && s[i] > 0.0) inv[i] = 1.0 / s[i];
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

MatX psd_pinv(const MatX& M, double rel_tol, int* rank) {
  if (rank) *rank = 0;
  if (M.size() == 0) return M;
  Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (M + M.transpose()));
  const VecX& ev = es.eigenvalues();
  const double cutoff = rel_tol * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  VecX inv = VecX::Zero(ev.size());
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] > cutoff && ev[i] > 0.0) {
      inv[i] = 1.0 / ev[i];
      if (rank) ++*rank;
    }
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

int numerical_rank(const MatX& M, double rel_tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<MatX> svd(M);
  const VecX& s = svd.singularValues();
  int r = 0;
  for (int i = 0; i < s.size(); ++i) r += s[i] > rel_tol * s[0] && s[i] > 0.0;
  return r;
}

MatX operational_inertia(const MatX& J, const Eigen::LLT<MatX>& A_llt) {
  const MatX AinvJt = A_llt.solve(J.transpose());
  return psd_pinv(J * AinvJt);
}

DynPinv dyn_pinv(const MatX& J, const Eigen::LLT<MatX>& A_llt) {
  DynPinv out;
  const MatX AinvJt = A_llt.solve(J.transpose());
  const MatX inv_lambda = J * AinvJt;
  out.Lambda = psd_pinv(inv_lambda, kRankTolerance, &out.rank);
  out.Jbar = AinvJt * out.Lambda;
  return out;
}

DynPinv dyn_pinv(const MatX& J, const MatX& A) { return dyn_pinv(J, Eigen::LLT<MatX>(A)); }

}  // namespace rmpwbc::linalg
