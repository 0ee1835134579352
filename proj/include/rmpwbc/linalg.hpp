#pragma once

#include <Eigen/Cholesky>

#include "rmpwbc/types.hpp"

namespace rmpwbc::linalg {

// Singular values (eigenvalues for symmetric input) below this fraction of the
// largest are treated as zero.
constexpr double kRankTolerance = 1e-8;

// Moore-Penrose pseudo-inverse via SVD.
MatX pinv(const MatX& M, double rel_tol = kRankTolerance);

// Pseudo-inverse of a symmetric positive semidefinite matrix via its
// eigendecomposition.
// When `rank` is given it receives the number of retained eigenvalues.
MatX psd_pinv(const MatX& M, double rel_tol = kRankTolerance, int* rank = nullptr);

int numerical_rank(const MatX& M, double rel_tol = kRankTolerance);

// Dynamically consistent pseudo-inverse J_bar = A^-1 J^T Lambda with
// Lambda = (J A^-1 J^T)^+, plus the quantities used to build it.
struct DynPinv {
  MatX Jbar;
  MatX Lambda;
  int rank = 0;
};

DynPinv dyn_pinv(const MatX& J, const Eigen::LLT<MatX>& A_llt);
DynPinv dyn_pinv(const MatX& J, const MatX& A);

// Operational-space inertia (J A^-1 J^T)^+.
MatX operational_inertia(const MatX& J, const Eigen::LLT<MatX>& A_llt);

}  // namespace rmpwbc::linalg
