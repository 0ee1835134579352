#include "rmpwbc/qp.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

namespace rmpwbc::qp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Factorization state: J is n x n with the first `iq` columns spanning the
// active normals (in the metric of H) and R holds J^T N for the active set.
struct Factors {
  MatX J;
  MatX R;
  int iq = 0;
  double r_norm = 1.0;

  VecX primal_direction(const VecX& d) const {
    const int n = static_cast<int>(J.rows());
    return J.rightCols(n - iq) * d.tail(n - iq);
  }

  VecX dual_direction(const VecX& d) const {
    if (iq == 0) return VecX();
    return R.topLeftCorner(iq, iq).triangularView<Eigen::Upper>().solve(d.head(iq));
  }

  // Rotates d so only its first iq+1 entries are nonzero, then appends it to R.
  bool add(VecX d) {
    const int n = static_cast<int>(J.rows());
    for (int j = n - 1; j > iq; --j) {
      const double a = d[j - 1];
      const double b = d[j];
      const double h = std::hypot(a, b);
      if (h == 0.0) continue;
      const double c = a / h;
      const double s = b / h;
      d[j - 1] = h;
      d[j] = 0.0;
      for (int k = 0; k < n; ++k) {
        const double t1 = J(k, j - 1);
        const double t2 = J(k, j);
        J(k, j - 1) = c * t1 + s * t2;
        J(k, j) = -s * t1 + c * t2;
      }
    }
    R.col(iq).head(iq + 1) = d.head(iq + 1);
    ++iq;
    r_norm = std::max(r_norm, std::abs(d[iq - 1]));
    return std::abs(d[iq - 1]) > std::numeric_limits<double>::epsilon() * r_norm;
  }

  void remove(int l) {
    const int n = static_cast<int>(J.rows());
    for (int k = l; k < iq - 1; ++k) R.col(k) = R.col(k + 1);
    R.col(iq - 1).setZero();
    --iq;
    for (int j = l; j < iq; ++j) {
      const double a = R(j, j);
      const double b = R(j + 1, j);
      const double h = std::hypot(a, b);
      if (h == 0.0) continue;
      const double c = a / h;
      const double s = b / h;
      for (int k = j; k < iq; ++k) {
        const double t1 = R(j, k);
        const double t2 = R(j + 1, k);
        R(j, k) = c * t1 + s * t2;
        R(j + 1, k) = -s * t1 + c * t2;
      }
      for (int k = 0; k < n; ++k) {
        const double t1 = J(k, j);
        const double t2 = J(k, j + 1);
        J(k, j) = c * t1 + s * t2;
        J(k, j + 1) = -s * t1 + c * t2;
      }
    }
  }
};

}  // namespace

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Solved: return "solved";
    case Status::Infeasible: return "infeasible";
    case Status::NotConvex: return "not_convex";
    case Status::DependentEqualities: return "dependent_equalities";
    case Status::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

Result solve(const Problem& P) {
  const int n = static_cast<int>(P.H.rows());
  const int meq = static_cast<int>(P.Aeq.rows());
  const int min = static_cast<int>(P.Ain.rows());
  Result res;
  res.eq_multipliers = VecX::Zero(meq);
  res.in_multipliers = VecX::Zero(min);

  Eigen::LLT<MatX> llt(P.H);
  if (llt.info() != Eigen::Success) {
    res.status = Status::NotConvex;
    return res;
  }
  Factors F;
  // J = L^-T
  F.J = llt.matrixU().solve(MatX::Identity(n, n));
  F.R = MatX::Zero(n, n);

  VecX x = -llt.solve(P.g);
  // Active set: equality constraints are stored as -(i + 1).
  std::vector<int> active;
  std::vector<double> u;
  auto finish = [&](Status status) {
    res.status = status;
    res.x = x;
    res.objective = 0.5 * x.dot(P.H * x) + P.g.dot(x);
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (active[k] < 0) {
        res.eq_multipliers[-active[k] - 1] = u[k];
      } else {
        res.in_multipliers[active[k]] = u[k];
        res.active_inequalities.push_back(active[k]);
      }
    }
    return res;
  };

  for (int i = 0; i < meq; ++i) {
    const VecX np = P.Aeq.row(i).transpose();
    const VecX d = F.J.transpose() * np;
    const VecX z = F.primal_direction(d);
    const VecX r = F.dual_direction(d);
    const double zn = z.dot(np);
    const double t = std::abs(zn) > 1e-300 ? (P.beq[i] - np.dot(x)) / zn : 0.0;
    x += t * z;
    for (int k = 0; k < F.iq; ++k) u[k] -= t * r[k];
    if (!F.add(d)) return finish(Status::DependentEqualities);
    active.push_back(-(i + 1));
    u.push_back(t);
  }

  std::vector<char> is_active(min, 0);
  const int max_iter = 50 * (n + meq + min) + 100;
  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter;
    // Most violated inactive inequality.
    int p = -1;
    double worst = 0.0;
    for (int i = 0; i < min; ++i) {
      if (is_active[i]) continue;
      const double s = P.Ain.row(i).dot(x) - P.bin[i];
      const double tol = 1e-11 * (1.0 + std::abs(P.bin[i]) + P.Ain.row(i).cwiseAbs().dot(x.cwiseAbs()));
      if (s < -tol && s < worst) {
        worst = s;
        p = i;
      }
    }
    if (p < 0) return finish(Status::Solved);

    const VecX np = P.Ain.row(p).transpose();
    double u_new = 0.0;
    double sp = worst;
    while (true) {
      const VecX d = F.J.transpose() * np;
      const VecX z = F.primal_direction(d);
      const VecX r = F.dual_direction(d);

      // Dual step limit over active inequalities.
      double t1 = kInf;
      int l = -1;
      for (int k = 0; k < F.iq; ++k) {
        if (active[k] >= 0 && r[k] > 0.0) {
          const double ratio = u[k] / r[k];
          if (ratio < t1) {
            t1 = ratio;
            l = k;
          }
        }
      }
      const double zn = z.dot(np);
      const double t2 = z.squaredNorm() > 1e-24 && zn > 0.0 ? -sp / zn : kInf;
      const double t = std::min(t1, t2);
      if (t == kInf) return finish(Status::Infeasible);

      if (t2 == kInf) {
        for (int k = 0; k < F.iq; ++k) u[k] -= t * r[k];
        u_new += t;
        is_active[active[l]] = 0;
        active.erase(active.begin() + l);
        u.erase(u.begin() + l);
        F.remove(l);
        continue;
      }

      x += t * z;
      for (int k = 0; k < F.iq; ++k) u[k] -= t * r[k];
      u_new += t;
      if (t == t2) {
        if (!F.add(d)) return finish(Status::Infeasible);
        active.push_back(p);
        u.push_back(u_new);
        is_active[p] = 1;
        break;
      }
      is_active[active[l]] = 0;
      active.erase(active.begin() + l);
      u.erase(u.begin() + l);
      F.remove(l);
      sp = np.dot(x) - P.bin[p];
    }
  }
  return finish(Status::MaxIterations);
}

}  // namespace rmpwbc::qp
