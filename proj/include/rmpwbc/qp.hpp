#pragma once

#include <string_view>
#include <vector>

#include "rmpwbc/types.hpp"

namespace rmpwbc::qp {

// minimize 1/2 x^T H x + g^T x  subject to  Aeq x = beq,  Ain x >= bin.
// H must be symmetric positive definite.
struct Problem {
  MatX H;
  VecX g;
  MatX Aeq;
  VecX beq;
  MatX Ain;
  VecX bin;
};

enum class Status { Solved, Infeasible, NotConvex, DependentEqualities, MaxIterations };

std::string_view to_string(Status s);

struct Result {
  Status status = Status::Infeasible;
  VecX x;
  double objective = 0.0;
  std::vector<int> active_inequalities;
  VecX eq_multipliers;
  VecX in_multipliers;  // >= 0 at the optimum
  int iterations = 0;

  bool ok() const { return status == Status::Solved; }
};

// Goldfarb-Idnani dual active-set method.
Result solve(const Problem& problem);

}  // namespace rmpwbc::qp
