#pragma once

#include "mirror_bounds/types.hpp"

#include <string>
#include <vector>

namespace mirror_bounds {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };
std::string to_string(LpStatus s);

// min c'y  s.t.  A_ineq y <= b_ineq,  A_eq y = b_eq,  lower <= y <= upper.
struct LpProblem {
  Vector c;
  Matrix A_ineq;
  Vector b_ineq;
  Matrix A_eq;
  Vector b_eq;
  // Empty means free; entries may be +-infinity.
  Vector lower;
  Vector upper;
  // Optional: nonbasic variables that should start at their upper bound.
  std::vector<bool> start_at_upper;
};

struct LpOptions {
  long max_iterations = 1000000;
  double optimality_tol = 1e-10;
  double feasibility_tol = 1e-9;
  int refactor_every = 100;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vector y;
  // Multipliers: c = A_ineq' dual_ineq + A_eq' dual_eq + reduced_costs, dual_ineq <= 0.
  Vector dual_ineq;
  Vector dual_eq;
  Vector reduced_costs;
  double value = 0;
  double dual_value = 0;
  double primal_residual = 0;
  double dual_residual = 0;
  double gap = 0;
  long iterations = 0;

  bool optimal() const { return status == LpStatus::Optimal; }
};

// Bounded-variable revised simplex: Dantzig pricing, Bland's rule while stalling.
LpSolution lp_solve(const LpProblem& problem, const LpOptions& options = {});

LpSolution lp_solve_dense(const Vector& c, const Matrix& A_ineq, const Vector& b_ineq, const Matrix& A_eq,
                          const Vector& b_eq);

}  // namespace mirror_bounds
