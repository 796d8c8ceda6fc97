#pragma once

#include "mirror_bounds/lp.hpp"
#include "mirror_bounds/problem.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mirror_bounds {

// Risk measure R(Z) = min_{A1 y1 <= a1} c1'y1 + E[Q(y1, Z)] with
//   Q(y1, z) = min c2'y2  s.t.  B20 y2 = z k2 + kt2 - B21 y1,  A2 y2 <= a2.
struct EprmModel {
  Matrix A1;
  Vector a1;
  Matrix A2;
  Vector a2;
  Matrix B20;
  Matrix B21;
  Vector c1;
  Vector c2;
  Vector k2;
  Vector kt2;

  Index k1() const { return A1.cols(); }
  Index dim_y2() const { return B20.cols(); }
  Index rows() const { return B20.rows(); }
};

struct AssumptionReport {
  Vector y1_lower;
  Vector y1_upper;
  // Coordinate ranges of lambda1 over the dual feasible set.
  Vector lambda1_lower;
  Vector lambda1_upper;
  double min_lambda_k2 = 0;
  double max_lambda_k2 = 0;
};

// Numerical checks of Y1 (nonempty, bounded), complete recourse, dual set nonempty and bounded,
// and lambda1'k2 >= 0 on the dual set. Throws AssumptionViolation naming the failed check.
AssumptionReport check_assumptions(const EprmModel& model);

struct SecondStage {
  double value = 0;
  Vector y2;
  Vector lambda1;
  Vector lambda2;
  // Certificates of the primal solve.
  double gap = 0;
  double primal_residual = 0;
  double dual_residual = 0;
};

// Solves Q(y1, z). With tie_break, lambda1 is the dual solution of least l1 norm on the optimal face.
SecondStage second_stage(const EprmModel& model, const Vector& y1, double z, bool tie_break = true);

struct EprmValue {
  double value = 0;
  Vector y1;
  double gap = 0;
  int iterations = 0;
};

// Atoms (weight, outcome); weights are normalized.
EprmValue eprm_evaluate(const EprmModel& model, const std::vector<std::pair<double, double>>& atoms);
double eprm_evaluate(const EprmModel& model, const Vector& outcomes);

// y1 confined to [-r, r].
EprmModel cvar_as_eprm(double epsilon, double r = 1.0);
// alpha0 E[Z] + alpha1 CVaR_epsilon(Z).
EprmModel mean_cvar_as_eprm(double alpha0, double alpha1, double epsilon, double r = 1.0);
EprmModel expectation_as_eprm();

// Lifted problem on (y1, x): value c1'y1 + Q(y1, g(x, xi)), subgradient (c1 - B21'lambda1; lambda1'k2 G).
ProblemSpec eprm_reformulate(const EprmModel& model, const ProblemSpec& inner);

}  // namespace mirror_bounds
