#pragma once

#include "mirror_bounds/bounds.hpp"
#include "mirror_bounds/problem.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mirror_bounds {

struct Instance1Spec {
  Index n = 0;
  double alpha0 = 0.1;
  double alpha1 = 0.9;
  double lambda0 = 0;
  double a = 1;
  double b = 0;
  Norm norm = Norm::L1;
  std::uint64_t seed = 0;
  // Drawn from the seed when empty.
  Vector psi;
  // Replaces the analytic mu(f) when set (and then also sets rho = 2).
  std::optional<double> mu_f_override;

  Vector mean() const { return 2.0 * psi.array() - 1.0; }
  Matrix second_moment() const;
};

struct Instance2Spec {
  Index n = 0;
  double alpha0 = 0.9;
  double alpha1 = 0.1;
  double epsilon = 0.9;
  double lambda0 = 0;
  long pool_size = 10000;
  std::uint64_t seed = 0;
  std::optional<double> mu_f_override;
};

Instance1Spec complete_instance1(Instance1Spec spec);

ConstantSheet instance1_constants(const Instance1Spec& spec);
ConstantSheet instance2_constants(const Instance2Spec& spec);

ProblemSpec gen_instance1(Instance1Spec spec);
ProblemSpec gen_instance2(const Instance2Spec& spec);
// Oracle g = xi'x, G = xi on the probability simplex, drawing from instance 2's pool.
ProblemSpec gen_linear_loss(const Instance2Spec& spec);

Matrix scenario_pool(const Instance2Spec& spec);

double min_eigenvalue(const Matrix& symmetric);

// CVaR of equally weighted outcomes: tail average of the top epsilon mass.
double cvar_sorted_tail(const Vector& outcomes, double epsilon);
// Same quantity as min over t of t + mean([z - t]+) / epsilon.
double cvar_minimization_form(const Vector& outcomes, double epsilon);

struct ReferenceSolution {
  Vector x;
  double value = 0;
  // Certified bound on value - optimum.
  double gap = 0;
  long iterations = 0;
};

ReferenceSolution solve_quadratic(const QuadraticModel& model, const FeasibleSet& set, double tol = 1e-8,
                                  long max_iterations = 200000);
ReferenceSolution solve_cvar_pool(const CvarPoolModel& model, const FeasibleSet& set, double tol = 1e-6,
                                  long max_iterations = 200000);

ReferenceSolution exact_optimum(const ProblemSpec& problem, std::optional<double> tol = std::nullopt);
SaaSolution saa_solve(const ProblemSpec& problem, const std::vector<RandomDraw>& sample,
                      std::optional<double> tol = std::nullopt);

}  // namespace mirror_bounds
