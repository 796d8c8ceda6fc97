#pragma once

#include "mirror_bounds/problem.hpp"
#include "mirror_bounds/prox.hpp"
#include "mirror_bounds/solvers.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mirror_bounds {

enum class IntervalMethod { Smd1, Smd2, Asymptotic };
std::string to_string(IntervalMethod m);
IntervalMethod interval_method_from_string(const std::string& s);

struct ConfidenceInterval {
  double low = 0;
  double high = 0;
  double level = 0;
  IntervalMethod method = IntervalMethod::Smd1;
  std::optional<double> theta1;
  std::optional<double> theta2;
  std::optional<double> theta3;
  std::optional<double> K1;
  std::optional<double> K2;
  // Smd2: lower affine-model value and the step parameter theta.
  std::optional<double> model_lower;
  std::optional<double> step_theta;
  bool degenerate = false;

  double width() const { return high - low; }
  bool contains(double v) const { return low <= v && v <= high; }
};

struct Thetas {
  double theta1;
  double theta2;
  double theta3;
};

struct BisectionResult {
  double root;
  double residual;
  int iterations;
};

// Root of a strictly decreasing function on [lo, hi]; monotonicity is checked on every probe.
BisectionResult bisect_decreasing(const std::function<double(double)>& h, double lo, double hi);

Thetas calibrate_thetas_smd1(double alpha);
BisectionResult calibrate_theta2_smd1(double alpha);
BisectionResult calibrate_theta_smd2(double alpha, long N);

double normal_quantile(double p);
double normal_cdf(double x);

struct SmdConstantsK {
  double K1;
  double K2;
};
// Radius and mu of the run; reduces to the RSA constants when mu = 1.
SmdConstantsK smd1_constants(const ConstantSheet& c, double radius, double mu_omega);

ConfidenceInterval ci_smd1(const RunRecord& run, const ConstantSheet& constants, double alpha);
ConfidenceInterval ci_smd2(const RunRecord& run, const ConstantSheet& constants, const FeasibleSet& set, double alpha,
                           double theta);

struct SaaSolution {
  Vector x;
  double value = 0;
  double sigma = 0;
  double gap = 0;
  long iterations = 0;
};

ConfidenceInterval ci_asymptotic(const ProblemSpec& problem, const std::vector<RandomDraw>& sample, double alpha,
                                 const SaaSolution& saa);

}  // namespace mirror_bounds
