#include "mirror_bounds/bounds.hpp"

#include <cmath>
#include <sstream>

namespace mirror_bounds {

std::string to_string(IntervalMethod m) {
  switch (m) {
    case IntervalMethod::Smd1: return "smd1";
    case IntervalMethod::Smd2: return "smd2";
    case IntervalMethod::Asymptotic: return "asymptotic";
  }
  return "?";
}

IntervalMethod interval_method_from_string(const std::string& s) {
  if (s == "smd1") return IntervalMethod::Smd1;
  if (s == "smd2") return IntervalMethod::Smd2;
  if (s == "asymptotic") return IntervalMethod::Asymptotic;
  throw ConfigurationError("unknown interval method '" + s + "'");
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw ConfigurationError("alpha must lie in (0, 1)");
}

}  // namespace

BisectionResult bisect_decreasing(const std::function<double(double)>& h, double lo, double hi) {
  double h_lo = h(lo);
  double h_hi = h(hi);
  if (!(h_lo > 0 && h_hi < 0)) {
    std::ostringstream os;
    os << "bisection bracket does not straddle a root: h(" << lo << ")=" << h_lo << ", h(" << hi << ")=" << h_hi;
    throw NumericalError(os.str());
  }
  int it = 0;
  for (; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double h_mid = h(mid);
    if (h_mid > h_lo || h_mid < h_hi) throw NumericalError("bisection target is not decreasing on the bracket");
    if (h_mid > 0) {
      lo = mid;
      h_lo = h_mid;
    } else {
      hi = mid;
      h_hi = h_mid;
    }
  }
  const bool take_lo = std::abs(h_lo) <= std::abs(h_hi);
  return {take_lo ? lo : hi, take_lo ? h_lo : h_hi, it};
}

BisectionResult calibrate_theta2_smd1(double alpha) {
  check_alpha(alpha);
  return bisect_decreasing(
      [alpha](double t) { return std::exp(1.0 - t * t) + std::exp(-t * t / 4.0) - alpha / 4.0; }, 1e-6, 50.0);
}

Thetas calibrate_thetas_smd1(double alpha) {
  check_alpha(alpha);
  return {2.0 * std::sqrt(std::log(2.0 / alpha)), calibrate_theta2_smd1(alpha).root,
          2.0 * std::sqrt(std::log(4.0 / alpha))};
}

BisectionResult calibrate_theta_smd2(double alpha, long N) {
  check_alpha(alpha);
  if (N < 1) throw ConfigurationError("calibration needs N >= 1");
  const double root_n = std::sqrt(static_cast<double>(N));
  return bisect_decreasing(
      [alpha, root_n](double t) {
        return 6.0 * std::exp(-t * t / 3.0) + std::exp(-t * t / 12.0) + std::exp(-0.75 * t * root_n) - alpha / 2.0;
      },
      1e-6, 50.0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0 && p < 1)) throw ConfigurationError("normal quantile needs p in (0, 1)");
  // Acklam's rational approximation followed by one Halley step.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

SmdConstantsK smd1_constants(const ConstantSheet& c, double radius, double mu_omega) {
  const double s = std::sqrt(2.0 * (c.M2 * c.M2 + c.L * c.L) * mu_omega);
  const double K1 = radius * (c.M2 * c.M2 + 2.0 * c.L * c.L) / s;
  const double K2 = radius * c.M2 * c.M2 / s + 2.0 * radius * c.M2 / std::sqrt(mu_omega) + c.M1;
  return {K1, K2};
}

ConfidenceInterval ci_smd1(const RunRecord& run, const ConstantSheet& constants, double alpha) {
  check_alpha(alpha);
  if (run.algorithm != Algorithm::Rsa && run.algorithm != Algorithm::Smd)
    throw InvalidMethod("smd1 interval needs an rsa or smd run");
  if (run.step_rule != StepRule::Prescribed)
    throw InvalidMethod("smd1 interval needs the prescribed step; run used " + to_string(run.step_rule));
  const Thetas th = calibrate_thetas_smd1(alpha);
  const SmdConstantsK k = smd1_constants(constants, run.radius, run.mu_omega);
  const double root_n = std::sqrt(static_cast<double>(run.N));
  ConfidenceInterval ci;
  ci.method = IntervalMethod::Smd1;
  ci.level = 1.0 - alpha;
  ci.theta1 = th.theta1;
  ci.theta2 = th.theta2;
  ci.theta3 = th.theta3;
  ci.K1 = k.K1;
  ci.K2 = k.K2;
  const double a_up = th.theta1 * constants.M1 / root_n;
  const double a_low = th.theta3 * constants.M1 / root_n;
  const double b = (k.K1 + th.theta2 * (k.K2 - constants.M1)) / root_n;
  ci.high = run.g_avg + a_up;
  ci.low = run.g_avg - b - a_low;
  return ci;
}

ConfidenceInterval ci_smd2(const RunRecord& run, const ConstantSheet& constants, const FeasibleSet& set, double alpha,
                           double theta) {
  check_alpha(alpha);
  if (run.step_rule != StepRule::Theta || !run.theta)
    throw InvalidMethod("smd2 interval needs a run with the theta step");
  if (std::abs(*run.theta - theta) > 1e-15 * std::max(1.0, theta))
    throw InvalidMethod("smd2 interval theta differs from the run's theta");
  if (run.sum_subgradient.size() != set.dimension() || run.N < 1)
    throw InvalidMethod("smd2 interval needs the run's subgradient aggregates");
  if (!constants.Mstar) throw InvalidMethod("smd2 interval needs Mstar");
  const double Nd = static_cast<double>(run.N);
  const double root_n = std::sqrt(Nd);
  const Vector c_bar = run.sum_subgradient / Nd;
  const Vector v = set.lmo(c_bar);
  const double model_lower = run.sum_offset / Nd + c_bar.dot(v);
  const BisectionResult t2 = calibrate_theta_smd2(alpha, run.N);
  const double theta1 = 2.0 * std::sqrt(std::log(2.0 / alpha));
  const double scale = run.radius * *constants.Mstar / std::sqrt(run.mu_omega);
  const double penalty =
      (1.0 / (2.0 * theta) + 2.0 * theta) * scale + t2.root * (constants.M1 + (8.0 + 2.0 * theta / root_n) * scale);
  ConfidenceInterval ci;
  ci.method = IntervalMethod::Smd2;
  ci.level = 1.0 - alpha;
  ci.theta1 = theta1;
  ci.theta2 = t2.root;
  ci.model_lower = model_lower;
  ci.step_theta = theta;
  ci.low = model_lower - penalty / root_n;
  ci.high = run.g_avg + theta1 * constants.M1 / root_n;
  return ci;
}

ConfidenceInterval ci_asymptotic(const ProblemSpec& problem, const std::vector<RandomDraw>& sample, double alpha,
                                 const SaaSolution& saa) {
  check_alpha(alpha);
  if (sample.empty()) throw ConfigurationError("asymptotic interval needs a nonempty sample");
  double ss = 0;
  for (const auto& draw : sample) {
    const double d = oracle_eval(problem, saa.x, draw).value - saa.value;
    ss += d * d;
  }
  const double Nd = static_cast<double>(sample.size());
  double sigma = std::sqrt(ss / Nd);
  // Rounding noise of a zero-variance oracle.
  if (sigma <= 1e-13 * (1.0 + std::abs(saa.value))) sigma = 0;
  const double q = normal_quantile(1.0 - alpha / 2.0);
  ConfidenceInterval ci;
  ci.method = IntervalMethod::Asymptotic;
  ci.level = 1.0 - alpha;
  ci.low = saa.value - q * sigma / std::sqrt(Nd);
  ci.high = saa.value + q * sigma / std::sqrt(Nd);
  ci.degenerate = sigma == 0.0;
  return ci;
}

}  // namespace mirror_bounds
