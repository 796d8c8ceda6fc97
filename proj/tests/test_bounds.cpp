#include "mirror_bounds/bounds.hpp"
#include "mirror_bounds/problems.hpp"

#include <doctest.h>

#include <cmath>

using namespace mirror_bounds;

namespace {

ProblemSpec l1_instance(Index n, std::uint64_t seed) {
  Instance1Spec s;
  s.n = n;
  s.seed = seed;
  return gen_instance1(s);
}

}  // namespace

TEST_CASE("theta calibration") {
  const Thetas t = calibrate_thetas_smd1(0.1);
  CHECK(t.theta1 == doctest::Approx(3.4616367652045708).epsilon(1e-14));
  CHECK(t.theta3 == doctest::Approx(3.841291165279683).epsilon(1e-14));
  CHECK(t.theta2 == doctest::Approx(3.841313275927919).epsilon(1e-12));
  CHECK(std::abs(std::exp(1 - t.theta2 * t.theta2) + std::exp(-t.theta2 * t.theta2 / 4) - 0.025) <= 1e-12);

  const BisectionResult s = calibrate_theta_smd2(0.1, 1000);
  CHECK(s.root == doctest::Approx(5.996479279546515).epsilon(1e-12));
  CHECK(std::abs(s.residual) <= 1e-12);

  CHECK_THROWS_AS(calibrate_thetas_smd1(0.0), ConfigurationError);
  CHECK_THROWS_AS(calibrate_thetas_smd1(1.0), ConfigurationError);
  CHECK_THROWS_AS(bisect_decreasing([](double x) { return x - 1; }, 0, 2), NumericalError);
}

TEST_CASE("normal quantile") {
  CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514715).epsilon(1e-12));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.9599639845400536).epsilon(1e-12));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  for (int i = 1; i < 100; ++i) {
    const double p = i / 100.0;
    CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) < 1e-14);
    CHECK(std::abs(normal_quantile(p) + normal_quantile(1 - p)) < 1e-12);
  }
  CHECK_THROWS_AS(normal_quantile(1.0), ConfigurationError);
}

TEST_CASE("smd1 constants") {
  ConstantSheet c;
  c.L = 1.0;
  c.M1 = 0.65;
  c.M2 = 1.1;
  const SmdConstantsK k = smd1_constants(c, std::sqrt(2 * std::log(40.0)), 1.0);
  CHECK(k.K1 == doctest::Approx(4.1472109574267675).epsilon(1e-12));
  CHECK(k.K2 == doctest::Approx(8.188925565983459).epsilon(1e-12));
}

TEST_CASE("smd1 interval formula and ordering") {
  const ProblemSpec p = l1_instance(40, 1);
  const auto setup = make_setup("entropy", p.set);
  SolverConfig cfg;
  cfg.N = 1000;
  cfg.seed = 2;
  const RunRecord run = smd_run(p, *setup, cfg);
  const ConfidenceInterval ci = ci_smd1(run, p.constants, 0.1);
  const double root = std::sqrt(1000.0);
  CHECK(ci.high == doctest::Approx(run.g_avg + *ci.theta1 * 0.65 / root).epsilon(1e-14));
  const double b = (*ci.K1 + *ci.theta2 * (*ci.K2 - 0.65)) / root;
  CHECK(ci.low == doctest::Approx(run.g_avg - b - *ci.theta3 * 0.65 / root).epsilon(1e-14));
  CHECK(ci.low <= run.g_avg);
  CHECK(run.g_avg <= ci.high);
  CHECK(ci.level == doctest::Approx(0.9));
}

TEST_CASE("interval methods reject mismatched runs") {
  const ProblemSpec p = l1_instance(10, 3);
  const auto setup = make_setup("entropy", p.set);
  SolverConfig cfg;
  cfg.N = 200;
  cfg.step = 0.01;
  const RunRecord overridden = smd_run(p, *setup, cfg);
  CHECK_THROWS_AS(ci_smd1(overridden, p.constants, 0.1), InvalidMethod);
  CHECK_THROWS_AS(ci_smd2(overridden, p.constants, *p.set, 0.1, 1.0), InvalidMethod);

  cfg.step.reset();
  cfg.theta = 1.0;
  RunRecord theta_run = smd_run(p, *setup, cfg);
  CHECK_THROWS_AS(ci_smd1(theta_run, p.constants, 0.1), InvalidMethod);
  CHECK_THROWS_AS(ci_smd2(theta_run, p.constants, *p.set, 0.1, 0.5), InvalidMethod);
  CHECK_NOTHROW(ci_smd2(theta_run, p.constants, *p.set, 0.1, 1.0));
  ConstantSheet no_mstar = p.constants;
  no_mstar.Mstar.reset();
  CHECK_THROWS_AS(ci_smd2(theta_run, no_mstar, *p.set, 0.1, 1.0), InvalidMethod);
  theta_run.sum_subgradient.resize(0);
  CHECK_THROWS_AS(ci_smd2(theta_run, p.constants, *p.set, 0.1, 1.0), InvalidMethod);
  CHECK_THROWS_AS(interval_method_from_string("bootstrap"), ConfigurationError);
}

TEST_CASE("smd2 affine lower model") {
  const ProblemSpec p = l1_instance(15, 4);
  const auto setup = make_setup("entropy", p.set);
  SolverConfig cfg;
  cfg.N = 500;
  cfg.seed = 9;
  cfg.theta = 1.0;
  const RunRecord run = smd_run(p, *setup, cfg);
  const ConfidenceInterval ci = ci_smd2(run, p.constants, *p.set, 0.1, 1.0);
  REQUIRE(ci.model_lower.has_value());
  // The LMO value is below the averaged affine model at random feasible points.
  Rng rng(10);
  const double N = static_cast<double>(run.N);
  for (int k = 0; k < 100000; ++k) {
    const Vector x = p.set->sample(rng);
    CHECK(*ci.model_lower <= run.sum_offset / N + run.sum_subgradient.dot(x) / N + 1e-12);
  }
  CHECK(ci.low < *ci.model_lower);
  CHECK(ci.high > run.g_avg);
}

TEST_CASE("interval widths shrink like one over root N") {
  const std::vector<long> sizes{1000, 4000, 16000};
  std::vector<double> scaled;
  for (const long N : sizes) {
    double width = 0;
    const int reps = 10;
    for (int r = 0; r < reps; ++r) {
      const ProblemSpec p = l1_instance(20, 100 + static_cast<std::uint64_t>(r));
      const auto setup = make_setup("entropy", p.set);
      SolverConfig cfg;
      cfg.N = N;
      cfg.seed = static_cast<std::uint64_t>(r);
      width += ci_smd1(smd_run(p, *setup, cfg), p.constants, 0.1).width() / reps;
    }
    scaled.push_back(width * std::sqrt(static_cast<double>(N)));
  }
  CHECK(std::abs(scaled[1] / scaled[0] - 1) <= 0.15);
  CHECK(std::abs(scaled[2] / scaled[0] - 1) <= 0.15);
}

TEST_CASE("asymptotic interval") {
  Instance1Spec s;
  s.n = 5;
  s.psi = Vector::Ones(5);
  const ProblemSpec degenerate = gen_instance1(s);
  const auto sample = draw_sample(degenerate, 100, 1);
  const SaaSolution saa = saa_solve(degenerate, sample);
  const ConfidenceInterval ci = ci_asymptotic(degenerate, sample, 0.1, saa);
  CHECK(ci.degenerate);
  CHECK(ci.low == saa.value);
  CHECK(ci.high == saa.value);

  const ProblemSpec p = l1_instance(10, 7);
  const auto noisy = draw_sample(p, 400, 2);
  const SaaSolution fit = saa_solve(p, noisy);
  const ConfidenceInterval c2 = ci_asymptotic(p, noisy, 0.1, fit);
  CHECK_FALSE(c2.degenerate);
  CHECK(c2.high - fit.value == doctest::Approx(1.6448536269514715 * fit.sigma / 20).epsilon(1e-9));
  CHECK(fit.value - c2.low == doctest::Approx(c2.high - fit.value).epsilon(1e-12));
  CHECK_THROWS_AS(ci_asymptotic(p, {}, 0.1, fit), ConfigurationError);
}
