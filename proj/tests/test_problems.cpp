#include "mirror_bounds/problems.hpp"

#include <doctest.h>

#include <cmath>

using namespace mirror_bounds;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Fine grid minimum of f over the 2-simplex, refined around the incumbent.
double grid_minimum(const std::function<double(const Vector&)>& f) {
  double c0 = 0.5, c1 = 0.5, h = 0.005, half = 0.5, best = 1e300;
  for (int level = 0; level < 4; ++level) {
    double b0 = c0, b1 = c1;
    const int steps = static_cast<int>(std::ceil(half / h));
    for (int i = -steps; i <= steps; ++i)
      for (int j = -steps; j <= steps; ++j) {
        const double u0 = c0 + i * h, u1 = c1 + j * h;
        if (u0 < 0 || u1 < 0 || u0 + u1 > 1) continue;
        const double v = f(vec({u0, u1, 1 - u0 - u1}));
        if (v < best) {
          best = v;
          b0 = u0;
          b1 = u1;
        }
      }
    c0 = b0;
    c1 = b1;
    half = 3 * h;
    h /= 10;
  }
  return best;
}

std::vector<RandomDraw> pool_rows(const Matrix& pool) {
  std::vector<RandomDraw> rows;
  for (Index k = 0; k < pool.rows(); ++k) rows.push_back(pool.row(k).transpose());
  return rows;
}

}  // namespace

TEST_CASE("instance 1 constant sheets") {
  Instance1Spec s;
  s.n = 30;
  s.seed = 1;
  const ConstantSheet l1 = gen_instance1(s).constants;
  CHECK(l1.L == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(l1.M1 == doctest::Approx(0.65).epsilon(1e-15));
  CHECK(l1.M2 == doctest::Approx(1.1).epsilon(1e-15));
  REQUIRE(l1.Mstar.has_value());
  CHECK(*l1.Mstar == doctest::Approx(1.0).epsilon(1e-15));

  s.norm = Norm::L2;
  s.lambda0 = 0.5;
  const Instance1Spec full = complete_instance1(s);
  const ConstantSheet l2 = instance1_constants(full);
  const double rn = std::sqrt(30.0);
  CHECK(l2.L == doctest::Approx(0.1 * rn + 0.9 * 1.5 * rn).epsilon(1e-14));
  CHECK(l2.M2 == doctest::Approx(0.2 * rn + 1.8 * rn).epsilon(1e-14));
  REQUIRE(l2.mu_f.has_value());
  CHECK(*l2.mu_f == doctest::Approx(0.9 * (min_eigenvalue(full.second_moment()) + 0.5)).epsilon(1e-12));
  CHECK(l2.rho.value_or(0) == 2.0);

  s.mu_f_override = 1.0;
  CHECK(*gen_instance1(s).constants.mu_f == 1.0);

  s.b = 0.1;
  s.n = 10;
  CHECK_THROWS_AS(gen_instance1(s), InfeasibleInstance);
}

TEST_CASE("instance 1 exact objective") {
  Instance1Spec s;
  s.n = 3;
  s.alpha0 = 0;
  s.alpha1 = 2;
  s.psi = vec({1, 0.5, 0.5});
  const ProblemSpec p = gen_instance1(s);
  CHECK(p.exact_value(Vector::Constant(3, 1.0 / 3)) == doctest::Approx(1.0 / 3).epsilon(1e-15));

  s.psi = Vector::Ones(3);
  s.alpha0 = 0.3;
  s.alpha1 = 0.8;
  s.lambda0 = 2;
  const ProblemSpec ones = gen_instance1(s);
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    const Vector x = ones.set->sample(rng);
    const double f = 0.3 * x.sum() + 0.4 * (x.sum() * x.sum() + 2 * x.squaredNorm());
    CHECK(ones.exact_value(x) == doctest::Approx(f).epsilon(1e-14));
    CHECK(oracle_eval(ones, x, ones.sampler(rng)).value == doctest::Approx(f).epsilon(1e-14));
  }
}

TEST_CASE("instance 1 gradient matches finite differences") {
  Instance1Spec s;
  s.n = 8;
  s.lambda0 = 0.7;
  s.seed = 2;
  const ProblemSpec p = gen_instance1(s);
  Rng rng(3);
  const double h = 1e-6;
  for (int k = 0; k < 100; ++k) {
    const Vector x = p.set->sample(rng);
    const Vector g = p.exact_subgradient(x);
    Vector fd(8);
    for (Index i = 0; i < 8; ++i) {
      Vector up = x, down = x;
      up(i) += h;
      down(i) -= h;
      fd(i) = (p.exact_value(up) - p.exact_value(down)) / (2 * h);
    }
    CHECK((fd - g).norm() <= 1e-5 * std::max(1.0, g.norm()));
  }
}

TEST_CASE("instance 2 constant sheet") {
  Instance2Spec s;
  s.n = 41;
  s.alpha0 = 0.9;
  s.alpha1 = 0.1;
  s.epsilon = 0.9;
  const ConstantSheet c = instance2_constants(s);
  CHECK(c.L == doctest::Approx(6.47427959670389).epsilon(1e-12));
  CHECK(c.M1 == doctest::Approx(2.022222222222222).epsilon(1e-12));
  CHECK(c.M2 == doctest::Approx(12.949016836696021).epsilon(1e-12));
  REQUIRE(c.Mstar.has_value());
  CHECK(*c.Mstar == doctest::Approx(6.47427959670389).epsilon(1e-12));
  s.lambda0 = 0.25;
  CHECK(instance2_constants(s).L == doctest::Approx(6.97427959670389).epsilon(1e-12));

  s.epsilon = 1.0;
  CHECK_THROWS_AS(gen_instance2(s), ConfigurationError);
}

TEST_CASE("instance 2 oracle") {
  Instance2Spec s;
  s.n = 4;
  s.alpha0 = 0;
  s.alpha1 = 1;
  s.pool_size = 1000;
  s.seed = 4;
  const ProblemSpec p = gen_instance2(s);
  Rng rng(5);
  const RandomDraw xi = p.sampler(rng);
  Vector v = Vector::Zero(5);
  v(1) = 1;
  v(0) = xi(0);
  const OracleSample o = oracle_eval(p, v, xi);
  CHECK(o.value == doctest::Approx(v(0)).epsilon(1e-15));
  // Zero-slope choice at the kink.
  CHECK(o.subgradient(0) == doctest::Approx(1.0));

  const Matrix pool = scenario_pool(s);
  CHECK(pool.minCoeff() >= -1);
  CHECK(pool.maxCoeff() <= 1);
}

TEST_CASE("CVaR evaluators agree") {
  CHECK(cvar_sorted_tail(vec({0, 1}), 0.5) == doctest::Approx(1.0));
  CHECK(cvar_sorted_tail(vec({0, 1}), 0.25) == doctest::Approx(1.0));
  CHECK(cvar_sorted_tail(vec({0, 1, 2, 3}), 1.0) == doctest::Approx(1.5));
  CHECK(cvar_sorted_tail(vec({0, 1, 2, 3}), 0.3) == doctest::Approx(3.0 * 0.25 / 0.3 + 2.0 * 0.05 / 0.3));
  Instance2Spec s;
  s.n = 6;
  s.pool_size = 1500;
  s.seed = 6;
  const Matrix pool = scenario_pool(s);
  const FloorSimplex simplex(6);
  Rng rng(7);
  for (int k = 0; k < 100; ++k) {
    const Vector z = pool * simplex.sample(rng);
    const double eps = 0.05 + 0.9 * uniform01(rng);
    CHECK(std::abs(cvar_sorted_tail(z, eps) - cvar_minimization_form(z, eps)) <= 1e-9);
  }
}

TEST_CASE("exact optimum, trivial and grid-checked cases") {
  Instance1Spec s;
  s.n = 5;
  s.alpha0 = 1;
  s.alpha1 = 0;
  s.psi = Vector::Ones(5);
  const ReferenceSolution trivial = exact_optimum(gen_instance1(s));
  CHECK(trivial.value == doctest::Approx(1.0).epsilon(1e-12));

  Instance1Spec g;
  g.n = 3;
  g.alpha0 = 0;
  g.alpha1 = 1;
  g.seed = 8;
  const ProblemSpec p = gen_instance1(g);
  const ReferenceSolution r = exact_optimum(p);
  CHECK(r.gap <= 1e-8);
  CHECK(std::abs(r.value - grid_minimum(p.exact_value)) <= 1e-4);
  const Vector grad = p.exact_subgradient(r.x);
  CHECK(grad.dot(r.x - p.set->lmo(grad)) <= 1e-8);
}

TEST_CASE("exact optimum of the linear case sits at a vertex") {
  Instance2Spec s;
  s.n = 7;
  s.alpha0 = 1;
  s.alpha1 = 0;
  s.pool_size = 1000;
  s.seed = 9;
  const ProblemSpec p = gen_instance2(s);
  const ReferenceSolution r = exact_optimum(p);
  const Vector mean = scenario_pool(s).colwise().mean().transpose();
  Index best;
  mean.minCoeff(&best);
  CHECK(r.value == doctest::Approx(mean(best)).epsilon(1e-8));
}

TEST_CASE("SAA over the whole pool reproduces the reference optimum") {
  for (const double lambda0 : {0.0, 0.5}) {
    Instance2Spec s;
    s.n = 6;
    s.pool_size = 1000;
    s.lambda0 = lambda0;
    s.seed = 10;
    const ProblemSpec p = gen_instance2(s);
    const ReferenceSolution r = exact_optimum(p);
    const SaaSolution saa = saa_solve(p, pool_rows(scenario_pool(s)));
    CHECK(std::abs(saa.value - r.value) <= 2e-6);
    CHECK(r.gap <= 1e-6);
    // The value is certified against the full-pool objective.
    CHECK(std::abs(p.exact_value(r.x) - r.value) <= 1e-6);
  }
}

TEST_CASE("SAA details") {
  Instance1Spec s;
  s.n = 6;
  s.seed = 11;
  const ProblemSpec p = gen_instance1(s);
  const auto one = draw_sample(p, 1, 3);
  const SaaSolution single = saa_solve(p, one);
  CHECK(single.gap <= 1e-8);
  CHECK(p.set->contains(single.x));

  s.psi = Vector::Ones(6);
  const ProblemSpec flat = gen_instance1(s);
  const SaaSolution zero = saa_solve(flat, draw_sample(flat, 50, 3));
  CHECK(zero.sigma <= 1e-12);
  CHECK_THROWS_AS(saa_solve(p, {}), ConfigurationError);
}
