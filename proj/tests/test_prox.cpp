#include "mirror_bounds/prox.hpp"

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

// Projection onto X intersected with a ball through the multiplier of the ball constraint.
Vector ball_projection_by_multiplier(const FeasibleSet& set, const Vector& c, double r, const Vector& y) {
  auto at = [&](double s) { return set.project((y + s * c) / (1 + s)); };
  if ((at(0) - c).norm() <= r) return at(0);
  double lo = 0, hi = 1;
  while ((at(hi) - c).norm() > r) hi *= 2;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((at(mid) - c).norm() > r ? lo : hi) = mid;
  }
  return at(hi);
}

// argmin over a fine grid of the floor 2-simplex of zeta'u + V_x(u), refined around the best point.
Vector grid_prox(const ProximalSetup& setup, const Vector& x, const Vector& zeta, double b) {
  auto obj = [&](double u0, double u1) {
    Vector u(3);
    u << u0, u1, 1.0 - u0 - u1;
    return zeta.dot(u) + setup.bregman(x, u);
  };
  double c0 = 0.5, c1 = 0.5, h = 0.01, half = 0.5;
  double best = 1e300;
  for (int level = 0; level < 6; ++level) {
    double b0 = c0, b1 = c1;
    const int steps = static_cast<int>(std::ceil(half / h));
    for (int i = -steps; i <= steps; ++i) {
      for (int j = -steps; j <= steps; ++j) {
        const double u0 = c0 + i * h, u1 = c1 + j * h;
        if (u0 < b || u1 < b || 1.0 - u0 - u1 < b) continue;
        const double v = obj(u0, u1);
        if (v < best) {
          best = v;
          b0 = u0;
          b1 = u1;
        }
      }
    }
    c0 = b0;
    c1 = b1;
    half = 3 * h;
    h /= 10;
  }
  Vector u(3);
  u << c0, c1, 1.0 - c0 - c1;
  return u;
}

}  // namespace

TEST_CASE("euclidean prox") {
  const auto simplex3 = std::make_shared<FloorSimplex>(3);
  const Vector third = Vector::Constant(3, 1.0 / 3);
  CHECK((prox_euclidean(third, Vector::Zero(3), *simplex3) - third).norm() < 1e-15);
  const auto simplex2 = std::make_shared<FloorSimplex>(2);
  CHECK((prox_euclidean(vec({1, 0}), vec({1, 0}), *simplex2) - vec({0.5, 0.5})).norm() < 1e-15);
  const FeasibleSetPtr box = make_box_simplex(3);
  const Vector p = vec({-0.4, 0.2, 0.3, 0.5});
  CHECK((prox_euclidean(p, Vector::Zero(4), *box) - p).norm() < 1e-15);
}

TEST_CASE("entropy prox") {
  const Vector uniform_log = Vector::Constant(4, std::log(0.25));
  const Vector shifted = prox_entropy(uniform_log, Vector::Constant(4, 2.7));
  CHECK((shifted - uniform_log).norm() < 1e-15);

  const Vector half_log = Vector::Constant(2, std::log(0.5));
  const Vector out = prox_entropy(half_log, vec({std::log(2.0), 0})).array().exp();
  CHECK(std::abs(out(0) - 1.0 / 3) < 1e-15);
  CHECK(std::abs(out(1) - 2.0 / 3) < 1e-15);

  const Vector wild = prox_entropy(Vector::Constant(3, std::log(1.0 / 3)), vec({1e4, -1e4, 3}));
  CHECK(wild.allFinite());
  CHECK(std::abs(wild.array().exp().sum() - 1) < 1e-12);

  // Log-domain result against the quotient formula in the safe range.
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    Vector x = FloorSimplex(5).sample(rng).array() + 1e-3;
    x /= x.sum();
    Vector zeta(5);
    for (Index i = 0; i < 5; ++i) zeta(i) = standard_normal(rng);
    const Vector quotient = (x.array() * (-zeta.array()).exp()) / (x.array() * (-zeta.array()).exp()).sum();
    const Vector logdomain = prox_entropy(x.array().log().matrix(), zeta).array().exp();
    CHECK((quotient - logdomain).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(std::abs(logdomain.sum() - 1) < 1e-12);
  }
}

TEST_CASE("p-norm prox") {
  const auto set = std::make_shared<FloorSimplex>(3, 1.0, 0.1);
  const PNormSetup setup(set);
  const PNormSetup::ProxDetail fixed = setup.prox_detail(setup.center(), Vector::Zero(3));
  CHECK((fixed.point - setup.center()).norm() < 1e-8);
  CHECK(std::abs(fixed.sum_residual) <= 1e-10);

  Rng rng(2);
  double worst = 0;
  for (int k = 0; k < 10; ++k) {
    const Vector x = set->sample(rng);
    Vector zeta(3);
    for (Index i = 0; i < 3; ++i) zeta(i) = standard_normal(rng);
    const PNormSetup::ProxDetail d = setup.prox_detail(x, zeta);
    CHECK(set->contains(d.point));
    CHECK(std::abs(d.sum_residual) <= 1e-10);
    worst = std::max(worst, (d.point - grid_prox(setup, x, zeta, 0.1)).lpNorm<Eigen::Infinity>());
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("setup constants") {
  const auto simplex100 = std::make_shared<FloorSimplex>(100);
  const SetupConstants entropy = setup_constants("entropy", simplex100);
  CHECK(entropy.radius == doctest::Approx(3.034854258770293).epsilon(1e-14));
  CHECK(entropy.mu == 1.0);
  CHECK((entropy.center - Vector::Constant(100, 0.01)).norm() < 1e-15);

  const SetupConstants euclid = setup_constants("euclidean", simplex100);
  CHECK(euclid.mu == 1.0);
  REQUIRE(euclid.growth.has_value());
  CHECK(*euclid.growth == 1.0);

  const auto floor3 = std::make_shared<FloorSimplex>(3, 1.0, 0.1);
  const SetupConstants pnorm = setup_constants("pnorm", floor3);
  const double p = 1 + 1 / std::log(3.0);
  CHECK(pnorm.mu == doctest::Approx(std::exp(1.0) / (3 * std::pow(1.0, 2 - p))).epsilon(1e-14));
  REQUIRE(pnorm.growth.has_value());
  CHECK(*pnorm.growth == doctest::Approx(std::exp(1.0) / std::pow(0.1, 1 - 1 / std::log(3.0))).epsilon(1e-14));
  CHECK(pnorm.mu <= *pnorm.growth);

  CHECK_THROWS_AS(make_setup("entropy", std::make_shared<FloorSimplex>(3, 1.0, 0.1)), UnsupportedCapability);
  CHECK_THROWS_AS(make_setup("entropy", make_box_simplex(3)), UnsupportedCapability);
  CHECK_THROWS(make_setup("hyperbolic", simplex100));
}

TEST_CASE("bregman first-order conditions") {
  Rng rng(3);
  const auto set = std::make_shared<FloorSimplex>(5);
  for (const char* name : {"euclidean", "entropy", "pnorm"}) {
    const ProximalSetupPtr setup = make_setup(name, set);
    CHECK(set->contains(setup->center()));
    CHECK((setup->prox(setup->center(), Vector::Zero(5)) - setup->center()).norm() < 1e-8);
    for (int k = 0; k < 50; ++k) {
      const Vector x = 0.5 * set->sample(rng) + 0.5 * setup->center();
      const Vector y = set->sample(rng);
      CHECK(setup->bregman(x, y) >= -1e-14);
      // Strong convexity with modulus mu in the setup norm.
      const double d = primal_norm(y - x, setup->norm());
      CHECK(setup->bregman(x, y) >= 0.5 * setup->mu() * d * d - 1e-12);
    }
  }
}

TEST_CASE("ball-restricted prox") {
  const auto simplex2 = std::make_shared<FloorSimplex>(2);
  const EuclideanSetup setup(simplex2);
  const Vector got = prox_ball_restricted(setup, vec({1, 0}), 0.1, vec({0, 1}), Vector::Zero(2));
  const double s = 0.1 / std::sqrt(2.0);
  CHECK((got - vec({1 - s, s})).norm() < 1e-7);

  const Vector c = vec({1, 0});
  CHECK((prox_ball_restricted(setup, c, 0.1, c, Vector::Zero(2)) - c).norm() < 1e-12);

  const auto simplex6 = std::make_shared<FloorSimplex>(6);
  const EuclideanSetup setup6(simplex6);
  Rng rng(4);
  for (int k = 0; k < 50; ++k) {
    const Vector x = simplex6->sample(rng);
    Vector zeta(6);
    for (Index i = 0; i < 6; ++i) zeta(i) = standard_normal(rng);
    // Inactive ball.
    CHECK((prox_ball_restricted(setup6, x, 10.0, x, zeta) - prox_euclidean(x, zeta, *simplex6)).norm() < 1e-9);
    const Vector center = simplex6->sample(rng);
    const double r = 0.05 + 0.3 * uniform01(rng);
    const Vector restricted = prox_ball_restricted(setup6, center, r, x, zeta);
    const Vector oracle = ball_projection_by_multiplier(*simplex6, center, r, x - zeta);
    CHECK((restricted - oracle).norm() < 1e-6);
    CHECK((restricted - center).norm() <= r + 1e-7);
  }

  const EntropySetup entropy(simplex2);
  CHECK_THROWS_AS(prox_ball_restricted(entropy, c, 0.1, c, Vector::Zero(2)), UnsupportedCapability);
}
