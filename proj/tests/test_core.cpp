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

}  // namespace

TEST_CASE("simplex projection") {
  CHECK((project_scaled_simplex(vec({0.5, 0.5, 0.5}), 1.0) - Vector::Constant(3, 1.0 / 3)).norm() < 1e-15);
  CHECK((project_scaled_simplex(vec({2, 0, 0}), 1.0) - vec({1, 0, 0})).norm() < 1e-15);
  CHECK((project_scaled_simplex(vec({0.8, 0.6, -1}), 1.0) - vec({0.6, 0.4, 0})).norm() < 1e-15);
  CHECK((project_scaled_simplex(vec({0, 0}), 1.0) - vec({0.5, 0.5})).norm() < 1e-15);

  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    Vector y(7);
    for (Index i = 0; i < 7; ++i) y(i) = 3 * standard_normal(rng);
    const Vector p = project_scaled_simplex(y, 1.0);
    CHECK(std::abs(p.sum() - 1) < 1e-12);
    CHECK(p.minCoeff() >= 0);
    // Variational inequality against random feasible points.
    FloorSimplex s(7);
    for (int j = 0; j < 10; ++j) CHECK((y - p).dot(s.sample(rng) - p) <= 1e-12);
  }
}

TEST_CASE("floor simplex lmo, projection, membership") {
  FloorSimplex plain(3);
  CHECK((plain.lmo(vec({3, 1, 2})) - vec({0, 1, 0})).norm() == 0);
  FloorSimplex floor(3, 1.0, 0.1);
  CHECK((floor.lmo(vec({3, 1, 2})) - vec({0.1, 0.8, 0.1})).norm() < 1e-15);
  CHECK(floor.contains(floor.start_point()));
  CHECK_FALSE(floor.contains(vec({0.05, 0.9, 0.05})));
  CHECK(floor.contains(floor.project(vec({5, -2, 1}))));
  CHECK_THROWS_AS(FloorSimplex(3, 1.0, 0.4), InfeasibleInstance);

  Rng rng(11);
  for (int k = 0; k < 1000; ++k) {
    Vector c(3);
    for (Index i = 0; i < 3; ++i) c(i) = standard_normal(rng);
    const Vector v = floor.lmo(c);
    CHECK(floor.contains(v));
    for (int j = 0; j < 5; ++j) CHECK(c.dot(v) <= c.dot(floor.sample(rng)) + 1e-12);
  }
}

TEST_CASE("box times simplex") {
  const FeasibleSetPtr set = make_box_simplex(3);
  CHECK(set->dimension() == 4);
  CHECK((set->lmo(vec({-1, 3, 1, 2})) - vec({1, 0, 1, 0})).norm() == 0);
  const Vector feasible = vec({0.3, 0.2, 0.5, 0.3});
  CHECK(set->contains(feasible));
  CHECK((set->project(feasible) - feasible).norm() < 1e-15);
  CHECK((set->project(vec({4, 1, 0, 0})) - vec({1, 1, 0, 0})).norm() < 1e-15);
  CHECK_FALSE(set->contains(vec({1.5, 1, 0, 0})));
}

TEST_CASE("dimension mismatch and infeasible points") {
  const ProblemSpec p = gen_instance1({.n = 4, .seed = 1});
  CHECK_THROWS_AS(oracle_eval(p, Vector::Constant(3, 1.0 / 3), Vector::Ones(4)), ContractViolation);
  CHECK_THROWS_AS(oracle_eval(p, vec({0.5, 0.5, 0.5, 0.5}), Vector::Ones(4)), DomainError);
  CHECK_THROWS_AS(p.set->lmo(Vector::Ones(2)), ContractViolation);
}

TEST_CASE("instance 1 oracle at a hand-evaluated point") {
  Instance1Spec s;
  s.n = 4;
  s.alpha0 = 0.1;
  s.alpha1 = 0.9;
  s.seed = 2;
  const ProblemSpec p = gen_instance1(s);
  const OracleSample o = oracle_eval(p, Vector::Constant(4, 0.25), Vector::Ones(4));
  CHECK(o.value == doctest::Approx(0.55).epsilon(1e-15));
}

TEST_CASE("exhaustive outcome average equals the exact objective") {
  Instance1Spec s;
  s.n = 3;
  s.lambda0 = 0.5;
  s.seed = 4;
  const ProblemSpec p = gen_instance1(s);
  const WeightedDraws atoms = p.support();
  REQUIRE(atoms.size() == 8);
  Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    const Vector x = p.set->sample(rng);
    double value = 0;
    Vector grad = Vector::Zero(3);
    for (const auto& [w, draw] : atoms) {
      const OracleSample o = oracle_eval(p, x, draw);
      value += w * o.value;
      grad += w * o.subgradient;
    }
    CHECK(std::abs(value - p.exact_value(x)) < 1e-12);
    CHECK((grad - p.exact_subgradient(x)).norm() < 1e-12);
  }
}

TEST_CASE("oracle bounds and sample mean consistency") {
  Instance1Spec s;
  s.n = 10;
  s.seed = 6;
  const ProblemSpec p = gen_instance1(s);
  Rng rng(7);
  const Vector x = p.set->sample(rng);
  const double f = p.exact_value(x);
  const int count = 100000;
  double sum = 0, sq = 0;
  for (int k = 0; k < count; ++k) {
    const OracleSample o = oracle_eval(p, x, p.sampler(rng));
    sum += o.value;
    sq += o.value * o.value;
    CHECK(dual_norm(o.subgradient, p.norm) <= p.constants.M2 + p.constants.L + 1e-12);
  }
  const double mean = sum / count;
  const double sd = std::sqrt(sq / count - mean * mean);
  CHECK(std::abs(mean - f) <= 4 * sd / std::sqrt(static_cast<double>(count)));
}

TEST_CASE("random streams and hashes") {
  Rng rng;
  for (int i = 1; i < 10000; ++i) rng();
  CHECK(rng() == 9981545732273789042ULL);
  CHECK(splitmix64(0) == 16294208416658607535ULL);
  CHECK(hash_string("") == 14695981039346656037ULL);
  CHECK(hash_string("instance1") == 16167972564461214521ULL);
  CHECK(hash_combine(1, 2) == 15039531164227991741ULL);

  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    const double u = uniform01(a);
    CHECK(u == uniform01(b));
    CHECK(u >= 0);
    CHECK(u < 1);
  }
}

TEST_CASE("draw_sample replays the solver stream") {
  const ProblemSpec p = gen_instance1({.n = 5, .seed = 9});
  const auto first = draw_sample(p, 20, 123);
  const auto second = draw_sample(p, 20, 123);
  REQUIRE(first.size() == 20);
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(first[i] == second[i]);
}

TEST_CASE("constant sheet validation") {
  ConstantSheet c;
  c.L = 1;
  c.M1 = 1;
  c.M2 = 1;
  c.D_X = 1;
  CHECK_NOTHROW(c.validate());
  c.M2 = -1;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
}
