#include "mirror_bounds/lp.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace mirror_bounds;

namespace {

// Minimum of c'y over {G y <= h} by enumerating every basis of active rows.
double vertex_enumeration(const Vector& c, const Matrix& G, const Vector& h) {
  const Index n = c.size();
  const Index m = G.rows();
  double best = std::numeric_limits<double>::infinity();
  std::vector<Index> pick(static_cast<std::size_t>(n));
  std::function<void(Index, Index)> recurse = [&](Index start, Index depth) {
    if (depth == n) {
      Matrix A(n, n);
      Vector b(n);
      for (Index k = 0; k < n; ++k) {
        A.row(k) = G.row(pick[static_cast<std::size_t>(k)]);
        b(k) = h(pick[static_cast<std::size_t>(k)]);
      }
      Eigen::FullPivLU<Matrix> lu(A);
      if (lu.rank() < n) return;
      const Vector y = lu.solve(b);
      if (((G * y - h).array() <= 1e-9).all()) best = std::min(best, c.dot(y));
      return;
    }
    for (Index i = start; i < m; ++i) {
      pick[static_cast<std::size_t>(depth)] = i;
      recurse(i + 1, depth + 1);
    }
  };
  recurse(0, 0);
  return best;
}

void check_certificates(const LpProblem& p, const LpSolution& s) {
  REQUIRE(s.optimal());
  CHECK(s.primal_residual <= 1e-8);
  CHECK(s.dual_residual <= 1e-8);
  CHECK(std::abs(s.value - s.dual_value) <= 1e-8 * (1 + std::abs(s.value)));
  if (s.dual_ineq.size() > 0) CHECK(s.dual_ineq.maxCoeff() <= 1e-12);
  Vector reconstructed = s.reduced_costs;
  if (p.A_ineq.rows() > 0) reconstructed += p.A_ineq.transpose() * s.dual_ineq;
  if (p.A_eq.rows() > 0) reconstructed += p.A_eq.transpose() * s.dual_eq;
  CHECK((reconstructed - p.c).norm() <= 1e-8);
}

}  // namespace

TEST_CASE("one-variable LP") {
  // min y  s.t.  -y <= -(z - t),  -y <= 0  with z - t = 0.3
  Matrix A(2, 1);
  A << -1, -1;
  Vector b(2);
  b << -0.3, 0;
  const LpSolution s = lp_solve_dense(Vector::Ones(1), A, b, Matrix(0, 1), Vector(0));
  REQUIRE(s.optimal());
  CHECK(s.y(0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(s.value == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(s.dual_ineq(0) == doctest::Approx(-1.0));
  CHECK(s.dual_ineq(1) == doctest::Approx(0.0));
}

TEST_CASE("infeasible and unbounded") {
  Matrix A(2, 1);
  A << 1, -1;
  Vector b(2);
  b << -1, 0;
  CHECK(lp_solve_dense(Vector::Ones(1), A, b, Matrix(0, 1), Vector(0)).status == LpStatus::Infeasible);

  Matrix U(1, 1);
  U << 1;
  Vector ub(1);
  ub << 1;
  CHECK(lp_solve_dense(Vector::Ones(1), U, ub, Matrix(0, 1), Vector(0)).status == LpStatus::Unbounded);

  Matrix E(2, 2);
  E << 1, 1, 1, 1;
  Vector eb(2);
  eb << 1, 2;
  CHECK(lp_solve_dense(Vector::Ones(2), Matrix(0, 2), Vector(0), E, eb).status == LpStatus::Infeasible);
}

TEST_CASE("random LPs against vertex enumeration") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 5, rows = 4;
    LpProblem p;
    p.c.resize(n);
    for (Index i = 0; i < n; ++i) p.c(i) = standard_normal(rng);
    p.A_ineq.resize(rows, n);
    for (Index r = 0; r < rows; ++r)
      for (Index i = 0; i < n; ++i) p.A_ineq(r, i) = standard_normal(rng);
    // Feasible at a random interior point of the box.
    Vector y0(n);
    for (Index i = 0; i < n; ++i) y0(i) = uniform(rng, -0.5, 0.5);
    p.b_ineq = p.A_ineq * y0 + Vector::Constant(rows, 0.1);
    p.A_eq.resize(0, n);
    p.b_eq.resize(0);
    p.lower = Vector::Constant(n, -1);
    p.upper = Vector::Constant(n, 1);
    const LpSolution s = lp_solve(p);
    check_certificates(p, s);

    Matrix G(rows + 2 * n, n);
    Vector h(rows + 2 * n);
    G << p.A_ineq, Matrix::Identity(n, n), -Matrix::Identity(n, n);
    h << p.b_ineq, Vector::Ones(n), Vector::Ones(n);
    CHECK(std::abs(s.value - vertex_enumeration(p.c, G, h)) <= 1e-9);
  }
}

TEST_CASE("equality constraints and free variables") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    // min c'y  s.t.  sum y = 1, y >= 0 has value min(c).
    const Index n = 6;
    LpProblem p;
    p.c.resize(n);
    for (Index i = 0; i < n; ++i) p.c(i) = standard_normal(rng);
    p.A_ineq.resize(0, n);
    p.b_ineq.resize(0);
    p.A_eq = Matrix::Ones(1, n);
    p.b_eq = Vector::Ones(1);
    p.lower = Vector::Zero(n);
    p.upper = Vector::Constant(n, std::numeric_limits<double>::infinity());
    const LpSolution s = lp_solve(p);
    check_certificates(p, s);
    CHECK(s.value == doctest::Approx(p.c.minCoeff()).epsilon(1e-12));
    CHECK(s.dual_eq(0) == doctest::Approx(p.c.minCoeff()).epsilon(1e-12));
  }
}

TEST_CASE("degenerate LP terminates") {
  // Many constraints through one vertex.
  const Index n = 3, rows = 12;
  Rng rng(3);
  Matrix A(rows, n);
  for (Index r = 0; r < rows; ++r)
    for (Index i = 0; i < n; ++i) A(r, i) = standard_normal(rng);
  const Vector b = Vector::Zero(rows);
  LpProblem p;
  p.c = -A.colwise().sum().transpose();
  p.A_ineq = A;
  p.b_ineq = b;
  p.A_eq.resize(0, n);
  p.b_eq.resize(0);
  p.lower = Vector::Constant(n, -1);
  p.upper = Vector::Constant(n, 1);
  const LpSolution s = lp_solve(p);
  check_certificates(p, s);
}
