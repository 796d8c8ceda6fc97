#include "mirror_bounds/lp.hpp"
#include "mirror_bounds/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mirror_bounds {

namespace {

double frank_wolfe_gap(const FeasibleSet& set, const Vector& x, const Vector& grad) {
  return grad.dot(x - set.lmo(grad));
}

double max_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed");
  return es.eigenvalues().maxCoeff();
}

const BoxProduct& require_box_simplex(const FeasibleSet& set) {
  const auto* box = dynamic_cast<const BoxProduct*>(&set);
  if (!box || box->box_dimension() != 1) throw UnsupportedCapability("cvar reference solver needs a box x simplex set");
  const auto* simplex = dynamic_cast<const FloorSimplex*>(box->inner().get());
  if (!simplex || simplex->b() != 0.0) throw UnsupportedCapability("cvar reference solver needs a simplex factor");
  return *box;
}

// lambda0 = 0: the saddle dual
//   max t + w  s.t.  t <= (alpha0 mean + S'q)_i,  w <= (alpha1 - 1'q) x0 for x0 in {lo, hi},  0 <= q <= alpha1/(eps P)
// is an LP whose row multipliers are the primal (x0, x).
ReferenceSolution solve_cvar_lp(const CvarPoolModel& m, const BoxProduct& set) {
  const Index P = m.pool.rows();
  const Index n = m.n();
  const double lo = set.lower()(0), hi = set.upper()(0);
  const double a = set.inner()->dimension() > 0 ? dynamic_cast<const FloorSimplex&>(*set.inner()).a() : 1.0;
  const Vector mean = m.pool.colwise().mean().transpose();
  const double cap = m.alpha1 / (m.epsilon * static_cast<double>(P));
  // Variables: q (P), t, w.
  LpProblem lp;
  lp.c = Vector::Zero(P + 2);
  lp.c(P) = -a;
  lp.c(P + 1) = -1.0;
  lp.A_ineq = Matrix::Zero(n + 2, P + 2);
  lp.b_ineq.resize(n + 2);
  lp.A_ineq.topLeftCorner(n, P) = -m.pool.transpose();
  lp.A_ineq.block(0, P, n, 1).setOnes();
  lp.b_ineq.head(n) = m.alpha0 * mean;
  lp.A_ineq.block(n, 0, 1, P).setConstant(lo);
  lp.A_ineq(n, P + 1) = 1.0;
  lp.b_ineq(n) = lo * m.alpha1;
  lp.A_ineq.block(n + 1, 0, 1, P).setConstant(hi);
  lp.A_ineq(n + 1, P + 1) = 1.0;
  lp.b_ineq(n + 1) = hi * m.alpha1;
  lp.lower = Vector::Zero(P + 2);
  lp.upper = Vector::Constant(P + 2, cap);
  lp.lower(P) = lp.lower(P + 1) = -std::numeric_limits<double>::infinity();
  lp.upper(P) = lp.upper(P + 1) = std::numeric_limits<double>::infinity();
  // Warm start: the top epsilon tail at the uniform portfolio sits at the cap.
  {
    const Vector z = m.pool * Vector::Constant(n, a / static_cast<double>(n));
    std::vector<Index> order(static_cast<std::size_t>(P));
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return z(i) > z(j); });
    lp.start_at_upper.assign(static_cast<std::size_t>(P + 2), false);
    const auto k = static_cast<std::size_t>(std::floor(m.epsilon * static_cast<double>(P)));
    for (std::size_t i = 0; i < k && i < order.size(); ++i) lp.start_at_upper[static_cast<std::size_t>(order[i])] = true;
  }
  const LpSolution sol = lp_solve(lp);
  if (!sol.optimal()) throw ConvergenceError("cvar reference LP ended with status " + to_string(sol.status), 0.0);
  Vector v(n + 1);
  const Vector rho = -sol.dual_ineq;
  v(0) = rho(n) * lo + rho(n + 1) * hi;
  v.tail(n) = rho.head(n) * (a / std::max(rho.head(n).sum(), 1e-300));
  v(0) = std::clamp(v(0), lo, hi);
  ReferenceSolution out;
  out.x = set.project(v);
  out.value = m.value(out.x);
  const double lower = -sol.dual_value;
  out.gap = std::max(0.0, out.value - std::min(lower, -sol.value));
  out.iterations = sol.iterations;
  return out;
}

// lambda0 > 0: projected accelerated ascent on the smooth dual over q in [0, alpha1/(eps P)]^P.
ReferenceSolution solve_cvar_dual(const CvarPoolModel& m, const BoxProduct& set, double tol, long max_iterations) {
  const Index P = m.pool.rows();
  const Index n = m.n();
  const double lo = set.lower()(0), hi = set.upper()(0);
  const FeasibleSet& simplex = *set.inner();
  const Vector mean = m.pool.colwise().mean().transpose();
  const double cap = m.alpha1 / (m.epsilon * static_cast<double>(P));
  const double two_l = 2.0 * m.lambda0;

  auto primal = [&](const Vector& q) {
    Vector v(n + 1);
    v(0) = std::clamp(-(m.alpha1 - q.sum()) / two_l, lo, hi);
    v.tail(n) = simplex.project(-(m.alpha0 * mean + m.pool.transpose() * q) / two_l);
    return v;
  };
  auto dual_value = [&](const Vector& q, const Vector& v) {
    const auto x = v.tail(n);
    return m.alpha0 * mean.dot(x) + m.alpha1 * v(0) + q.dot(m.pool * x - Vector::Constant(P, v(0))) +
           m.lambda0 * v.squaredNorm();
  };
  // Lipschitz constant of the dual gradient: ||[S, -1]||^2 / (2 lambda0).
  Matrix gram(n + 1, n + 1);
  gram.topLeftCorner(n, n) = m.pool.transpose() * m.pool;
  const Vector col_sums = m.pool.colwise().sum().transpose();
  gram.block(0, n, n, 1) = -col_sums;
  gram.block(n, 0, 1, n) = -col_sums.transpose();
  gram(n, n) = static_cast<double>(P);
  const double lip = std::max(max_eigenvalue(gram), 1e-300) / two_l;

  Vector q = Vector::Zero(P);
  Vector y = q;
  double t = 1;
  Vector v = primal(q);
  double d_q = dual_value(q, v);
  ReferenceSolution best;
  best.x = v;
  best.value = m.value(v);
  best.gap = best.value - d_q;
  for (long it = 1; it <= max_iterations; ++it) {
    const Vector vy = primal(y);
    const Vector grad = m.pool * vy.tail(n) - Vector::Constant(P, vy(0));
    const Vector q_new = (y + grad / lip).cwiseMax(0.0).cwiseMin(cap);
    const Vector v_new = primal(q_new);
    const double d_new = dual_value(q_new, v_new);
    if (d_new < d_q) {
      y = q;
      t = 1;
      continue;
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = q_new + ((t - 1.0) / t_new) * (q_new - q);
    q = q_new;
    t = t_new;
    d_q = d_new;
    if (it % 10 == 0 || it == max_iterations) {
      const double f = m.value(v_new);
      if (f - d_q < best.gap) {
        best.x = v_new;
        best.value = f;
        best.gap = f - d_q;
      }
      best.iterations = it;
      if (best.gap <= tol) return best;
    }
  }
  throw ConvergenceError("cvar reference dual ascent hit the iteration cap", best.gap);
}

}  // namespace

ReferenceSolution solve_quadratic(const QuadraticModel& model, const FeasibleSet& set, double tol,
                                  long max_iterations) {
  const Index n = set.dimension();
  if (model.q.size() != n || model.Q.rows() != n || model.Q.cols() != n)
    throw ContractViolation("quadratic model dimension mismatch");
  ReferenceSolution out;
  const double lip = max_eigenvalue(model.Q);
  if (lip <= 1e-14 * std::max(1.0, model.q.lpNorm<Eigen::Infinity>())) {
    out.x = set.lmo(model.q);
    out.value = model.value(out.x);
    out.gap = std::max(0.0, frank_wolfe_gap(set, out.x, model.gradient(out.x)));
    return out;
  }
  Vector x = set.start_point();
  Vector y = x;
  double fx = model.value(x);
  double t = 1;
  double gap = std::numeric_limits<double>::infinity();
  for (long it = 1; it <= max_iterations; ++it) {
    const Vector x_new = set.project(y - model.gradient(y) / lip);
    const double f_new = model.value(x_new);
    if (f_new > fx && t > 1) {
      y = x;
      t = 1;
      continue;
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_new + ((t - 1.0) / t_new) * (x_new - x);
    x = x_new;
    fx = f_new;
    t = t_new;
    if (it % 5 == 0) {
      gap = frank_wolfe_gap(set, x, model.gradient(x));
      out.iterations = it;
      if (gap <= tol) break;
    }
  }
  if (!(gap <= tol)) throw ConvergenceError("quadratic reference solver hit the iteration cap", gap);
  out.x = x;
  out.value = fx;
  out.gap = std::max(0.0, gap);
  return out;
}

ReferenceSolution solve_cvar_pool(const CvarPoolModel& model, const FeasibleSet& set, double tol,
                                  long max_iterations) {
  const BoxProduct& box = require_box_simplex(set);
  if (box.dimension() != model.n() + 1) throw ContractViolation("cvar model dimension mismatch");
  if (model.lambda0 == 0.0) {
    ReferenceSolution s = solve_cvar_lp(model, box);
    if (s.gap > tol) throw ConvergenceError("cvar reference LP gap above tolerance", s.gap);
    return s;
  }
  return solve_cvar_dual(model, box, tol, max_iterations);
}

ReferenceSolution exact_optimum(const ProblemSpec& problem, std::optional<double> tol) {
  if (const auto* q = std::get_if<QuadraticModel>(&problem.reference))
    return solve_quadratic(*q, *problem.set, tol.value_or(1e-8));
  if (const auto* c = std::get_if<CvarPoolModel>(&problem.reference))
    return solve_cvar_pool(*c, *problem.set, tol.value_or(1e-6));
  throw UnsupportedCapability("problem '" + problem.family + "' has no reference model");
}

SaaSolution saa_solve(const ProblemSpec& problem, const std::vector<RandomDraw>& sample, std::optional<double> tol) {
  if (!problem.empirical_model) throw UnsupportedCapability("problem '" + problem.family + "' has no empirical model");
  const ReferenceModel model = problem.empirical_model(sample);
  ReferenceSolution r;
  if (const auto* q = std::get_if<QuadraticModel>(&model)) r = solve_quadratic(*q, *problem.set, tol.value_or(1e-8));
  else if (const auto* c = std::get_if<CvarPoolModel>(&model)) r = solve_cvar_pool(*c, *problem.set, tol.value_or(1e-6));
  else throw UnsupportedCapability("empirical model of unsupported kind");
  SaaSolution s;
  s.x = r.x;
  s.value = r.value;
  s.gap = r.gap;
  s.iterations = r.iterations;
  double ss = 0;
  for (const auto& draw : sample) {
    const double d = oracle_eval(problem, s.x, draw).value - s.value;
    ss += d * d;
  }
  s.sigma = std::sqrt(ss / static_cast<double>(sample.size()));
  return s;
}

}  // namespace mirror_bounds
