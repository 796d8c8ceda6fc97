#include "mirror_bounds/eprm.hpp"

#include "mirror_bounds/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mirror_bounds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate(const EprmModel& m) {
  const Index k1 = m.k1(), k2 = m.dim_y2(), r = m.rows();
  auto fail = [](const std::string& what) { throw ContractViolation("eprm model: " + what); };
  if (k1 < 1) fail("A1 needs at least one column");
  if (k2 < 1 || r < 1) fail("B20 must be nonempty");
  if (m.a1.size() != m.A1.rows()) fail("a1 length differs from the rows of A1");
  if (m.A2.rows() > 0 && m.A2.cols() != k2) fail("A2 columns differ from B20 columns");
  if (m.a2.size() != m.A2.rows()) fail("a2 length differs from the rows of A2");
  if (m.B21.rows() != r || m.B21.cols() != k1) fail("B21 must be rows(B20) x cols(A1)");
  if (m.c1.size() != k1) fail("c1 length differs from cols(A1)");
  if (m.c2.size() != k2) fail("c2 length differs from cols(B20)");
  if (m.k2.size() != r || m.kt2.size() != r) fail("k2 and kt2 need rows(B20) entries");
}

Matrix a2_matrix(const EprmModel& m) { return m.A2.rows() > 0 ? m.A2 : Matrix(0, m.dim_y2()); }

// Dual feasible set D = {(l1, l2) : B20'l1 + A2'l2 = c2, l2 <= 0}, variables stacked (l1, l2).
LpProblem dual_set_lp(const EprmModel& m, const Vector& objective) {
  const Index r = m.rows(), m2 = m.A2.rows();
  LpProblem lp;
  lp.c = objective;
  lp.A_eq.resize(m.dim_y2(), r + m2);
  lp.A_eq.leftCols(r) = m.B20.transpose();
  if (m2 > 0) lp.A_eq.rightCols(m2) = m.A2.transpose();
  lp.b_eq = m.c2;
  lp.lower = Vector::Constant(r + m2, -kInf);
  lp.upper = Vector::Constant(r + m2, kInf);
  lp.upper.tail(m2).setZero();
  return lp;
}

Vector second_stage_rhs(const EprmModel& m, const Vector& y1, double z) { return z * m.k2 + m.kt2 - m.B21 * y1; }

std::string status_message(const char* what, LpStatus s) {
  std::ostringstream os;
  os << what << " LP ended with status " << to_string(s);
  return os.str();
}

}  // namespace

AssumptionReport check_assumptions(const EprmModel& model) {
  validate(model);
  const Index k1 = model.k1(), r = model.rows(), m2 = model.A2.rows();
  AssumptionReport rep;

  rep.y1_lower.resize(k1);
  rep.y1_upper.resize(k1);
  for (Index j = 0; j < k1; ++j) {
    for (const double sign : {1.0, -1.0}) {
      LpProblem lp;
      lp.c = Vector::Zero(k1);
      lp.c(j) = sign;
      lp.A_ineq = model.A1;
      lp.b_ineq = model.a1;
      const LpSolution s = lp_solve(lp);
      if (s.status == LpStatus::Infeasible) throw AssumptionViolation("eprm: first-stage set Y1 is empty");
      if (s.status != LpStatus::Optimal) throw AssumptionViolation("eprm: first-stage set Y1 is unbounded");
      (sign > 0 ? rep.y1_lower : rep.y1_upper)(j) = sign * s.value;
    }
  }

  // Complete recourse: every right-hand side +-t e_i is reachable.
  for (Index i = 0; i < r; ++i) {
    for (const double t : {1.0, -1.0, 1e4, -1e4}) {
      LpProblem lp;
      lp.c = Vector::Zero(model.dim_y2());
      lp.A_eq = model.B20;
      lp.b_eq = Vector::Zero(r);
      lp.b_eq(i) = t;
      lp.A_ineq = a2_matrix(model);
      lp.b_ineq = model.a2;
      if (!lp_solve(lp).optimal())
        throw AssumptionViolation("eprm: complete recourse fails for right-hand side direction " + std::to_string(i));
    }
  }

  rep.lambda1_lower.resize(r);
  rep.lambda1_upper.resize(r);
  for (Index i = 0; i < r + m2; ++i) {
    for (const double sign : {1.0, -1.0}) {
      Vector obj = Vector::Zero(r + m2);
      obj(i) = sign;
      const LpSolution s = lp_solve(dual_set_lp(model, obj));
      if (s.status == LpStatus::Infeasible) throw AssumptionViolation("eprm: second-stage dual set is empty");
      if (s.status != LpStatus::Optimal) throw AssumptionViolation("eprm: second-stage dual set is unbounded");
      if (i < r) (sign > 0 ? rep.lambda1_lower : rep.lambda1_upper)(i) = sign * s.value;
    }
  }

  Vector obj = Vector::Zero(r + m2);
  obj.head(r) = model.k2;
  rep.min_lambda_k2 = lp_solve(dual_set_lp(model, obj)).value;
  rep.max_lambda_k2 = -lp_solve(dual_set_lp(model, -obj)).value;
  if (rep.min_lambda_k2 < -1e-9)
    throw AssumptionViolation("eprm: lambda1'k2 takes negative values on the dual set (monotonicity)");
  return rep;
}

SecondStage second_stage(const EprmModel& model, const Vector& y1, double z, bool tie_break) {
  if (y1.size() != model.k1()) throw ContractViolation("second_stage: y1 has the wrong dimension");
  const Index r = model.rows(), m2 = model.A2.rows();
  const Vector rhs = second_stage_rhs(model, y1, z);
  LpProblem lp;
  lp.c = model.c2;
  lp.A_eq = model.B20;
  lp.b_eq = rhs;
  lp.A_ineq = a2_matrix(model);
  lp.b_ineq = model.a2;
  const LpSolution sol = lp_solve(lp);
  if (!sol.optimal()) throw NumericalError(status_message("second-stage", sol.status));

  SecondStage out;
  out.value = sol.value;
  out.y2 = sol.y;
  out.lambda1 = sol.dual_eq;
  out.lambda2 = sol.dual_ineq;
  out.gap = std::abs(sol.gap);
  out.primal_residual = sol.primal_residual;
  out.dual_residual = sol.dual_residual;
  if (!tie_break) return out;

  // Least-l1 lambda1 on the optimal dual face, lambda1 = p - q.
  LpProblem tb;
  const Index nv = 2 * r + m2;
  tb.c = Vector::Zero(nv);
  tb.c.head(2 * r).setOnes();
  tb.A_eq.resize(model.dim_y2(), nv);
  tb.A_eq.leftCols(r) = model.B20.transpose();
  tb.A_eq.middleCols(r, r) = -model.B20.transpose();
  if (m2 > 0) tb.A_eq.rightCols(m2) = model.A2.transpose();
  tb.b_eq = model.c2;
  tb.A_ineq.resize(1, nv);
  tb.A_ineq.leftCols(r) = -rhs.transpose();
  tb.A_ineq.middleCols(r, r) = rhs.transpose();
  if (m2 > 0) tb.A_ineq.rightCols(m2) = -model.a2.transpose();
  tb.b_ineq = Vector::Constant(1, -(sol.value - 1e-11 * (1.0 + std::abs(sol.value))));
  tb.lower = Vector::Zero(nv);
  tb.upper = Vector::Constant(nv, kInf);
  tb.lower.tail(m2).setConstant(-kInf);
  tb.upper.tail(m2).setZero();
  const LpSolution t = lp_solve(tb);
  // The face tolerance perturbs the tie-break solution; keep the simplex dual unless it is beaten.
  if (t.optimal() && t.value < sol.dual_eq.lpNorm<1>() - 1e-9) {
    out.lambda1 = t.y.head(r) - t.y.segment(r, r);
    out.lambda2 = t.y.tail(m2);
  }
  return out;
}

EprmValue eprm_evaluate(const EprmModel& model, const std::vector<std::pair<double, double>>& atoms) {
  validate(model);
  if (atoms.empty()) throw ContractViolation("eprm_evaluate: no atoms");
  double total = 0;
  for (const auto& [w, z] : atoms) {
    if (!(w >= 0) || !std::isfinite(z)) throw ContractViolation("eprm_evaluate: weights must be >= 0, atoms finite");
    total += w;
  }
  if (!(total > 0)) throw ContractViolation("eprm_evaluate: weights sum to zero");

  const Index k1 = model.k1();
  auto evaluate = [&](const Vector& y1, Vector& slope) {
    double v = model.c1.dot(y1);
    slope = model.c1;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const double w = atoms[i].first / total;
      if (w == 0) continue;
      SecondStage s;
      try {
        s = second_stage(model, y1, atoms[i].second, false);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at atom " + std::to_string(i));
      }
      v += w * s.value;
      slope -= w * (model.B21.transpose() * s.lambda1);
    }
    return v;
  };

  // Kelley cutting planes; master: min c1'y1 + theta over Y1 and the cuts.
  LpProblem master;
  master.c = Vector::Zero(k1 + 1);
  master.c.head(k1) = model.c1;
  master.c(k1) = 1.0;
  master.A_ineq = Matrix::Zero(model.A1.rows(), k1 + 1);
  master.A_ineq.leftCols(k1) = model.A1;
  master.b_ineq = model.a1;

  LpProblem feas;
  feas.c = Vector::Zero(k1);
  feas.A_ineq = model.A1;
  feas.b_ineq = model.a1;
  const LpSolution start = lp_solve(feas);
  if (!start.optimal()) throw AssumptionViolation("eprm: first-stage set Y1 is empty");

  EprmValue best;
  best.value = kInf;
  Vector y1 = start.y;
  double lower = -kInf;
  for (int it = 1; it <= 2000; ++it) {
    Vector slope;
    const double v = evaluate(y1, slope);
    if (v < best.value) {
      best.value = v;
      best.y1 = y1;
    }
    best.iterations = it;
    best.gap = best.value - lower;
    if (best.gap <= 1e-9 * (1.0 + std::abs(best.value))) return best;
    // theta >= (v - c1'y1) + (slope - c1)'(y - y1)
    const Vector s2 = slope - model.c1;
    const Index row = master.A_ineq.rows();
    master.A_ineq.conservativeResize(row + 1, Eigen::NoChange);
    master.b_ineq.conservativeResize(row + 1);
    master.A_ineq.row(row).head(k1) = s2.transpose();
    master.A_ineq(row, k1) = -1.0;
    master.b_ineq(row) = s2.dot(y1) - (v - model.c1.dot(y1));
    const LpSolution m = lp_solve(master);
    if (!m.optimal()) throw NumericalError(status_message("cutting-plane master", m.status));
    lower = std::max(lower, m.value);
    y1 = m.y.head(k1);
  }
  throw ConvergenceError("eprm_evaluate: cutting planes did not close the gap", best.gap);
}

double eprm_evaluate(const EprmModel& model, const Vector& outcomes) {
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(static_cast<std::size_t>(outcomes.size()));
  for (Index i = 0; i < outcomes.size(); ++i) atoms.emplace_back(1.0, outcomes(i));
  return eprm_evaluate(model, atoms).value;
}

EprmModel cvar_as_eprm(double epsilon, double r) {
  if (!(epsilon > 0 && epsilon <= 1)) throw ConfigurationError("cvar_as_eprm: epsilon must lie in (0, 1]");
  if (!(r > 0)) throw ConfigurationError("cvar_as_eprm: r must be positive");
  EprmModel m;
  m.A1 = (Matrix(2, 1) << 1, -1).finished();
  m.a1 = Vector::Constant(2, r);
  m.c1 = Vector::Ones(1);
  m.B20 = (Matrix(1, 2) << 1, -1).finished();
  m.B21 = Matrix::Ones(1, 1);
  m.c2 = (Vector(2) << 1.0 / epsilon, 0.0).finished();
  m.A2 = -Matrix::Identity(2, 2);
  m.a2 = Vector::Zero(2);
  m.k2 = Vector::Ones(1);
  m.kt2 = Vector::Zero(1);
  return m;
}

EprmModel mean_cvar_as_eprm(double alpha0, double alpha1, double epsilon, double r) {
  if (!(epsilon > 0 && epsilon <= 1)) throw ConfigurationError("mean_cvar_as_eprm: epsilon must lie in (0, 1]");
  if (!(alpha0 >= 0 && alpha1 >= 0)) throw ConfigurationError("mean_cvar_as_eprm: weights must be >= 0");
  if (!(r > 0)) throw ConfigurationError("mean_cvar_as_eprm: r must be positive");
  // y2 = (u, w, v): u - w = z - y1, v = z.
  EprmModel m;
  m.A1 = (Matrix(2, 1) << 1, -1).finished();
  m.a1 = Vector::Constant(2, r);
  m.c1 = Vector::Constant(1, alpha1);
  m.B20 = (Matrix(2, 3) << 1, -1, 0, 0, 0, 1).finished();
  m.B21 = (Matrix(2, 1) << 1, 0).finished();
  m.c2 = (Vector(3) << alpha1 / epsilon, 0.0, alpha0).finished();
  m.A2 = (Matrix(2, 3) << -1, 0, 0, 0, -1, 0).finished();
  m.a2 = Vector::Zero(2);
  m.k2 = Vector::Ones(2);
  m.kt2 = Vector::Zero(2);
  return m;
}

EprmModel expectation_as_eprm() {
  EprmModel m;
  m.A1 = (Matrix(2, 1) << 1, -1).finished();
  m.a1 = Vector::Zero(2);
  m.c1 = Vector::Zero(1);
  m.B20 = Matrix::Ones(1, 1);
  m.B21 = Matrix::Zero(1, 1);
  m.c2 = Vector::Ones(1);
  m.A2 = Matrix(0, 1);
  m.a2 = Vector(0);
  m.k2 = Vector::Ones(1);
  m.kt2 = Vector::Zero(1);
  return m;
}

ProblemSpec eprm_reformulate(const EprmModel& model, const ProblemSpec& inner) {
  const AssumptionReport rep = check_assumptions(model);
  if (!inner.set || !inner.oracle || !inner.sampler) throw ContractViolation("eprm_reformulate: incomplete inner problem");
  for (Index i = 0; i < model.A1.rows(); ++i) {
    if ((model.A1.row(i).array() != 0.0).count() != 1)
      throw UnsupportedCapability("eprm_reformulate: the first-stage set must be a box");
  }
  const Index k1 = model.k1();
  const Index n = inner.dimension();
  const auto shared = std::make_shared<const EprmModel>(model);

  ProblemSpec p;
  p.family = "eprm-" + inner.family;
  p.set = std::make_shared<BoxProduct>(rep.y1_lower, rep.y1_upper, inner.set);
  p.norm = inner.norm;
  p.oracle = [shared, oracle = inner.oracle, k1, n](const Vector& v, const RandomDraw& xi) {
    const Vector y1 = v.head(k1);
    const OracleSample g = oracle(v.tail(n), xi);
    const SecondStage s = second_stage(*shared, y1, g.value, true);
    OracleSample o;
    o.value = shared->c1.dot(y1) + s.value;
    o.subgradient.resize(k1 + n);
    o.subgradient.head(k1) = shared->c1 - shared->B21.transpose() * s.lambda1;
    o.subgradient.tail(n) = s.lambda1.dot(shared->k2) * g.subgradient;
    return o;
  };
  p.sampler = inner.sampler;
  if (inner.support) {
    p.support = inner.support;
    auto support = inner.support;
    p.exact_value = [shared, support, oracle = p.oracle](const Vector& v) {
      double f = 0;
      for (const auto& [w, xi] : support()) f += w * oracle(v, xi).value;
      return f;
    };
    p.exact_subgradient = [shared, support, oracle = p.oracle](const Vector& v) {
      Vector g = Vector::Zero(v.size());
      for (const auto& [w, xi] : support()) g += w * oracle(v, xi).subgradient;
      return g;
    };
  }

  // Dual-set radius of the first-stage block: |c1| plus the coordinate ranges of B21'lambda1.
  const Index r = model.rows(), m2 = model.A2.rows();
  double a = inner.norm == Norm::L1 ? model.c1.lpNorm<Eigen::Infinity>() : model.c1.norm();
  for (Index j = 0; j < k1; ++j) {
    Vector obj = Vector::Zero(r + m2);
    obj.head(r) = model.B21.col(j);
    const double lo = lp_solve(dual_set_lp(model, obj)).value;
    const double hi = -lp_solve(dual_set_lp(model, -obj)).value;
    a += std::max(std::abs(lo), std::abs(hi));
  }
  const double kmax = std::max(rep.max_lambda_k2, 0.0);
  const ConstantSheet& in = inner.constants;
  p.constants.L = a + kmax * in.L;
  p.constants.M1 = 2.0 * kmax * in.M1;
  p.constants.M2 = 2.0 * (a + kmax * (in.L + in.M2));
  p.constants.Mstar = p.constants.L;
  p.constants.D_X = p.set->max_distance_from(p.set->start_point(), p.norm);

  nlohmann::json d;
  d["family"] = p.family;
  d["model"] = to_json(model);
  d["inner"] = nlohmann::json::parse(inner.descriptor.empty() ? "null" : inner.descriptor);
  p.descriptor = d.dump();
  return p;
}

}  // namespace mirror_bounds
