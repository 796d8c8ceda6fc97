#include "mirror_bounds/problem.hpp"

#include <cmath>
#include <sstream>

namespace mirror_bounds {

double CvarPoolModel::value(const Vector& v) const {
  const double x0 = v(0);
  const auto x = v.tail(n());
  const Vector z = pool * x;
  const double P = static_cast<double>(pool.rows());
  const double excess = (z.array() - x0).cwiseMax(0.0).sum() / P;
  return alpha0 * z.sum() / P + alpha1 * (x0 + excess / epsilon) + lambda0 * v.squaredNorm();
}

Vector CvarPoolModel::subgradient(const Vector& v) const {
  const double x0 = v(0);
  const auto x = v.tail(n());
  const Vector z = pool * x;
  const double P = static_cast<double>(pool.rows());
  Vector active = (z.array() > x0).cast<double>();
  Vector g(v.size());
  g(0) = alpha1 * (1.0 - active.sum() / (P * epsilon));
  g.tail(n()) = pool.transpose() * (Vector::Constant(pool.rows(), alpha0 / P) + active * (alpha1 / (epsilon * P)));
  return g + 2.0 * lambda0 * v;
}

OracleSample oracle_eval(const ProblemSpec& problem, const Vector& x, const RandomDraw& draw) {
  if (x.size() != problem.dimension()) {
    std::ostringstream os;
    os << "oracle_eval: x has dimension " << x.size() << ", problem has " << problem.dimension();
    throw ContractViolation(os.str());
  }
  if (!problem.set->contains(x, kMembershipTol)) throw DomainError("oracle_eval: x outside the feasible set");
  OracleSample s = problem.oracle(x, draw);
  if (s.subgradient.size() != x.size()) throw ContractViolation("oracle_eval: subgradient dimension mismatch");
  if (!std::isfinite(s.value) || !s.subgradient.allFinite()) throw NumericalError("oracle_eval: non-finite oracle output");
  return s;
}

Vector lmo(const FeasibleSet& set, const Vector& c) { return set.lmo(c); }

std::vector<RandomDraw> draw_sample(const ProblemSpec& problem, long count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RandomDraw> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) out.push_back(problem.sampler(rng));
  return out;
}

}  // namespace mirror_bounds
