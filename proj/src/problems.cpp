#include "mirror_bounds/problems.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mirror_bounds {

namespace {

std::uint64_t stream_seed(std::uint64_t seed, const char* tag) { return hash_combine(seed, hash_string(tag)); }

// x'Vx and Vx for V = I + mu mu' - diag(mu^2).
double v_quadratic(const Vector& mu, const Vector& x) {
  const double m = mu.dot(x);
  return m * m - (mu.array().square() * x.array().square()).sum() + x.squaredNorm();
}

Vector v_times(const Vector& mu, const Vector& x) {
  return mu * mu.dot(x) - (mu.array().square() * x.array()).matrix() + x;
}

}  // namespace

Matrix Instance1Spec::second_moment() const {
  const Vector mu = mean();
  Matrix V = mu * mu.transpose();
  V.diagonal().setOnes();
  return V;
}

Instance1Spec complete_instance1(Instance1Spec spec) {
  if (spec.n < 1) throw ConfigurationError("instance1: n must be >= 1");
  if (!(spec.b < spec.a / static_cast<double>(spec.n))) throw InfeasibleInstance("instance1: requires b < a/n");
  if (spec.alpha1 < 0 || spec.lambda0 < 0) throw ConfigurationError("instance1: alpha1 and lambda0 must be >= 0");
  if (spec.psi.size() == 0) {
    Rng rng(stream_seed(spec.seed, "psi"));
    spec.psi.resize(spec.n);
    for (Index i = 0; i < spec.n; ++i) spec.psi(i) = uniform01(rng);
  }
  if (spec.psi.size() != spec.n) throw ConfigurationError("instance1: psi has the wrong dimension");
  if (spec.psi.minCoeff() < 0 || spec.psi.maxCoeff() > 1) throw ConfigurationError("instance1: psi outside [0, 1]");
  return spec;
}

double min_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed");
  return es.eigenvalues().minCoeff();
}

ConstantSheet instance1_constants(const Instance1Spec& s) {
  const double a0 = std::abs(s.alpha0);
  const double rn = std::sqrt(static_cast<double>(s.n));
  ConstantSheet c;
  if (s.norm == Norm::L1) {
    c.L = a0 + s.alpha1 * s.a * (1.0 + s.lambda0);
    c.M2 = 2.0 * a0 + s.alpha1 * s.a;
  } else {
    c.L = a0 * rn + s.alpha1 * s.a * (1.0 + s.lambda0) * rn;
    c.M2 = 2.0 * a0 * rn + 2.0 * s.alpha1 * s.a * rn;
  }
  c.M1 = 2.0 * a0 * s.a + 0.5 * s.alpha1 * s.a * s.a;
  // Almost-sure bound on the dual norm of G.
  c.Mstar = c.L;
  const FloorSimplex set(s.n, s.a, s.b);
  c.D_X = set.max_distance_from(set.start_point(), s.norm);
  if (s.mu_f_override) {
    c.rho = 2.0;
    c.mu_f = *s.mu_f_override;
  } else if (s.lambda0 > 0) {
    const double lmin = std::max(0.0, min_eigenvalue(s.second_moment()));
    c.rho = 2.0;
    c.mu_f = s.alpha1 * (lmin + s.lambda0) / (s.norm == Norm::L1 ? static_cast<double>(s.n) : 1.0);
  }
  return c;
}

ConstantSheet instance2_constants(const Instance2Spec& s) {
  const double n = static_cast<double>(s.n);
  const double inv = 1.0 / s.epsilon;
  const double r = std::sqrt(s.alpha1 * s.alpha1 * (1.0 - inv) * (1.0 - inv) +
                             n * (s.alpha0 + s.alpha1 * inv) * (s.alpha0 + s.alpha1 * inv));
  ConstantSheet c;
  c.L = r + 2.0 * s.lambda0;
  c.M1 = 2.0 * (s.alpha0 + s.alpha1 * inv);
  c.M2 = std::sqrt((s.alpha1 * inv) * (s.alpha1 * inv) + 4.0 * n * (s.alpha0 + s.alpha1 * inv) * (s.alpha0 + s.alpha1 * inv));
  c.Mstar = r;
  const auto set = make_box_simplex(s.n);
  c.D_X = set->max_distance_from(set->start_point(), Norm::L2);
  if (s.mu_f_override) {
    c.rho = 2.0;
    c.mu_f = *s.mu_f_override;
  } else if (s.lambda0 > 0) {
    c.rho = 2.0;
    c.mu_f = 2.0 * s.lambda0;
  }
  return c;
}

ProblemSpec gen_instance1(Instance1Spec spec) {
  const bool explicit_psi = spec.psi.size() > 0;
  spec = complete_instance1(std::move(spec));
  const Index n = spec.n;
  const Vector mu = spec.mean();
  const Vector psi = spec.psi;
  const double a0 = spec.alpha0, a1 = spec.alpha1, l0 = spec.lambda0;

  ProblemSpec p;
  p.family = "instance1";
  p.set = std::make_shared<FloorSimplex>(n, spec.a, spec.b);
  p.constants = instance1_constants(spec);
  p.norm = spec.norm;
  p.oracle = [a0, a1, l0](const Vector& x, const RandomDraw& xi) {
    const double s = xi.dot(x);
    OracleSample o;
    o.value = a0 * s + 0.5 * a1 * (s * s + l0 * x.squaredNorm());
    o.subgradient = a0 * xi + a1 * (s * xi + l0 * x);
    return o;
  };
  p.sampler = [psi](Rng& rng) {
    RandomDraw xi(psi.size());
    for (Index i = 0; i < psi.size(); ++i) xi(i) = uniform01(rng) < psi(i) ? 1.0 : -1.0;
    return xi;
  };
  p.exact_value = [mu, a0, a1, l0](const Vector& x) {
    return a0 * mu.dot(x) + 0.5 * a1 * (v_quadratic(mu, x) + l0 * x.squaredNorm());
  };
  p.exact_subgradient = [mu, a0, a1, l0](const Vector& x) -> Vector {
    return a0 * mu + a1 * (v_times(mu, x) + l0 * x);
  };
  if (n <= 12) {
    p.support = [psi]() {
      const Index n = psi.size();
      WeightedDraws out;
      for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        RandomDraw xi(n);
        double w = 1;
        for (Index i = 0; i < n; ++i) {
          const bool up = (mask >> i) & 1ULL;
          xi(i) = up ? 1.0 : -1.0;
          w *= up ? psi(i) : 1.0 - psi(i);
        }
        out.emplace_back(w, xi);
      }
      return out;
    };
  }
  QuadraticModel model;
  model.q = a0 * mu;
  model.Q = a1 * spec.second_moment();
  model.Q.diagonal().array() += a1 * l0;
  p.reference = model;
  p.empirical_model = [a0, a1, l0, n](const std::vector<RandomDraw>& sample) -> ReferenceModel {
    if (sample.empty()) throw ConfigurationError("empirical model needs a nonempty sample");
    Matrix Xi(static_cast<Index>(sample.size()), n);
    for (std::size_t t = 0; t < sample.size(); ++t) Xi.row(static_cast<Index>(t)) = sample[t].transpose();
    const double N = static_cast<double>(sample.size());
    QuadraticModel m;
    m.q = a0 * Xi.colwise().sum().transpose() / N;
    m.Q = Matrix::Zero(n, n);
    m.Q.selfadjointView<Eigen::Lower>().rankUpdate(Xi.transpose(), a1 / N);
    m.Q = m.Q.selfadjointView<Eigen::Lower>();
    m.Q.diagonal().array() += a1 * l0;
    return m;
  };
  nlohmann::json d = {{"family", "instance1"}, {"n", n},         {"alpha0", a0},
                      {"alpha1", a1},          {"lambda0", l0},  {"a", spec.a},
                      {"b", spec.b},           {"norm", to_string(spec.norm)}, {"seed", spec.seed}};
  if (spec.mu_f_override) d["mu_f"] = *spec.mu_f_override;
  if (explicit_psi) d["psi"] = std::vector<double>(psi.data(), psi.data() + psi.size());
  p.descriptor = d.dump();
  return p;
}

Matrix scenario_pool(const Instance2Spec& s) {
  if (s.pool_size < 1) throw ConfigurationError("instance2: pool_size must be positive");
  Rng rng(stream_seed(s.seed, "pool"));
  Matrix pool(s.pool_size, s.n);
  for (Index k = 0; k < pool.rows(); ++k)
    for (Index i = 0; i < pool.cols(); ++i) pool(k, i) = uniform(rng, -1.0, 1.0);
  return pool;
}

namespace {

void check_instance2(const Instance2Spec& s) {
  if (s.n < 1) throw ConfigurationError("instance2: n must be >= 1");
  if (!(s.epsilon > 0 && s.epsilon < 1)) throw ConfigurationError("instance2: epsilon must lie in (0, 1)");
  if (s.alpha1 < 0 || s.lambda0 < 0) throw ConfigurationError("instance2: alpha1 and lambda0 must be >= 0");
}

SamplerFn pool_sampler(std::shared_ptr<const Matrix> pool) {
  return [pool](Rng& rng) -> RandomDraw {
    const auto k = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(pool->rows())));
    return pool->row(k).transpose();
  };
}

std::function<WeightedDraws()> pool_support(std::shared_ptr<const Matrix> pool) {
  return [pool]() {
    WeightedDraws out;
    const double w = 1.0 / static_cast<double>(pool->rows());
    for (Index k = 0; k < pool->rows(); ++k) out.emplace_back(w, pool->row(k).transpose());
    return out;
  };
}

nlohmann::json instance2_descriptor(const Instance2Spec& s, const char* family) {
  nlohmann::json d = {{"family", family},         {"n", s.n},
                      {"alpha0", s.alpha0},       {"alpha1", s.alpha1},
                      {"epsilon", s.epsilon},     {"lambda0", s.lambda0},
                      {"pool_size", s.pool_size}, {"seed", s.seed}};
  if (s.mu_f_override) d["mu_f"] = *s.mu_f_override;
  return d;
}

}  // namespace

ProblemSpec gen_instance2(const Instance2Spec& spec) {
  check_instance2(spec);
  if (spec.pool_size < 1000) throw ConfigurationError("instance2: pool_size must be >= 1000");
  const auto pool = std::make_shared<const Matrix>(scenario_pool(spec));
  const double a0 = spec.alpha0, a1 = spec.alpha1, eps = spec.epsilon, l0 = spec.lambda0;
  const Index n = spec.n;

  CvarPoolModel model;
  model.pool = *pool;
  model.alpha0 = a0;
  model.alpha1 = a1;
  model.epsilon = eps;
  model.lambda0 = l0;

  ProblemSpec p;
  p.family = "instance2";
  p.set = make_box_simplex(n);
  p.constants = instance2_constants(spec);
  p.norm = Norm::L2;
  p.oracle = [a0, a1, eps, l0, n](const Vector& v, const RandomDraw& xi) {
    const double x0 = v(0);
    const double s = xi.dot(v.tail(n));
    const bool active = s > x0;
    OracleSample o;
    o.value = a0 * s + a1 * (x0 + (active ? (s - x0) / eps : 0.0)) + l0 * v.squaredNorm();
    o.subgradient.resize(n + 1);
    o.subgradient(0) = a1 * (1.0 - (active ? 1.0 / eps : 0.0));
    o.subgradient.tail(n) = (a0 + (active ? a1 / eps : 0.0)) * xi;
    o.subgradient += 2.0 * l0 * v;
    return o;
  };
  p.sampler = pool_sampler(pool);
  const auto shared_model = std::make_shared<const CvarPoolModel>(model);
  p.exact_value = [shared_model](const Vector& v) { return shared_model->value(v); };
  p.exact_subgradient = [shared_model](const Vector& v) { return shared_model->subgradient(v); };
  p.support = pool_support(pool);
  p.reference = model;
  p.empirical_model = [a0, a1, eps, l0, n](const std::vector<RandomDraw>& sample) -> ReferenceModel {
    if (sample.empty()) throw ConfigurationError("empirical model needs a nonempty sample");
    CvarPoolModel m;
    m.pool.resize(static_cast<Index>(sample.size()), n);
    for (std::size_t t = 0; t < sample.size(); ++t) m.pool.row(static_cast<Index>(t)) = sample[t].transpose();
    m.alpha0 = a0;
    m.alpha1 = a1;
    m.epsilon = eps;
    m.lambda0 = l0;
    return m;
  };
  p.descriptor = instance2_descriptor(spec, "instance2").dump();
  return p;
}

ProblemSpec gen_linear_loss(const Instance2Spec& spec) {
  check_instance2(spec);
  const auto pool = std::make_shared<const Matrix>(scenario_pool(spec));
  const double rn = std::sqrt(static_cast<double>(spec.n));
  ProblemSpec p;
  p.family = "linear-loss";
  p.set = std::make_shared<FloorSimplex>(spec.n, 1.0, 0.0);
  p.norm = Norm::L2;
  p.constants.L = rn;
  p.constants.M1 = 2.0;
  p.constants.M2 = 2.0 * rn;
  p.constants.Mstar = rn;
  p.constants.D_X = p.set->max_distance_from(p.set->start_point(), Norm::L2);
  p.oracle = [](const Vector& x, const RandomDraw& xi) { return OracleSample{xi.dot(x), xi}; };
  p.sampler = pool_sampler(pool);
  const Vector mean = pool->colwise().mean().transpose();
  p.exact_value = [mean](const Vector& x) { return mean.dot(x); };
  p.exact_subgradient = [mean](const Vector&) { return mean; };
  p.support = pool_support(pool);
  QuadraticModel m;
  m.q = mean;
  m.Q = Matrix::Zero(spec.n, spec.n);
  p.reference = m;
  p.descriptor = instance2_descriptor(spec, "linear-loss").dump();
  return p;
}

double cvar_sorted_tail(const Vector& outcomes, double epsilon) {
  if (!(epsilon > 0 && epsilon <= 1)) throw ConfigurationError("cvar: epsilon must lie in (0, 1]");
  std::vector<double> z(outcomes.data(), outcomes.data() + outcomes.size());
  std::sort(z.begin(), z.end(), std::greater<double>());
  const double mass = epsilon * static_cast<double>(z.size());
  const auto whole = static_cast<std::size_t>(std::floor(mass + 1e-12));
  double tail = 0;
  for (std::size_t i = 0; i < whole && i < z.size(); ++i) tail += z[i];
  const double frac = mass - static_cast<double>(whole);
  if (whole < z.size() && frac > 1e-12) tail += frac * z[whole];
  return tail / mass;
}

double cvar_minimization_form(const Vector& outcomes, double epsilon) {
  if (!(epsilon > 0 && epsilon <= 1)) throw ConfigurationError("cvar: epsilon must lie in (0, 1]");
  const double P = static_cast<double>(outcomes.size());
  double best = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < outcomes.size(); ++j) {
    const double t = outcomes(j);
    const double v = t + (outcomes.array() - t).cwiseMax(0.0).sum() / (P * epsilon);
    best = std::min(best, v);
  }
  return best;
}

}  // namespace mirror_bounds
