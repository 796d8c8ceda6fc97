#include "mirror_bounds/prox.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace mirror_bounds {

namespace {

const FloorSimplex& require_floor_simplex(const FeasibleSetPtr& set, const char* setup) {
  const auto* s = dynamic_cast<const FloorSimplex*>(set.get());
  if (!s) throw UnsupportedCapability(std::string(setup) + " setup needs a floor simplex, got " + set->name());
  return *s;
}

double log_sum_exp(const Vector& w) {
  const double m = w.maxCoeff();
  return m + std::log((w.array() - m).exp().sum());
}

}  // namespace

double ProximalSetup::bregman(const Vector& x, const Vector& y) const {
  return omega(y) - omega(x) - omega_grad(x).dot(y - x);
}

Vector prox_euclidean(const Vector& x, const Vector& zeta, const FeasibleSet& set) {
  set.check_dimension(x, "prox_euclidean");
  set.check_dimension(zeta, "prox_euclidean");
  return set.project(x - zeta);
}

EuclideanSetup::EuclideanSetup(FeasibleSetPtr set) : ProximalSetup(std::move(set)) {
  if (!set_->supports_projection()) throw UnsupportedCapability("euclidean setup needs a projection");
  center_ = set_->euclidean_center();
  radius_ = std::sqrt(std::max(0.0, 2.0 * (set_->max_half_sq_norm() - 0.5 * center_.squaredNorm())));
  mu_ = 1.0;
  growth_ = 1.0;
}

Vector EuclideanSetup::prox(const Vector& x, const Vector& zeta) const { return prox_euclidean(x, zeta, *set_); }

Vector prox_entropy(const Vector& log_x, const Vector& zeta) {
  if (log_x.size() != zeta.size()) throw ContractViolation("prox_entropy: dimension mismatch");
  Vector w = log_x - zeta;
  w.array() -= w.maxCoeff();
  return w.array() - log_sum_exp(w);
}

EntropySetup::EntropySetup(FeasibleSetPtr set) : ProximalSetup(std::move(set)) {
  const auto& s = require_floor_simplex(set_, "entropy");
  if (s.b() != 0.0 || s.a() != 1.0) throw UnsupportedCapability("entropy setup needs the probability simplex (a=1, b=0)");
  const double n = static_cast<double>(s.dimension());
  center_ = Vector::Constant(s.dimension(), 1.0 / n);
  radius_ = std::sqrt(2.0 * std::log(n));
  mu_ = 1.0;
}

double EntropySetup::omega(const Vector& x) const {
  double s = 0;
  for (Index i = 0; i < x.size(); ++i)
    if (x(i) > 0) s += x(i) * std::log(x(i));
  return s;
}

Vector EntropySetup::omega_grad(const Vector& x) const { return x.array().log() + 1.0; }

double EntropySetup::bregman(const Vector& x, const Vector& y) const {
  double s = 0;
  for (Index i = 0; i < x.size(); ++i) {
    if (y(i) > 0) s += y(i) * std::log(y(i) / x(i));
    s += x(i) - y(i);
  }
  return s;
}

Vector EntropySetup::to_state(const Vector& x) const { return x.array().log(); }

Vector EntropySetup::from_state(const Vector& s) const { return s.array().exp(); }

Vector EntropySetup::prox_state(const Vector& s, const Vector& zeta) const { return prox_entropy(s, zeta); }

Vector EntropySetup::prox(const Vector& x, const Vector& zeta) const {
  return from_state(prox_entropy(to_state(x), zeta));
}

PNormSetup::PNormSetup(FeasibleSetPtr set) : ProximalSetup(std::move(set)) {
  simplex_ = &require_floor_simplex(set_, "pnorm");
  const Index n = simplex_->dimension();
  if (n < 3) throw UnsupportedCapability("pnorm setup needs n >= 3");
  if (simplex_->b() < 0) throw UnsupportedCapability("pnorm setup needs a nonnegative floor");
  const double ln_n = std::log(static_cast<double>(n));
  const double a = simplex_->a();
  const double b = simplex_->b();
  p_ = 1.0 + 1.0 / ln_n;
  gamma_ = 1.0 / (std::exp(1.0) * ln_n);
  center_ = simplex_->start_point();
  mu_ = std::exp(1.0) / (static_cast<double>(n) * std::pow(a, 2.0 - p_));
  radius_ = std::sqrt((2.0 * std::pow(a, p_) / (p_ * gamma_)) * (1.0 - std::pow(static_cast<double>(n), -1.0 / ln_n)));
  if (b > 0) growth_ = std::exp(1.0) / std::pow(b, 1.0 - 1.0 / ln_n);
}

double PNormSetup::omega(const Vector& x) const { return x.array().abs().pow(p_).sum() / (p_ * gamma_); }

Vector PNormSetup::omega_grad(const Vector& x) const {
  return (x.array().sign() * x.array().abs().pow(p_ - 1.0)) / gamma_;
}

PNormSetup::ProxDetail PNormSetup::prox_detail(const Vector& x, const Vector& zeta) const {
  set_->check_dimension(x, "prox_pnorm");
  set_->check_dimension(zeta, "prox_pnorm");
  const double a = simplex_->a();
  const double b = simplex_->b();
  const double inv = 1.0 / (p_ - 1.0);
  const Vector z = zeta - omega_grad(x);
  auto point = [&](double nu) {
    Vector y(z.size());
    for (Index i = 0; i < z.size(); ++i) {
      const double t = gamma_ * (nu - z(i));
      y(i) = t > 0 ? std::max(std::pow(t, inv), b) : b;
    }
    return y;
  };
  double lo = z.minCoeff();
  double hi = z.maxCoeff() + std::pow(a, p_ - 1.0) / gamma_;
  double f_lo = point(lo).sum() - a;
  double f_hi = point(hi).sum() - a;
  if (f_lo > 1e-12 || f_hi < -1e-12) {
    std::ostringstream os;
    os << "prox_pnorm: bisection bracket failure (f(lo)=" << f_lo << ", f(hi)=" << f_hi << ")";
    throw NumericalError(os.str());
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = point(mid).sum() - a;
    if (f_mid < 0) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  const double nu = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
  Vector y = point(nu);
  // Spread the leftover rounding over the free coordinates.
  double residual = y.sum() - a;
  Index free = 0;
  for (Index i = 0; i < y.size(); ++i)
    if (y(i) > b) ++free;
  if (free > 0) {
    const double shift = residual / static_cast<double>(free);
    for (Index i = 0; i < y.size(); ++i)
      if (y(i) > b) y(i) = std::max(b, y(i) - shift);
  }
  residual = y.sum() - a;
  return {y, nu, residual};
}

Vector PNormSetup::prox(const Vector& x, const Vector& zeta) const { return prox_detail(x, zeta).point; }

Vector prox_ball_restricted(const ProximalSetup& setup, const Vector& center, double radius, const Vector& x,
                            const Vector& zeta) {
  if (setup.name() != "euclidean") throw UnsupportedCapability("ball-restricted prox needs the euclidean setup");
  if (!(radius > 0)) throw ContractViolation("ball-restricted prox needs a positive radius");
  const FeasibleSet& set = setup.set();
  if (!set.contains(center, kMembershipTol)) throw DomainError("ball-restricted prox: center outside X");
  if (radius >= set.max_distance_from(center, Norm::L2)) return prox_euclidean(x, zeta, set);

  auto ball = [&](const Vector& v) -> Vector {
    const Vector d = v - center;
    const double r = d.norm();
    return r <= radius ? v : Vector(center + d * (radius / r));
  };
  const Vector target = x - zeta;
  Vector u = target;
  Vector p = Vector::Zero(u.size());
  Vector q = Vector::Zero(u.size());
  for (int sweep = 0; sweep < 10000; ++sweep) {
    const Vector a = ball(u + p);
    p = u + p - a;
    const Vector b = set.project(a + q);
    q = a + q - b;
    const double move = (b - u).norm();
    u = b;
    if (move < 1e-10) break;
  }
  // u is in X; pull it along the segment to the center, which stays in X.
  const Vector d = u - center;
  const double r = d.norm();
  if (r > radius) u = center + d * (radius / r);
  return u;
}

ProximalSetupPtr make_setup(const std::string& name, FeasibleSetPtr set) {
  if (name == "euclidean") return std::make_shared<EuclideanSetup>(std::move(set));
  if (name == "entropy") return std::make_shared<EntropySetup>(std::move(set));
  if (name == "pnorm") return std::make_shared<PNormSetup>(std::move(set));
  throw ConfigurationError("unknown proximal setup '" + name + "'");
}

SetupConstants setup_constants(const std::string& name, FeasibleSetPtr set) {
  const auto setup = make_setup(name, std::move(set));
  return {setup->center(), setup->radius(), setup->mu(), setup->growth()};
}

}  // namespace mirror_bounds
