#include "mirror_bounds/feasible_set.hpp"

#include <cmath>
#include <sstream>

namespace mirror_bounds {

std::string to_string(Norm n) { return n == Norm::L1 ? "l1" : "l2"; }

Norm norm_from_string(const std::string& s) {
  if (s == "l1") return Norm::L1;
  if (s == "l2") return Norm::L2;
  throw ConfigurationError("unknown norm '" + s + "' (expected l1 or l2)");
}

void ConstantSheet::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0) || !std::isfinite(v))
      throw ConfigurationError(std::string("constant sheet: ") + what + " must be positive and finite");
  };
  positive(L, "L");
  positive(M1, "M1");
  positive(M2, "M2");
  positive(D_X, "D_X");
  if (Mstar) positive(*Mstar, "Mstar");
  if (rho) {
    if (!(*rho >= 2)) throw ConfigurationError("constant sheet: rho must be >= 2");
    if (!mu_f || !(*mu_f > 0)) throw ConfigurationError("constant sheet: rho requires mu_f > 0");
  }
}

double standard_normal(Rng& rng) {
  // Box-Muller on the portable uniform.
  double u1 = uniform01(rng);
  while (u1 <= 0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return splitmix64(seed ^ (splitmix64(value) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void FeasibleSet::check_dimension(const Vector& x, const char* what) const {
  if (x.size() != dimension()) {
    std::ostringstream os;
    os << what << ": dimension " << x.size() << " does not match set dimension " << dimension();
    throw ContractViolation(os.str());
  }
}

FloorSimplex::FloorSimplex(Index n, double a, double b) : n_(n), a_(a), b_(b) {
  if (n < 1) throw ConfigurationError("floor simplex needs n >= 1");
  if (!(b < a / static_cast<double>(n)) && !(n == 1 && b <= a))
    throw InfeasibleInstance("floor simplex requires b < a/n");
}

bool FloorSimplex::contains(const Vector& x, double tol) const {
  if (x.size() != n_ || !x.allFinite()) return false;
  if (std::abs(x.sum() - a_) > tol * std::max(1.0, std::abs(a_))) return false;
  return x.minCoeff() >= b_ - tol;
}

Vector FloorSimplex::project(const Vector& y) const {
  check_dimension(y, "project");
  Vector shifted = y.array() - b_;
  Vector u = project_scaled_simplex(shifted, slack());
  return u.array() + b_;
}

Vector FloorSimplex::vertex(Index i) const {
  Vector v = Vector::Constant(n_, b_);
  v(i) += slack();
  return v;
}

Vector FloorSimplex::lmo(const Vector& c) const {
  check_dimension(c, "lmo");
  Index best = 0;
  c.minCoeff(&best);
  return vertex(best);
}

Vector FloorSimplex::start_point() const { return Vector::Constant(n_, a_ / static_cast<double>(n_)); }

double FloorSimplex::max_half_sq_norm() const {
  const double nb = static_cast<double>(n_ - 1);
  const double top = b_ + slack();
  return 0.5 * (nb * b_ * b_ + top * top);
}

double FloorSimplex::max_distance_from(const Vector& x, Norm norm) const {
  check_dimension(x, "max_distance_from");
  const double s = slack();
  if (norm == Norm::L2) {
    const double base = (x.array() - b_).square().sum();
    double best = 0;
    for (Index i = 0; i < n_; ++i) {
      const double d = base - (b_ - x(i)) * (b_ - x(i)) + (b_ + s - x(i)) * (b_ + s - x(i));
      best = std::max(best, d);
    }
    return std::sqrt(std::max(best, 0.0));
  }
  const double base = (x.array() - b_).abs().sum();
  double best = 0;
  for (Index i = 0; i < n_; ++i)
    best = std::max(best, base - std::abs(b_ - x(i)) + std::abs(b_ + s - x(i)));
  return best;
}

double FloorSimplex::diameter(Norm norm) const {
  if (n_ == 1) return 0.0;
  return norm == Norm::L2 ? std::sqrt(2.0) * slack() : 2.0 * slack();
}

Vector FloorSimplex::sample(Rng& rng) const {
  Vector e(n_);
  for (Index i = 0; i < n_; ++i) {
    double u = uniform01(rng);
    while (u <= 0) u = uniform01(rng);
    e(i) = -std::log(u);
  }
  return (e / e.sum() * slack()).array() + b_;
}

BoxProduct::BoxProduct(Vector lower, Vector upper, FeasibleSetPtr inner)
    : k_(lower.size()), lower_(std::move(lower)), upper_(std::move(upper)), inner_(std::move(inner)) {
  if (upper_.size() != k_) throw ContractViolation("box bounds differ in size");
  if (!inner_) throw ContractViolation("box product needs an inner set");
  if ((upper_ - lower_).minCoeff() < 0) throw InfeasibleInstance("box with lower > upper");
}

Vector BoxProduct::join(const Vector& head, const Vector& tail) const {
  Vector out(k_ + tail.size());
  out << head, tail;
  return out;
}

bool BoxProduct::contains(const Vector& x, double tol) const {
  if (x.size() != dimension() || !x.allFinite()) return false;
  for (Index i = 0; i < k_; ++i)
    if (x(i) < lower_(i) - tol || x(i) > upper_(i) + tol) return false;
  return inner_->contains(x.tail(inner_->dimension()), tol);
}

Vector BoxProduct::project(const Vector& y) const {
  check_dimension(y, "project");
  Vector head = y.head(k_).cwiseMax(lower_).cwiseMin(upper_);
  return join(head, inner_->project(y.tail(inner_->dimension())));
}

Vector BoxProduct::lmo(const Vector& c) const {
  check_dimension(c, "lmo");
  Vector head(k_);
  for (Index i = 0; i < k_; ++i) head(i) = c(i) < 0 ? upper_(i) : lower_(i);
  return join(head, inner_->lmo(c.tail(inner_->dimension())));
}

Vector BoxProduct::start_point() const { return join(0.5 * (lower_ + upper_), inner_->start_point()); }

Vector BoxProduct::euclidean_center() const {
  Vector head = Vector::Zero(k_).cwiseMax(lower_).cwiseMin(upper_);
  return join(head, inner_->euclidean_center());
}

double BoxProduct::max_half_sq_norm() const {
  double box = 0;
  for (Index i = 0; i < k_; ++i) box += std::max(lower_(i) * lower_(i), upper_(i) * upper_(i));
  return 0.5 * box + inner_->max_half_sq_norm();
}

double BoxProduct::max_distance_from(const Vector& x, Norm norm) const {
  check_dimension(x, "max_distance_from");
  const double inner = inner_->max_distance_from(x.tail(inner_->dimension()), norm);
  double box = 0;
  for (Index i = 0; i < k_; ++i) {
    const double d = std::max(std::abs(x(i) - lower_(i)), std::abs(upper_(i) - x(i)));
    box += norm == Norm::L2 ? d * d : d;
  }
  return norm == Norm::L2 ? std::sqrt(box + inner * inner) : box + inner;
}

double BoxProduct::diameter(Norm norm) const {
  const double inner = inner_->diameter(norm);
  if (norm == Norm::L2) return std::sqrt((upper_ - lower_).squaredNorm() + inner * inner);
  return (upper_ - lower_).sum() + inner;
}

Vector BoxProduct::sample(Rng& rng) const {
  Vector head(k_);
  for (Index i = 0; i < k_; ++i) head(i) = uniform(rng, lower_(i), upper_(i));
  return join(head, inner_->sample(rng));
}

FeasibleSetPtr make_box_simplex(Index n, double radius) {
  return std::make_shared<BoxProduct>(Vector::Constant(1, -radius), Vector::Constant(1, radius),
                                      std::make_shared<FloorSimplex>(n, 1.0, 0.0));
}

}  // namespace mirror_bounds
