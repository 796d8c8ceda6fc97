#pragma once

#include "mirror_bounds/feasible_set.hpp"

#include <memory>
#include <optional>
#include <string>

namespace mirror_bounds {

class ProximalSetup {
 public:
  virtual ~ProximalSetup() = default;

  virtual std::string name() const = 0;
  virtual Norm norm() const = 0;
  double mu() const { return mu_; }
  std::optional<double> growth() const { return growth_; }
  const Vector& center() const { return center_; }
  double radius() const { return radius_; }
  const FeasibleSet& set() const { return *set_; }
  const FeasibleSetPtr& set_ptr() const { return set_; }

  virtual double omega(const Vector& x) const = 0;
  virtual Vector omega_grad(const Vector& x) const = 0;
  // V_x(y) = omega(y) - omega(x) - omega'(x)'(y - x)
  virtual double bregman(const Vector& x, const Vector& y) const;
  // argmin_y { zeta'y + V_x(y) : y in X }
  virtual Vector prox(const Vector& x, const Vector& zeta) const = 0;

  // Solvers carry iterates in a setup-specific representation.
  virtual Vector to_state(const Vector& x) const { return x; }
  virtual Vector from_state(const Vector& s) const { return s; }
  virtual Vector prox_state(const Vector& s, const Vector& zeta) const { return prox(s, zeta); }

 protected:
  explicit ProximalSetup(FeasibleSetPtr set) : set_(std::move(set)) {}

  FeasibleSetPtr set_;
  double mu_ = 1;
  std::optional<double> growth_;
  Vector center_;
  double radius_ = 0;
};

using ProximalSetupPtr = std::shared_ptr<const ProximalSetup>;

class EuclideanSetup final : public ProximalSetup {
 public:
  explicit EuclideanSetup(FeasibleSetPtr set);
  std::string name() const override { return "euclidean"; }
  Norm norm() const override { return Norm::L2; }
  double omega(const Vector& x) const override { return 0.5 * x.squaredNorm(); }
  Vector omega_grad(const Vector& x) const override { return x; }
  double bregman(const Vector& x, const Vector& y) const override { return 0.5 * (y - x).squaredNorm(); }
  Vector prox(const Vector& x, const Vector& zeta) const override;
};

// Entropy on the probability simplex; iterates live in log space.
class EntropySetup final : public ProximalSetup {
 public:
  explicit EntropySetup(FeasibleSetPtr set);
  std::string name() const override { return "entropy"; }
  Norm norm() const override { return Norm::L1; }
  double omega(const Vector& x) const override;
  Vector omega_grad(const Vector& x) const override;
  double bregman(const Vector& x, const Vector& y) const override;
  Vector prox(const Vector& x, const Vector& zeta) const override;
  Vector to_state(const Vector& x) const override;
  Vector from_state(const Vector& s) const override;
  Vector prox_state(const Vector& s, const Vector& zeta) const override;
};

// omega(x) = sum |x_i|^p / (p gamma) on a floor simplex.
class PNormSetup final : public ProximalSetup {
 public:
  explicit PNormSetup(FeasibleSetPtr set);
  std::string name() const override { return "pnorm"; }
  Norm norm() const override { return Norm::L1; }
  double omega(const Vector& x) const override;
  Vector omega_grad(const Vector& x) const override;
  Vector prox(const Vector& x, const Vector& zeta) const override;

  double p() const { return p_; }
  double gamma() const { return gamma_; }
  // Multiplier nu of the last prox call's sum constraint, for diagnostics.
  struct ProxDetail {
    Vector point;
    double nu;
    double sum_residual;
  };
  ProxDetail prox_detail(const Vector& x, const Vector& zeta) const;

 private:
  const FloorSimplex* simplex_;
  double p_;
  double gamma_;
};

// Numerically stable entropy prox in log space: z+ = w - logsumexp(w), w = z - zeta - max(z - zeta).
Vector prox_entropy(const Vector& log_x, const Vector& zeta);

Vector prox_euclidean(const Vector& x, const Vector& zeta, const FeasibleSet& set);

// Euclidean prox restricted to X intersected with the l2 ball B(center, radius), by Dykstra's method.
Vector prox_ball_restricted(const ProximalSetup& setup, const Vector& center, double radius, const Vector& x,
                            const Vector& zeta);

struct SetupConstants {
  Vector center;
  double radius;
  double mu;
  std::optional<double> growth;
};

ProximalSetupPtr make_setup(const std::string& name, FeasibleSetPtr set);
SetupConstants setup_constants(const std::string& name, FeasibleSetPtr set);

}  // namespace mirror_bounds
