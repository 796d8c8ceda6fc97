#pragma once

#include "mirror_bounds/types.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <numeric>
#include <vector>

namespace mirror_bounds {

// Euclidean projection of y onto {u : sum(u) = total, u >= 0}.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> project_scaled_simplex(
    const Eigen::MatrixBase<Derived>& y, typename Derived::Scalar total) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Index n = y.size();
  if (total <= Scalar(0)) return Vec::Zero(n);
  std::vector<Scalar> sorted(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = y(i);
  std::sort(sorted.begin(), sorted.end(), std::greater<Scalar>());
  Scalar cumulative(0);
  Scalar tau(0);
  for (Index k = 0; k < n; ++k) {
    cumulative += sorted[static_cast<std::size_t>(k)];
    const Scalar candidate = (cumulative - total) / Scalar(k + 1);
    if (k + 1 == n || sorted[static_cast<std::size_t>(k + 1)] <= candidate) {
      tau = candidate;
      break;
    }
  }
  return (y.array() - tau).cwiseMax(Scalar(0)).matrix();
}

class FeasibleSet {
 public:
  virtual ~FeasibleSet() = default;

  virtual Index dimension() const = 0;
  virtual std::string name() const = 0;
  virtual bool contains(const Vector& x, double tol = kMembershipTol) const = 0;
  virtual bool supports_projection() const { return true; }
  virtual Vector project(const Vector& y) const = 0;
  virtual Vector lmo(const Vector& c) const = 0;
  virtual Vector start_point() const = 0;
  // Minimizer of 0.5||x||^2 over the set.
  virtual Vector euclidean_center() const = 0;
  virtual double max_half_sq_norm() const = 0;
  virtual double max_distance_from(const Vector& x, Norm norm) const = 0;
  virtual double diameter(Norm norm) const = 0;
  virtual Vector sample(Rng& rng) const = 0;

  void check_dimension(const Vector& x, const char* what) const;
};

using FeasibleSetPtr = std::shared_ptr<const FeasibleSet>;

// {x : sum(x) = a, x >= b}
class FloorSimplex final : public FeasibleSet {
 public:
  FloorSimplex(Index n, double a = 1.0, double b = 0.0);

  Index dimension() const override { return n_; }
  std::string name() const override { return "floor-simplex"; }
  bool contains(const Vector& x, double tol = kMembershipTol) const override;
  Vector project(const Vector& y) const override;
  Vector lmo(const Vector& c) const override;
  Vector start_point() const override;
  Vector euclidean_center() const override { return start_point(); }
  double max_half_sq_norm() const override;
  double max_distance_from(const Vector& x, Norm norm) const override;
  double diameter(Norm norm) const override;
  Vector sample(Rng& rng) const override;

  double a() const { return a_; }
  double b() const { return b_; }
  // Mass above the floor, a - n b.
  double slack() const { return a_ - static_cast<double>(n_) * b_; }
  Vector vertex(Index i) const;

 private:
  Index n_;
  double a_;
  double b_;
};

// Box on the leading coordinates, any set on the rest.
class BoxProduct final : public FeasibleSet {
 public:
  BoxProduct(Vector lower, Vector upper, FeasibleSetPtr inner);

  Index dimension() const override { return k_ + inner_->dimension(); }
  std::string name() const override { return "box-x-" + inner_->name(); }
  bool contains(const Vector& x, double tol = kMembershipTol) const override;
  bool supports_projection() const override { return inner_->supports_projection(); }
  Vector project(const Vector& y) const override;
  Vector lmo(const Vector& c) const override;
  Vector start_point() const override;
  Vector euclidean_center() const override;
  double max_half_sq_norm() const override;
  double max_distance_from(const Vector& x, Norm norm) const override;
  double diameter(Norm norm) const override;
  Vector sample(Rng& rng) const override;

  Index box_dimension() const { return k_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  const FeasibleSetPtr& inner() const { return inner_; }

 private:
  Vector join(const Vector& head, const Vector& tail) const;

  Index k_;
  Vector lower_;
  Vector upper_;
  FeasibleSetPtr inner_;
};

// {x0 in [-radius, radius]} x {sum(x) = 1, x >= 0}
FeasibleSetPtr make_box_simplex(Index n, double radius = 1.0);

}  // namespace mirror_bounds
