#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

namespace mirror_bounds {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Realized draw of the random data; replayable.
using RandomDraw = Eigen::VectorXd;

using Rng = std::mt19937_64;

inline constexpr double kMembershipTol = 1e-9;

struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct ConfigurationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct InvalidMethod : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct UnsupportedCapability : std::logic_error {
  using std::logic_error::logic_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, double gap)
      : std::runtime_error(what + " (last gap " + std::to_string(gap) + ")"), last_gap(gap) {}
  double last_gap;
};
struct BudgetTooSmall : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct InfeasibleInstance : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct AssumptionViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Norm { L1, L2 };

// Dual of l1 is l_inf, l2 is self-dual.
inline double dual_norm(const Vector& v, Norm primal) {
  return primal == Norm::L1 ? v.lpNorm<Eigen::Infinity>() : v.norm();
}

inline double primal_norm(const Vector& v, Norm primal) {
  return primal == Norm::L1 ? v.lpNorm<1>() : v.norm();
}

std::string to_string(Norm n);
Norm norm_from_string(const std::string& s);

struct ConstantSheet {
  double L = 0;
  double M1 = 0;
  double M2 = 0;
  std::optional<double> Mstar;
  double D_X = 0;
  std::optional<double> rho;
  std::optional<double> mu_f;

  void validate() const;
};

struct OracleSample {
  double value = 0;
  Vector subgradient;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

// Platform-independent uniform draws; std distributions are implementation defined.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

double standard_normal(Rng& rng);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);
std::uint64_t hash_string(const std::string& s);

}  // namespace mirror_bounds
