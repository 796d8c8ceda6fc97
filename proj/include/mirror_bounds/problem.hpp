#pragma once

#include "mirror_bounds/feasible_set.hpp"

#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mirror_bounds {

// f(x) = constant + q'x + 0.5 x'Qx
struct QuadraticModel {
  Vector q;
  Matrix Q;
  double constant = 0;

  double value(const Vector& x) const { return constant + q.dot(x) + 0.5 * x.dot(Q * x); }
  Vector gradient(const Vector& x) const { return q + Q * x; }
};

// Variables (x0, x). With scenarios s_k (rows of pool) and z_k = s_k'x:
// f = alpha0 mean(z) + alpha1 (x0 + mean([z - x0]+) / epsilon) + lambda0 (x0^2 + ||x||^2)
struct CvarPoolModel {
  Matrix pool;
  double alpha0 = 0;
  double alpha1 = 1;
  double epsilon = 0.5;
  double lambda0 = 0;

  Index n() const { return pool.cols(); }
  double value(const Vector& v) const;
  // Full-pool subgradient with the zero-slope choice at kinks.
  Vector subgradient(const Vector& v) const;
};

using ReferenceModel = std::variant<std::monostate, QuadraticModel, CvarPoolModel>;

using OracleFn = std::function<OracleSample(const Vector&, const RandomDraw&)>;
using SamplerFn = std::function<RandomDraw(Rng&)>;
using WeightedDraws = std::vector<std::pair<double, RandomDraw>>;

struct ProblemSpec {
  std::string family;
  FeasibleSetPtr set;
  ConstantSheet constants;
  Norm norm = Norm::L2;
  OracleFn oracle;
  SamplerFn sampler;
  std::function<double(const Vector&)> exact_value;
  std::function<Vector(const Vector&)> exact_subgradient;
  // Finite outcome space with probabilities, when small enough to enumerate.
  std::function<WeightedDraws()> support;
  ReferenceModel reference;
  std::function<ReferenceModel(const std::vector<RandomDraw>&)> empirical_model;
  // JSON text of the generating parameters.
  std::string descriptor;

  Index dimension() const { return set->dimension(); }
};

OracleSample oracle_eval(const ProblemSpec& problem, const Vector& x, const RandomDraw& draw);

Vector lmo(const FeasibleSet& set, const Vector& c);

// The draws a solver run with this seed consumes, in order.
std::vector<RandomDraw> draw_sample(const ProblemSpec& problem, long count, std::uint64_t seed);

}  // namespace mirror_bounds
