#pragma once

#include "mirror_bounds/problem.hpp"
#include "mirror_bounds/prox.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mirror_bounds {

enum class Algorithm { Rsa, Smd, Msmd, MsmdBudget, MsmdBall };
enum class StepRule { Prescribed, Theta, Override, Schedule };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);
std::string to_string(StepRule r);

struct IterationView {
  long t;  // 1-based within the current stage
  int stage;
  const Vector& x;
  double value;
  const Vector& subgradient;
  double step;
  // Running weighted averages including iteration t.
  const Vector& x_avg;
  double g_avg;
};

using IterationObserver = std::function<void(const IterationView&)>;

struct SolverConfig {
  Algorithm algorithm = Algorithm::Smd;
  long N = 0;
  std::uint64_t seed = 0;
  std::optional<double> step;
  std::optional<double> theta;
  std::optional<Vector> start;
  long thin_stride = 0;
  IterationObserver observer;

  void validate() const;
};

struct MultistepSchedule {
  std::string kind;  // prescribed | budget-scaled | ball
  std::vector<long> N;
  std::vector<double> gamma;
  std::vector<double> radius;
  double D_X = 0;
  double rho = 2;

  int steps() const { return static_cast<int>(N.size()); }
  long total_calls() const;
  long total_calls(int steps) const;
};

struct RunRecord {
  Algorithm algorithm = Algorithm::Smd;
  std::string setup;
  std::uint64_t seed = 0;
  long N = 0;
  StepRule step_rule = StepRule::Prescribed;
  std::optional<double> theta;
  bool start_overridden = false;
  Vector start;
  // Distance-like constant used by the step formula and mu(omega) of the setup.
  double radius = 0;
  double mu_omega = 1;

  std::vector<double> steps;
  std::vector<double> values;
  std::vector<long> iterate_index;
  std::vector<Vector> iterates;

  Vector x_avg;
  double g_avg = 0;
  double gamma_sum = 0;
  // Streaming aggregates of the affine model sum_t [g_t + G_t'(x - x_t)].
  Vector sum_subgradient;
  double sum_offset = 0;

  long oracle_calls = 0;
  double wall_seconds = 0;

  std::vector<RunRecord> stages;
  std::optional<MultistepSchedule> schedule;
  int steps_completed = 0;
  std::optional<double> A;
  std::optional<double> beta;
  std::optional<bool> budget_condition_holds;
  std::vector<std::string> warnings;
};

double prescribed_step(const ConstantSheet& c, double radius, double mu_omega, long N);
double theta_step(const ConstantSheet& c, double radius, double mu_omega, long N, double theta);

RunRecord rsa_run(const ProblemSpec& problem, const SolverConfig& config);
RunRecord smd_run(const ProblemSpec& problem, const ProximalSetup& setup, const SolverConfig& config);

// D_X is taken from constants; callers starting elsewhere pass the recomputed value.
MultistepSchedule msmd_schedule(const ConstantSheet& constants, const ProximalSetup& setup, int m);
// Geometric per-step budgets summing to `budget` oracle calls; steps from the same formula.
MultistepSchedule msmd_scaled_schedule(const ConstantSheet& constants, const ProximalSetup& setup, long budget,
                                       int m);

struct MultistepOptions {
  std::optional<Vector> start;
  std::optional<MultistepSchedule> schedule;
  long thin_stride = 0;
  IterationObserver observer;
};

RunRecord msmd_run(const ProblemSpec& problem, const ProximalSetup& setup, int m, std::uint64_t seed,
                   const MultistepOptions& options = {});
RunRecord msmd_budget_run(const ProblemSpec& problem, const ProximalSetup& setup, long N_total, std::uint64_t seed,
                          const MultistepOptions& options = {});
RunRecord msmd_ball_run(const ProblemSpec& problem, const ProximalSetup& setup, int m, std::uint64_t seed,
                        double theta, const MultistepOptions& options = {});

struct BudgetAnalysis {
  double A;
  double beta;
  double required;  // right-hand side of the large-budget condition
  bool holds;
};
BudgetAnalysis budget_analysis(const ConstantSheet& constants, const ProximalSetup& setup, long N_total);

// Constants of the ball-restricted variant.
struct BallConstants {
  double K1;
  double K2;
};
BallConstants ball_constants(const ConstantSheet& constants, const ProximalSetup& setup);

// ConstantSheet with D_X measured from `start` in the setup norm.
ConstantSheet constants_from_start(const ProblemSpec& problem, const ProximalSetup& setup, const Vector& start);

}  // namespace mirror_bounds
