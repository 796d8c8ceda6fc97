#include "mirror_bounds/solvers.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace mirror_bounds {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Rsa: return "rsa";
    case Algorithm::Smd: return "smd";
    case Algorithm::Msmd: return "msmd";
    case Algorithm::MsmdBudget: return "msmd-budget";
    case Algorithm::MsmdBall: return "msmd-ball";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "rsa") return Algorithm::Rsa;
  if (s == "smd") return Algorithm::Smd;
  if (s == "msmd") return Algorithm::Msmd;
  if (s == "msmd-budget") return Algorithm::MsmdBudget;
  if (s == "msmd-ball") return Algorithm::MsmdBall;
  throw ConfigurationError("unknown algorithm '" + s + "'");
}

std::string to_string(StepRule r) {
  switch (r) {
    case StepRule::Prescribed: return "prescribed";
    case StepRule::Theta: return "theta";
    case StepRule::Override: return "override";
    case StepRule::Schedule: return "schedule";
  }
  return "?";
}

void SolverConfig::validate() const {
  if (N < 2) throw ConfigurationError("solver config: N must be >= 2");
  if (step && !(*step > 0 && std::isfinite(*step))) throw ConfigurationError("solver config: step override must be positive");
  if (theta && !(*theta > 0 && std::isfinite(*theta))) throw ConfigurationError("solver config: theta must be positive");
  if (step && theta) throw ConfigurationError("solver config: step override and theta are exclusive");
  if (thin_stride < 0) throw ConfigurationError("solver config: negative thinning stride");
}

long MultistepSchedule::total_calls() const { return total_calls(steps()); }

long MultistepSchedule::total_calls(int k) const {
  long s = 0;
  for (int t = 0; t < k; ++t) s += N[static_cast<std::size_t>(t)] - 1;
  return s;
}

double prescribed_step(const ConstantSheet& c, double radius, double mu_omega, long N) {
  return radius * std::sqrt(mu_omega) / (std::sqrt(2.0 * (c.M2 * c.M2 + c.L * c.L)) * std::sqrt(static_cast<double>(N)));
}

double theta_step(const ConstantSheet& c, double radius, double mu_omega, long N, double theta) {
  if (!c.Mstar) throw ConfigurationError("theta step needs Mstar in the constant sheet");
  return theta * std::sqrt(mu_omega) * radius / (*c.Mstar * std::sqrt(static_cast<double>(N)));
}

ConstantSheet constants_from_start(const ProblemSpec& problem, const ProximalSetup& setup, const Vector& start) {
  ConstantSheet c = problem.constants;
  c.D_X = problem.set->max_distance_from(start, setup.norm());
  return c;
}

namespace {

struct LoopSpec {
  Vector start;
  long calls = 0;
  double step = 0;
  long thin = 0;
  int stage = 0;
  const IterationObserver* observer = nullptr;
  std::optional<Vector> ball_center;
  double ball_radius = 0;
};

RunRecord run_loop(const ProblemSpec& problem, const ProximalSetup& setup, const LoopSpec& spec, Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  const Index n = problem.dimension();
  RunRecord rec;
  rec.setup = setup.name();
  rec.N = spec.calls;
  rec.start = spec.start;
  rec.steps.reserve(static_cast<std::size_t>(spec.calls));
  rec.values.reserve(static_cast<std::size_t>(spec.calls));
  Vector x_weighted = Vector::Zero(n);
  Vector x_avg = spec.start;
  rec.sum_subgradient = Vector::Zero(n);
  double g_weighted = 0;

  Vector state = setup.to_state(spec.start);
  Vector x = spec.start;
  for (long t = 1; t <= spec.calls; ++t) {
    if (t > 1) x = setup.from_state(state);
    const RandomDraw draw = problem.sampler(rng);
    const OracleSample s = oracle_eval(problem, x, draw);
    const double gamma = spec.step;
    rec.steps.push_back(gamma);
    rec.values.push_back(s.value);
    x_weighted += gamma * x;
    g_weighted += gamma * s.value;
    rec.gamma_sum += gamma;
    rec.sum_subgradient += s.subgradient;
    rec.sum_offset += s.value - s.subgradient.dot(x);
    ++rec.oracle_calls;
    if (spec.ball_center) {
      const double d = (x - *spec.ball_center).norm();
      if (d > spec.ball_radius + 1e-7) {
        std::ostringstream os;
        os << "ball-restricted iterate left its ball: distance " << d << " > radius " << spec.ball_radius;
        throw NumericalError(os.str());
      }
    }
    if (spec.thin > 0 && ((t - 1) % spec.thin == 0 || t == spec.calls)) {
      rec.iterate_index.push_back(t);
      rec.iterates.push_back(x);
    }
    if (spec.observer && *spec.observer) {
      x_avg = x_weighted / rec.gamma_sum;
      (*spec.observer)(IterationView{t, spec.stage, x, s.value, s.subgradient, gamma, x_avg, g_weighted / rec.gamma_sum});
    }
    if (t < spec.calls) {
      const Vector zeta = gamma * s.subgradient;
      if (spec.ball_center)
        state = prox_ball_restricted(setup, *spec.ball_center, spec.ball_radius, x, zeta);
      else
        state = setup.prox_state(state, zeta);
    }
  }
  rec.x_avg = x_weighted / rec.gamma_sum;
  rec.g_avg = g_weighted / rec.gamma_sum;
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

Vector resolve_start(const ProblemSpec& problem, const std::optional<Vector>& start, const Vector& fallback) {
  if (!start) return fallback;
  problem.set->check_dimension(*start, "start point");
  if (!problem.set->contains(*start, kMembershipTol)) throw DomainError("start point outside the feasible set");
  return *start;
}

double run_radius(const ProblemSpec& problem, const ProximalSetup& setup, const Vector& start) {
  // Euclidean steps use the distance from the actual start.
  if (setup.name() == "euclidean") return problem.set->max_distance_from(start, Norm::L2);
  return setup.radius();
}

void require_step_constants(const ConstantSheet& c) {
  if (!(c.L > 0) || !(c.M2 > 0)) throw ConfigurationError("constant sheet lacks L or M2");
}

RunRecord single_run(const ProblemSpec& problem, const ProximalSetup& setup, const SolverConfig& config,
                     Algorithm tag) {
  config.validate();
  if (problem.set.get() != &setup.set() && problem.set->dimension() != setup.set().dimension())
    throw UnsupportedCapability("proximal setup is built on a different feasible set");
  require_step_constants(problem.constants);
  const Vector start = resolve_start(problem, config.start, setup.center());
  const double radius = run_radius(problem, setup, start);
  LoopSpec spec;
  spec.start = start;
  spec.calls = config.N;
  spec.thin = config.thin_stride;
  spec.observer = &config.observer;
  StepRule rule = StepRule::Prescribed;
  if (config.step) {
    spec.step = *config.step;
    rule = StepRule::Override;
  } else if (config.theta) {
    spec.step = theta_step(problem.constants, radius, setup.mu(), config.N, *config.theta);
    rule = StepRule::Theta;
  } else {
    spec.step = prescribed_step(problem.constants, radius, setup.mu(), config.N);
  }
  Rng rng(config.seed);
  RunRecord rec = run_loop(problem, setup, spec, rng);
  rec.algorithm = tag;
  rec.seed = config.seed;
  rec.step_rule = rule;
  rec.theta = config.theta;
  rec.start_overridden = config.start.has_value();
  rec.radius = radius;
  rec.mu_omega = setup.mu();
  return rec;
}

struct UniformConvexity {
  double rho;
  double mu_f;
  double M;
};

UniformConvexity require_uniform_convexity(const ConstantSheet& c, const ProximalSetup& setup) {
  if (!c.rho || !c.mu_f) throw ConfigurationError("multistep methods need rho and mu_f in the constant sheet");
  if (!setup.growth()) throw ConfigurationError("multistep methods need M(omega); setup " + setup.name() + " has none");
  return {*c.rho, *c.mu_f, *setup.growth()};
}

double snapped_ceil(double v) {
  const double r = std::round(v);
  if (std::abs(v - r) <= 1e-12 * std::max(1.0, std::abs(v))) return r;
  return std::ceil(v);
}

double schedule_gamma(const ConstantSheet& c, const ProximalSetup& setup, const UniformConvexity& u, int t, long Nt) {
  return c.D_X / (std::pow(2.0, (t - 1) / u.rho) * std::sqrt(static_cast<double>(Nt))) *
         std::sqrt(u.M * setup.mu() / (2.0 * (c.L * c.L + c.M2 * c.M2)));
}

long schedule_count(const ConstantSheet& c, const ProximalSetup& setup, const UniformConvexity& u, int t) {
  const double base = (c.L * c.L + c.M2 * c.M2) * u.M /
                      (u.mu_f * u.mu_f * setup.mu() * std::pow(c.D_X, 2.0 * (u.rho - 1.0)));
  const double v = std::pow(2.0, 3.0 + 2.0 * (t - 1) * (u.rho - 1.0) / u.rho) * base;
  if (!(v < 1e15)) throw ConfigurationError("multistep schedule overflows at step " + std::to_string(t));
  return 1 + static_cast<long>(snapped_ceil(v));
}

RunRecord run_multistep(const ProblemSpec& problem, const ProximalSetup& setup, const MultistepSchedule& schedule,
                        const Vector& start, std::uint64_t seed, const MultistepOptions& options, Algorithm tag,
                        bool ball) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(seed);
  RunRecord rec;
  rec.algorithm = tag;
  rec.setup = setup.name();
  rec.seed = seed;
  rec.step_rule = StepRule::Schedule;
  rec.start = start;
  rec.start_overridden = options.start.has_value();
  rec.radius = schedule.D_X;
  rec.mu_omega = setup.mu();
  rec.schedule = schedule;
  Vector y = start;
  for (int t = 1; t <= schedule.steps(); ++t) {
    const auto idx = static_cast<std::size_t>(t - 1);
    LoopSpec spec;
    spec.start = y;
    spec.calls = schedule.N[idx] - 1;
    spec.step = schedule.gamma[idx];
    spec.thin = options.thin_stride;
    spec.stage = t;
    spec.observer = &options.observer;
    if (ball) {
      spec.ball_center = y;
      spec.ball_radius = schedule.radius[idx];
    }
    if (spec.calls < 1) throw ConfigurationError("multistep step with no oracle calls");
    RunRecord stage = run_loop(problem, setup, spec, rng);
    stage.algorithm = Algorithm::Smd;
    stage.seed = seed;
    stage.step_rule = StepRule::Override;
    stage.radius = schedule.D_X;
    stage.mu_omega = setup.mu();
    rec.steps.insert(rec.steps.end(), stage.steps.begin(), stage.steps.end());
    rec.values.insert(rec.values.end(), stage.values.begin(), stage.values.end());
    for (std::size_t k = 0; k < stage.iterates.size(); ++k) {
      rec.iterate_index.push_back(rec.oracle_calls + stage.iterate_index[k]);
      rec.iterates.push_back(stage.iterates[k]);
    }
    rec.oracle_calls += stage.oracle_calls;
    y = stage.x_avg;
    rec.x_avg = stage.x_avg;
    rec.g_avg = stage.g_avg;
    rec.gamma_sum = stage.gamma_sum;
    rec.sum_subgradient = stage.sum_subgradient;
    rec.sum_offset = stage.sum_offset;
    rec.stages.push_back(std::move(stage));
  }
  rec.N = rec.oracle_calls;
  rec.steps_completed = schedule.steps();
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace

RunRecord rsa_run(const ProblemSpec& problem, const SolverConfig& config) {
  const EuclideanSetup setup(problem.set);
  return single_run(problem, setup, config, Algorithm::Rsa);
}

RunRecord smd_run(const ProblemSpec& problem, const ProximalSetup& setup, const SolverConfig& config) {
  return single_run(problem, setup, config, Algorithm::Smd);
}

MultistepSchedule msmd_schedule(const ConstantSheet& constants, const ProximalSetup& setup, int m) {
  if (m < 1) throw ConfigurationError("multistep schedule needs m >= 1");
  const UniformConvexity u = require_uniform_convexity(constants, setup);
  MultistepSchedule s;
  s.kind = "prescribed";
  s.D_X = constants.D_X;
  s.rho = u.rho;
  for (int t = 1; t <= m; ++t) {
    const long Nt = schedule_count(constants, setup, u, t);
    s.N.push_back(Nt);
    s.gamma.push_back(schedule_gamma(constants, setup, u, t, Nt));
    s.radius.push_back(constants.D_X / std::pow(2.0, (t - 1) / u.rho));
  }
  return s;
}

MultistepSchedule msmd_scaled_schedule(const ConstantSheet& constants, const ProximalSetup& setup, long budget,
                                       int m) {
  if (m < 1) throw ConfigurationError("multistep schedule needs m >= 1");
  if (budget < m) throw BudgetTooSmall("budget-scaled schedule needs at least one call per step");
  const UniformConvexity u = require_uniform_convexity(constants, setup);
  const double beta = 2.0 * (u.rho - 1.0) / u.rho;
  double total_weight = 0;
  for (int t = 1; t <= m; ++t) total_weight += std::pow(2.0, (t - 1) * beta);
  MultistepSchedule s;
  s.kind = "budget-scaled";
  s.D_X = constants.D_X;
  s.rho = u.rho;
  long used = 0;
  for (int t = 1; t <= m; ++t) {
    long calls;
    if (t < m) {
      calls = static_cast<long>(std::floor(static_cast<double>(budget) * std::pow(2.0, (t - 1) * beta) / total_weight));
      calls = std::max(calls, 1L);
    } else {
      calls = budget - used;
    }
    if (calls < 1) throw BudgetTooSmall("budget-scaled schedule left a step without calls");
    used += calls;
    const long Nt = calls + 1;
    s.N.push_back(Nt);
    s.gamma.push_back(schedule_gamma(constants, setup, u, t, Nt));
    s.radius.push_back(constants.D_X / std::pow(2.0, (t - 1) / u.rho));
  }
  return s;
}

BudgetAnalysis budget_analysis(const ConstantSheet& constants, const ProximalSetup& setup, long N_total) {
  const UniformConvexity u = require_uniform_convexity(constants, setup);
  BudgetAnalysis b{};
  b.A = 8.0 * (constants.L * constants.L + constants.M2 * constants.M2) * u.M /
        (u.mu_f * u.mu_f * setup.mu() * std::pow(constants.D_X, 2.0 * (u.rho - 1.0)));
  b.beta = 2.0 * (u.rho - 1.0) / u.rho;
  const double two_beta = std::pow(2.0, b.beta);
  b.required = 1.0 + (2.0 * (two_beta + 1.0) / (b.beta * std::log(2.0))) *
                         std::log(1.0 + (two_beta - 1.0) * static_cast<double>(N_total) / b.A);
  b.holds = static_cast<double>(N_total) > b.required;
  return b;
}

BallConstants ball_constants(const ConstantSheet& c, const ProximalSetup& setup) {
  const UniformConvexity u = require_uniform_convexity(c, setup);
  const double s = std::sqrt(u.M / (2.0 * setup.mu() * (c.L * c.L + c.M2 * c.M2)));
  const double denom = u.mu_f * std::pow(c.D_X, u.rho - 1.0);
  return {s * (2.0 * c.L * c.L + c.M2 * c.M2) / denom, (c.M2 * c.M2 * s + 2.0 * c.M2) / denom};
}

RunRecord msmd_run(const ProblemSpec& problem, const ProximalSetup& setup, int m, std::uint64_t seed,
                   const MultistepOptions& options) {
  const Vector start = resolve_start(problem, options.start, setup.center());
  const ConstantSheet c = constants_from_start(problem, setup, start);
  const MultistepSchedule schedule = options.schedule ? *options.schedule : msmd_schedule(c, setup, m);
  return run_multistep(problem, setup, schedule, start, seed, options, Algorithm::Msmd, false);
}

RunRecord msmd_budget_run(const ProblemSpec& problem, const ProximalSetup& setup, long N_total, std::uint64_t seed,
                          const MultistepOptions& options) {
  const Vector start = resolve_start(problem, options.start, setup.center());
  const ConstantSheet c = constants_from_start(problem, setup, start);
  const UniformConvexity u = require_uniform_convexity(c, setup);
  const BudgetAnalysis analysis = budget_analysis(c, setup, N_total);

  // While Nb_Call <= N: run step, advance; the final increment is undone.
  MultistepSchedule schedule;
  schedule.kind = "prescribed";
  schedule.D_X = c.D_X;
  schedule.rho = u.rho;
  long calls = 0;
  for (int t = 1;; ++t) {
    const long Nt = schedule_count(c, setup, u, t);
    if (calls + (Nt - 1) > N_total) break;
    calls += Nt - 1;
    schedule.N.push_back(Nt);
    schedule.gamma.push_back(schedule_gamma(c, setup, u, t, Nt));
    schedule.radius.push_back(c.D_X / std::pow(2.0, (t - 1) / u.rho));
  }
  if (schedule.steps() == 0) {
    std::ostringstream os;
    os << "budget " << N_total << " is below the first step's " << schedule_count(c, setup, u, 1) - 1 << " calls";
    throw BudgetTooSmall(os.str());
  }
  RunRecord rec = run_multistep(problem, setup, schedule, start, seed, options, Algorithm::MsmdBudget, false);
  rec.A = analysis.A;
  rec.beta = analysis.beta;
  rec.budget_condition_holds = analysis.holds;
  if (!analysis.holds) {
    std::ostringstream os;
    os << "budget " << N_total << " does not exceed the large-budget threshold " << analysis.required;
    rec.warnings.push_back(os.str());
  }
  return rec;
}

RunRecord msmd_ball_run(const ProblemSpec& problem, const ProximalSetup& setup, int m, std::uint64_t seed,
                        double theta, const MultistepOptions& options) {
  if (setup.name() != "euclidean") throw UnsupportedCapability("ball-restricted multistep needs the euclidean setup");
  if (!(theta >= 0)) throw ConfigurationError("ball-restricted multistep needs theta >= 0");
  const Vector start = resolve_start(problem, options.start, setup.center());
  const ConstantSheet c = constants_from_start(problem, setup, start);
  MultistepSchedule schedule;
  if (options.schedule) {
    schedule = *options.schedule;
  } else {
    const UniformConvexity u = require_uniform_convexity(c, setup);
    const BallConstants k = ball_constants(c, setup);
    schedule = msmd_schedule(c, setup, m);
    schedule.kind = "ball";
    for (int t = 1; t <= m; ++t) {
      const auto idx = static_cast<std::size_t>(t - 1);
      const double need = std::pow(2.0, 2.0 * t - 2.0 * (t - 1) / u.rho) * (k.K1 + theta * k.K2) * (k.K1 + theta * k.K2);
      if (!(need < 1e15)) throw ConfigurationError("ball-restricted schedule overflows");
      schedule.N[idx] = std::max(schedule.N[idx], static_cast<long>(snapped_ceil(need)));
      schedule.gamma[idx] = schedule_gamma(c, setup, u, t, schedule.N[idx]);
    }
  }
  return run_multistep(problem, setup, schedule, start, seed, options, Algorithm::MsmdBall, true);
}

}  // namespace mirror_bounds
