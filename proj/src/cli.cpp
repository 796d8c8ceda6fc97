#include "mirror_bounds/cli.hpp"

#include "mirror_bounds/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace mirror_bounds {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

struct ProblemFlags {
  std::string file;
  std::string family = "instance1";
  Index n = 10;
  std::uint64_t seed = 0;
  std::optional<double> alpha0, alpha1, lambda0, epsilon, mu_f, a, b;
  std::optional<std::string> norm;
  std::optional<long> pool_size;

  void attach(CLI::App* app) {
    app->add_option("--problem", file, "problem descriptor JSON file");
    app->add_option("--family", family, "instance1 | instance2 | linear-loss");
    app->add_option("--n", n, "dimension");
    app->add_option("--instance-seed", seed, "instance seed");
    app->add_option("--alpha0", alpha0);
    app->add_option("--alpha1", alpha1);
    app->add_option("--lambda0", lambda0);
    app->add_option("--epsilon", epsilon);
    app->add_option("--mu-f", mu_f);
    app->add_option("--a", a);
    app->add_option("--b", b);
    app->add_option("--norm", norm, "l1 | l2");
    app->add_option("--pool-size", pool_size);
  }

  Json descriptor() const {
    Json j = file.empty() ? Json{{"family", family}, {"n", n}, {"seed", seed}} : read_json_file(file);
    auto put = [&](const char* k, const auto& v) {
      if (v) j[k] = *v;
    };
    put("alpha0", alpha0);
    put("alpha1", alpha1);
    put("lambda0", lambda0);
    put("epsilon", epsilon);
    put("mu_f", mu_f);
    put("a", a);
    put("b", b);
    put("norm", norm);
    put("pool_size", pool_size);
    return j;
  }
};

struct RunFlags {
  std::string algorithm = "smd";
  std::string setup = "euclidean";
  long N = 1000;
  std::uint64_t seed = 1;
  std::optional<double> theta, step;
  std::string start = "center";
  long thin = 0;
  long budget = 0;
  int m = 1;

  void attach(CLI::App* app) {
    app->add_option("--algorithm", algorithm, "rsa | smd | msmd | msmd-budget | msmd-ball");
    app->add_option("--setup", setup, "euclidean | entropy | pnorm");
    app->add_option("--N", N, "oracle calls");
    app->add_option("--seed", seed, "sampling seed");
    app->add_option("--theta", theta, "step parameter theta");
    app->add_option("--step", step, "constant step override");
    app->add_option("--start", start, "center | e1");
    app->add_option("--thin", thin, "keep every k-th iterate");
    app->add_option("--budget", budget, "total oracle calls for msmd-budget");
    app->add_option("--m", m, "steps of msmd and msmd-ball");
  }
};

std::optional<Vector> start_point(const std::string& start, const ProblemSpec& problem) {
  if (start == "center") return std::nullopt;
  if (start != "e1") throw UsageError("--start must be center or e1");
  Vector x = Vector::Zero(problem.dimension());
  const FeasibleSet* inner = problem.set.get();
  if (const auto* box = dynamic_cast<const BoxProduct*>(inner)) {
    x.head(box->box_dimension()) = 0.5 * (box->lower() + box->upper());
    inner = box->inner().get();
  }
  const auto* simplex = dynamic_cast<const FloorSimplex*>(inner);
  if (!simplex) throw UsageError("--start e1 needs a simplex factor");
  x.tail(simplex->dimension()) = simplex->vertex(0);
  return x;
}

RunRecord run_solver(const ProblemSpec& problem, const RunFlags& f) {
  const Algorithm alg = algorithm_from_string(f.algorithm);
  const auto setup = make_setup(alg == Algorithm::Rsa ? "euclidean" : f.setup, problem.set);
  const auto start = start_point(f.start, problem);
  switch (alg) {
    case Algorithm::Rsa:
    case Algorithm::Smd: {
      SolverConfig cfg;
      cfg.algorithm = alg;
      cfg.N = f.N;
      cfg.seed = f.seed;
      cfg.theta = f.theta;
      cfg.step = f.step;
      cfg.start = start;
      cfg.thin_stride = f.thin;
      return alg == Algorithm::Rsa ? rsa_run(problem, cfg) : smd_run(problem, *setup, cfg);
    }
    case Algorithm::Msmd:
    case Algorithm::MsmdBudget:
    case Algorithm::MsmdBall: {
      MultistepOptions opt;
      opt.start = start;
      opt.thin_stride = f.thin;
      if (alg == Algorithm::Msmd && f.budget < 1) return msmd_run(problem, *setup, f.m, f.seed, opt);
      if (alg == Algorithm::MsmdBall) return msmd_ball_run(problem, *setup, f.m, f.seed, f.theta.value_or(1.0), opt);
      if (f.budget < 1) throw UsageError(f.algorithm + " needs --budget");
      return msmd_budget_run(problem, *setup, f.budget, f.seed, opt);
    }
  }
  throw UsageError("unknown algorithm");
}

void emit(const std::string& out, const std::string& text, const std::string& summary) {
  if (out.empty()) {
    std::cout << text << "\n";
    return;
  }
  write_file_atomic(out, text + "\n");
  std::cout << summary << "\n";
}

std::string fmt(double v) { return format_double(v); }

ExperimentConfig load_config(const std::string& path, const std::optional<std::string>& out,
                             const std::optional<long>& reps, const std::optional<std::uint64_t>& seed,
                             const std::optional<int>& workers, const std::optional<double>& alpha,
                             const std::optional<double>& filter, const std::vector<double>& thetas,
                             const std::optional<std::string>& setup) {
  ExperimentConfig c = config_from_json(read_json_file(path));
  if (out) c.output_dir = *out;
  if (reps) c.replications = *reps;
  if (seed) c.master_seed = *seed;
  if (workers) c.workers = *workers;
  if (alpha) c.alpha = *alpha;
  if (filter) c.filter_fraction = *filter;
  if (!thetas.empty()) c.thetas = thetas;
  if (setup) c.setup = *setup;
  c.validate();
  return c;
}

std::vector<std::pair<double, double>> read_atoms(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::vector<std::pair<double, double>> atoms;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double w, z;
    if (!(ls >> w >> z)) throw UsageError(path + ": expected 'weight,value' lines");
    atoms.emplace_back(w, z);
  }
  return atoms;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Stochastic mirror descent with online confidence bounds"};
  app.require_subcommand(1);

  ProblemFlags solve_problem, ci_problem;
  RunFlags solve_run, ci_run;
  std::string solve_out, ci_out;
  auto* solve = app.add_subcommand("solve", "run a solver and emit the RunRecord JSON");
  solve_problem.attach(solve);
  solve_run.attach(solve);
  solve->add_option("--out", solve_out, "RunRecord JSON path");

  std::string ci_method = "smd1";
  double ci_alpha = 0.1;
  auto* ci = app.add_subcommand("ci", "confidence interval for the optimal value");
  ci_problem.attach(ci);
  ci_run.attach(ci);
  ci->add_option("--method", ci_method, "smd1 | smd2 | asymptotic");
  ci->add_option("--alpha", ci_alpha, "risk level");
  ci->add_option("--out", ci_out, "interval JSON path");

  std::string cov_config, cmp_config;
  std::optional<std::string> cov_out, cmp_out, cov_setup, cmp_setup;
  std::optional<long> cov_reps, cmp_reps;
  std::optional<std::uint64_t> cov_seed, cmp_seed;
  std::optional<int> cov_workers, cmp_workers;
  std::optional<double> cov_alpha, cov_filter, cmp_alpha, cmp_filter;
  std::vector<double> cov_thetas, cmp_thetas;
  auto attach_experiment = [](CLI::App* a, std::string& config, std::optional<std::string>& out,
                              std::optional<long>& reps, std::optional<std::uint64_t>& seed,
                              std::optional<int>& workers, std::optional<double>& alpha,
                              std::optional<double>& filter, std::vector<double>& thetas,
                              std::optional<std::string>& setup) {
    a->add_option("--config", config, "experiment config JSON")->required();
    a->add_option("--out", out, "output directory");
    a->add_option("--replications", reps);
    a->add_option("--master-seed", seed);
    a->add_option("--workers", workers);
    a->add_option("--alpha", alpha);
    a->add_option("--filter", filter, "fraction of replications removed");
    a->add_option("--thetas", thetas)->delimiter(',');
    a->add_option("--setup", setup);
  };
  auto* coverage = app.add_subcommand("coverage", "coverage and width study");
  attach_experiment(coverage, cov_config, cov_out, cov_reps, cov_seed, cov_workers, cov_alpha, cov_filter, cov_thetas,
                    cov_setup);
  auto* compare = app.add_subcommand("compare", "SMD against multistep SMD trajectories");
  attach_experiment(compare, cmp_config, cmp_out, cmp_reps, cmp_seed, cmp_workers, cmp_alpha, cmp_filter, cmp_thetas,
                    cmp_setup);

  std::string eprm_model, eprm_atoms;
  std::optional<double> eprm_cvar;
  std::vector<double> eprm_outcomes;
  auto* eprm = app.add_subcommand("eprm-eval", "evaluate a polyhedral risk measure on an empirical distribution");
  eprm->add_option("--model", eprm_model, "EPRM model JSON");
  eprm->add_option("--cvar", eprm_cvar, "use the CVaR model with this epsilon");
  eprm->add_option("--outcomes", eprm_outcomes, "equally weighted outcomes")->delimiter(',');
  eprm->add_option("--atoms", eprm_atoms, "file of 'weight,value' lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) {
      const ProblemSpec problem = problem_from_json(solve_problem.descriptor());
      const RunRecord rec = run_solver(problem, solve_run);
      emit(solve_out, to_json(rec).dump(2),
           "solve: " + to_string(rec.algorithm) + " calls=" + std::to_string(rec.oracle_calls) +
               " g_avg=" + fmt(rec.g_avg) + " -> " + solve_out);
    } else if (ci->parsed()) {
      const ProblemSpec problem = problem_from_json(ci_problem.descriptor());
      const IntervalMethod method = interval_method_from_string(ci_method);
      ConfidenceInterval interval;
      if (method == IntervalMethod::Asymptotic) {
        const auto sample = draw_sample(problem, ci_run.N, ci_run.seed);
        interval = ci_asymptotic(problem, sample, ci_alpha, saa_solve(problem, sample));
      } else {
        RunFlags f = ci_run;
        if (method == IntervalMethod::Smd2 && !f.theta) f.theta = 1.0;
        if (method == IntervalMethod::Smd1) f.theta.reset();
        const RunRecord rec = run_solver(problem, f);
        interval = method == IntervalMethod::Smd1 ? ci_smd1(rec, problem.constants, ci_alpha)
                                                  : ci_smd2(rec, problem.constants, *problem.set, ci_alpha, *f.theta);
      }
      std::ostringstream line;
      line << to_string(interval.method) << " low=" << fmt(interval.low) << " high=" << fmt(interval.high);
      if (interval.theta1) line << " theta1=" << fmt(*interval.theta1);
      if (interval.theta2) line << " theta2=" << fmt(*interval.theta2);
      if (interval.theta3) line << " theta3=" << fmt(*interval.theta3);
      std::cout << line.str() << "\n";
      if (!ci_out.empty()) write_file_atomic(ci_out, to_json(interval).dump(2) + "\n");
    } else if (coverage->parsed()) {
      const ExperimentConfig c = load_config(cov_config, cov_out, cov_reps, cov_seed, cov_workers, cov_alpha,
                                             cov_filter, cov_thetas, cov_setup);
      const auto cells = run_coverage(c);
      std::cout << "coverage: " << cells.size() << " cells x " << c.replications << " replications -> "
                << c.output_dir << "\n";
    } else if (compare->parsed()) {
      const ExperimentConfig c = load_config(cmp_config, cmp_out, cmp_reps, cmp_seed, cmp_workers, cmp_alpha,
                                             cmp_filter, cmp_thetas, cmp_setup);
      const auto res = run_trajectory_compare(c);
      std::ostringstream line;
      line << "compare:";
      for (const auto& r : res)
        line << " (n=" << r.n << ", N=" << r.N << ") smd=" << fmt(r.smd_final_f) << " msmd=" << fmt(r.msmd_final_f);
      std::cout << line.str() << " -> " << c.output_dir << "\n";
    } else if (eprm->parsed()) {
      if (eprm_model.empty() == !eprm_cvar) throw UsageError("eprm-eval needs exactly one of --model and --cvar");
      std::vector<std::pair<double, double>> atoms = eprm_atoms.empty() ? std::vector<std::pair<double, double>>{}
                                                                        : read_atoms(eprm_atoms);
      for (double z : eprm_outcomes) atoms.emplace_back(1.0, z);
      if (atoms.empty()) throw UsageError("eprm-eval needs --outcomes or --atoms");
      double spread = 1.0;
      for (const auto& atom : atoms) spread = std::max(spread, 2.0 * std::abs(atom.second));
      const EprmModel model = eprm_cvar ? cvar_as_eprm(*eprm_cvar, spread) : eprm_from_json(read_json_file(eprm_model));
      const EprmValue v = eprm_evaluate(model, atoms);
      std::cout << "value=" << fmt(v.value) << " gap=" << fmt(v.gap) << " iterations=" << v.iterations << "\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidMethod& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace mirror_bounds
