#include "mirror_bounds/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <numeric>
#include <sstream>
#include <thread>

namespace mirror_bounds {

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Coverage: return "coverage";
    case ExperimentKind::WidthSweep: return "width-sweep";
    case ExperimentKind::TrajectoryCompare: return "trajectory-compare";
    case ExperimentKind::SingleSolve: return "single-solve";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "coverage") return ExperimentKind::Coverage;
  if (s == "width-sweep") return ExperimentKind::WidthSweep;
  if (s == "trajectory-compare") return ExperimentKind::TrajectoryCompare;
  if (s == "single-solve") return ExperimentKind::SingleSolve;
  throw ConfigurationError("unknown experiment kind '" + s + "'");
}

void ExperimentConfig::validate() const {
  if (replications < 1) throw ConfigurationError("config: replications must be >= 1");
  if (!(filter_fraction >= 0 && filter_fraction < 1)) throw ConfigurationError("config: filter fraction must lie in [0, 1)");
  if (grid.empty()) throw ConfigurationError("config: the (n, N) grid is empty");
  for (const auto& [n, N] : grid)
    if (n < 1 || N < 2) throw ConfigurationError("config: grid entries need n >= 1 and N >= 2");
  if (!(alpha > 0 && alpha < 1)) throw ConfigurationError("config: alpha must lie in (0, 1)");
  if (thetas.empty()) throw ConfigurationError("config: theta list is empty");
  for (double t : thetas)
    if (!(t > 0)) throw ConfigurationError("config: thetas must be positive");
  if (!instance.is_object() || !instance.contains("family")) throw ConfigurationError("config: instance needs a family");
  if (start != "center" && start != "e1") throw ConfigurationError("config: start must be center or e1");
  if (msmd_steps < 1) throw ConfigurationError("config: msmd_steps must be >= 1");
  if (series_stride < 1) throw ConfigurationError("config: series_stride must be >= 1");
  if (workers < 0) throw ConfigurationError("config: workers must be >= 0");
}

ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigurationError("config: expected a JSON object");
  ExperimentConfig c;
  try {
    if (j.contains("kind")) c.kind = experiment_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("instance")) c.instance = j.at("instance");
    if (j.contains("grid")) {
      for (const auto& cell : j.at("grid")) {
        if (cell.is_array() && cell.size() == 2) c.grid.emplace_back(cell[0].get<Index>(), cell[1].get<long>());
        else c.grid.emplace_back(cell.at("n").get<Index>(), cell.at("N").get<long>());
      }
    }
    if (j.contains("replications")) c.replications = j.at("replications").get<long>();
    if (j.contains("filter_fraction")) c.filter_fraction = j.at("filter_fraction").get<double>();
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("thetas")) c.thetas = j.at("thetas").get<std::vector<double>>();
    if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("setup")) c.setup = j.at("setup").get<std::string>();
    if (j.contains("start")) c.start = j.at("start").get<std::string>();
    if (j.contains("msmd_steps")) c.msmd_steps = j.at("msmd_steps").get<int>();
    if (j.contains("series_stride")) c.series_stride = j.at("series_stride").get<long>();
    if (j.contains("workers")) c.workers = j.at("workers").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("config: ") + e.what());
  }
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json grid = Json::array();
  for (const auto& [n, N] : c.grid) grid.push_back({n, N});
  return {{"kind", to_string(c.kind)},     {"instance", c.instance},
          {"grid", grid},                  {"replications", c.replications},
          {"filter_fraction", c.filter_fraction}, {"alpha", c.alpha},
          {"thetas", c.thetas},            {"master_seed", c.master_seed},
          {"output_dir", c.output_dir},    {"setup", c.setup},
          {"start", c.start},              {"msmd_steps", c.msmd_steps},
          {"series_stride", c.series_stride}, {"workers", c.workers}};
}

std::uint64_t replication_seed(std::uint64_t master, const std::string& family, Index n, long N, long r) {
  std::uint64_t s = hash_combine(master, hash_string(family));
  s = hash_combine(s, static_cast<std::uint64_t>(n));
  s = hash_combine(s, static_cast<std::uint64_t>(N));
  return hash_combine(s, static_cast<std::uint64_t>(r));
}

int worker_count(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("MIRROR_BOUNDS_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min(v, 1024L));
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::vector<std::size_t> filtered_out(const std::vector<double>& widths, double fraction) {
  std::vector<std::size_t> order(widths.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return widths[a] < widths[b]; });
  const auto drop = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(widths.size())));
  order.resize(drop);
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

void parallel_for(long count, int workers, const std::function<void(long)>& body) {
  const int w = static_cast<int>(std::min<long>(std::max(1, workers), count));
  if (w <= 1) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  for (int k = 0; k < w; ++k)
    pool.emplace_back([&] {
      for (long i = next++; i < count; i = next++) body(i);
    });
  for (auto& t : pool) t.join();
}

std::string family_of(const ExperimentConfig& c) { return c.instance.at("family").get<std::string>(); }

// Containment up to rounding in the last bits of the endpoints.
bool covers(const MethodOutcome& m, double f_star) {
  const double tol = 1e-12 * (1.0 + std::abs(f_star));
  return m.low - tol <= f_star && f_star <= m.high + tol;
}

ProblemSpec make_problem(const ExperimentConfig& c, Index n, std::uint64_t seed) {
  Json j = c.instance;
  j["n"] = n;
  j["seed"] = seed;
  return problem_from_json(j);
}

Vector make_start(const ExperimentConfig& c, const ProblemSpec& p, const ProximalSetup& setup) {
  if (c.start == "center") return setup.center();
  Vector x = Vector::Zero(p.dimension());
  const FeasibleSet* inner = p.set.get();
  if (const auto* box = dynamic_cast<const BoxProduct*>(inner)) {
    x.head(box->box_dimension()) = 0.5 * (box->lower() + box->upper());
    inner = box->inner().get();
  }
  const auto* simplex = dynamic_cast<const FloorSimplex*>(inner);
  if (!simplex) throw ConfigurationError("start e1 needs a simplex factor");
  x.tail(simplex->dimension()) = simplex->vertex(0);
  return x;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ReplicationResult run_replication(const ExperimentConfig& c, Index n, long N, long r) {
  ReplicationResult out;
  out.index = r;
  out.seed = replication_seed(c.master_seed, family_of(c), n, N, r);
  try {
    const ProblemSpec problem = make_problem(c, n, out.seed);
    out.f_star = exact_optimum(problem).value;
    const auto setup = make_setup(c.setup, problem.set);
    const std::uint64_t run_seed = hash_combine(out.seed, hash_string("run"));
    std::optional<Vector> start;
    if (c.start != "center") start = make_start(c, problem, *setup);

    {
      const auto t0 = std::chrono::steady_clock::now();
      SolverConfig cfg;
      cfg.N = N;
      cfg.seed = run_seed;
      cfg.start = start;
      const RunRecord run = smd_run(problem, *setup, cfg);
      const ConfidenceInterval ci = ci_smd1(run, problem.constants, c.alpha);
      out.methods.push_back({"smd1", 0.0, ci.low, ci.high, run.g_avg, seconds_since(t0)});
    }
    for (const double theta : c.thetas) {
      const auto t0 = std::chrono::steady_clock::now();
      SolverConfig cfg;
      cfg.N = N;
      cfg.seed = run_seed;
      cfg.theta = theta;
      cfg.start = start;
      const RunRecord run = smd_run(problem, *setup, cfg);
      const ConfidenceInterval ci = ci_smd2(run, problem.constants, *problem.set, c.alpha, theta);
      out.methods.push_back({"smd2", theta, ci.low, ci.high, run.g_avg, seconds_since(t0)});
    }
    {
      const auto t0 = std::chrono::steady_clock::now();
      const auto sample = draw_sample(problem, N, run_seed);
      const SaaSolution saa = saa_solve(problem, sample);
      const ConfidenceInterval ci = ci_asymptotic(problem, sample, c.alpha, saa);
      out.methods.push_back({"asymptotic", 0.0, ci.low, ci.high, saa.value, seconds_since(t0)});
    }
  } catch (const std::exception& e) {
    out.failed = true;
    out.failure = e.what();
    out.methods.clear();
  }
  return out;
}

std::string theta_cell(const std::string& method, double theta) {
  return method == "smd2" ? format_double(theta) : std::string();
}

std::string method_label(const std::string& method, double theta) {
  return method == "smd2" ? "smd2[" + format_double(theta) + "]" : method;
}

std::string csv_name(const std::string& prefix, const std::string& family, Index n, long N) {
  std::ostringstream os;
  os << prefix << "_" << family << "_" << n << "_" << N << ".csv";
  return os.str();
}

std::string join_path(const std::string& dir, const std::string& file) { return dir.empty() ? file : dir + "/" + file; }

std::string timestamp_comment() {
  const std::time_t now = std::time(nullptr);
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return std::string("# generated ") + buf + "\n";
}

void write_cell(const ExperimentConfig& c, const CellResult& cell) {
  const std::string family = family_of(c);
  {
    std::ostringstream os;
    os << kCsvHeader << "\n"
       << "n,N,method,theta,coverage,mean_width,replications_kept,failures\n";
    for (const auto& row : cell.rows)
      os << row.n << "," << row.N << "," << row.method << "," << theta_cell(row.method, row.theta) << ","
         << format_double(row.coverage) << "," << format_double(row.mean_width) << "," << row.kept << ","
         << row.failures << "\n";
    write_file_atomic(join_path(c.output_dir, csv_name("coverage", family, cell.n, cell.N)), os.str());
  }
  {
    std::ostringstream os;
    os << kCsvHeader << "\n"
       << "n,N,numerator,denominator,theta,mean_ratio\n";
    for (const auto& row : cell.ratios)
      os << row.n << "," << row.N << "," << row.numerator << "," << row.denominator << ","
         << format_double(row.theta) << "," << format_double(row.mean_ratio) << "\n";
    write_file_atomic(join_path(c.output_dir, csv_name("ratios", family, cell.n, cell.N)), os.str());
  }
  {
    std::ostringstream os;
    os << kCsvHeader << "\n"
       << "replication,seed,status,kept,f_star,method,theta,low,high,estimate,contains\n";
    for (const auto& rep : cell.replications) {
      if (rep.failed) {
        os << rep.index << "," << rep.seed << ",failed,0,,,,,,,\n";
        continue;
      }
      for (const auto& m : rep.methods)
        os << rep.index << "," << rep.seed << ",ok," << (rep.kept ? 1 : 0) << "," << format_double(rep.f_star) << ","
           << m.method << "," << theta_cell(m.method, m.theta) << "," << format_double(m.low) << ","
           << format_double(m.high) << "," << format_double(m.estimate) << ","
           << (covers(m, rep.f_star) ? 1 : 0) << "\n";
    }
    write_file_atomic(join_path(c.output_dir, csv_name("replications", family, cell.n, cell.N)), os.str());
  }
  {
    std::ostringstream os;
    os << kCsvHeader << "\n" << timestamp_comment() << "n,N,method,theta,mean_seconds,median_seconds\n";
    for (const auto& row : cell.rows)
      os << row.n << "," << row.N << "," << row.method << "," << theta_cell(row.method, row.theta) << ","
         << format_double(row.mean_seconds) << "," << format_double(row.median_seconds) << "\n";
    write_file_atomic(join_path(c.output_dir, csv_name("timing", family, cell.n, cell.N)), os.str());
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

CellResult summarize(const ExperimentConfig& c, Index n, long N, std::vector<ReplicationResult> reps) {
  CellResult cell;
  cell.n = n;
  cell.N = N;
  std::vector<std::size_t> ok;
  std::vector<double> widths;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    if (reps[i].failed) continue;
    ok.push_back(i);
    const auto& a = reps[i].methods.back();
    widths.push_back(a.high - a.low);
  }
  const auto dropped = filtered_out(widths, c.filter_fraction);
  std::vector<bool> keep(ok.size(), true);
  for (std::size_t d : dropped) keep[d] = false;
  for (std::size_t k = 0; k < ok.size(); ++k) reps[ok[k]].kept = keep[k];
  const long failures = static_cast<long>(reps.size() - ok.size());

  // Method slots are in the same order for every successful replication.
  const std::size_t slots = ok.empty() ? 0 : reps[ok.front()].methods.size();
  for (std::size_t s = 0; s < slots; ++s) {
    const auto& proto = reps[ok.front()].methods[s];
    CoverageRow row;
    row.n = n;
    row.N = N;
    row.method = proto.method;
    row.theta = proto.theta;
    row.failures = failures;
    double covered = 0, width = 0, secs = 0;
    std::vector<double> times;
    for (std::size_t k = 0; k < ok.size(); ++k) {
      if (!keep[k]) continue;
      const auto& rep = reps[ok[k]];
      const auto& m = rep.methods[s];
      covered += covers(m, rep.f_star) ? 1.0 : 0.0;
      width += m.high - m.low;
      secs += m.seconds;
      times.push_back(m.seconds);
      ++row.kept;
    }
    if (row.kept > 0) {
      row.coverage = covered / static_cast<double>(row.kept);
      row.mean_width = width / static_cast<double>(row.kept);
      row.mean_seconds = secs / static_cast<double>(row.kept);
    }
    row.median_seconds = median(times);
    cell.rows.push_back(row);
  }

  auto ratio = [&](std::size_t num, std::size_t den) {
    double sum = 0;
    long count = 0;
    for (std::size_t k = 0; k < ok.size(); ++k) {
      if (!keep[k]) continue;
      const auto& m = reps[ok[k]].methods;
      const double d = m[den].high - m[den].low;
      if (!(d > 0)) continue;
      sum += (m[num].high - m[num].low) / d;
      ++count;
    }
    return count > 0 ? sum / static_cast<double>(count) : std::nan("");
  };
  if (slots >= 2) {
    const std::size_t asym = slots - 1;
    for (std::size_t s = 1; s < asym; ++s) {
      const double theta = cell.rows[s].theta;
      cell.ratios.push_back({n, N, method_label("smd2", theta), "smd1", theta, ratio(s, 0)});
      cell.ratios.push_back({n, N, method_label("smd2", theta), "asymptotic", theta, ratio(s, asym)});
    }
    cell.ratios.push_back({n, N, "smd1", "asymptotic", 0.0, ratio(0, asym)});
  }
  cell.replications = std::move(reps);
  return cell;
}

}  // namespace

std::vector<CellResult> run_coverage(const ExperimentConfig& config, bool write) {
  config.validate();
  const int workers = worker_count(config.workers);
  std::vector<CellResult> cells;
  for (const auto& [n, N] : config.grid) {
    std::vector<ReplicationResult> reps(static_cast<std::size_t>(config.replications));
    parallel_for(config.replications, workers,
                 [&, n = n, N = N](long r) { reps[static_cast<std::size_t>(r)] = run_replication(config, n, N, r); });
    cells.push_back(summarize(config, n, N, std::move(reps)));
    if (write) write_cell(config, cells.back());
  }
  return cells;
}

namespace {

struct RunSeries {
  std::vector<double> smd_g, smd_f, smd_step, msmd_g, msmd_f, msmd_step;
  std::vector<int> msmd_stage;
  double smd_final_f = 0, msmd_final_f = 0, smd_final_g = 0, msmd_final_g = 0;
};

MultistepSchedule compare_schedule(const ProblemSpec& problem, const ProximalSetup& setup, const Vector& start,
                                   long N, int m) {
  const ConstantSheet c = constants_from_start(problem, setup, start);
  const MultistepSchedule first = msmd_schedule(c, setup, 1);
  if (first.N.front() - 1 > N) return msmd_scaled_schedule(c, setup, N, m);
  // Prescribed steps while they fit in the budget.
  MultistepSchedule s = msmd_schedule(c, setup, 64);
  int k = 0;
  while (k < s.steps() && s.total_calls(k + 1) <= N) ++k;
  s.N.resize(static_cast<std::size_t>(k));
  s.gamma.resize(static_cast<std::size_t>(k));
  s.radius.resize(static_cast<std::size_t>(k));
  return s;
}

void write_trajectory(const ExperimentConfig& c, const TrajectoryResult& t) {
  const std::string family = family_of(c);
  {
    std::ostringstream os;
    os << kCsvHeader << "\n" << "iteration,msmd_stage,smd_g,smd_f,msmd_g,msmd_f\n";
    for (const auto& p : t.series)
      os << p.iteration << "," << p.msmd_stage << "," << format_double(p.smd_g) << "," << format_double(p.smd_f) << ","
         << format_double(p.msmd_g) << "," << format_double(p.msmd_f) << "\n";
    write_file_atomic(join_path(c.output_dir, csv_name("trajectory", family, t.n, t.N)), os.str());
  }
  {
    std::ostringstream os;
    os << kCsvHeader << "\n" << "iteration,smd_step,msmd_step\n";
    for (const auto& p : t.series)
      os << p.iteration << "," << format_double(p.smd_step) << "," << format_double(p.msmd_step) << "\n";
    write_file_atomic(join_path(c.output_dir, csv_name("steps", family, t.n, t.N)), os.str());
  }
  {
    std::ostringstream os;
    os << kCsvHeader << "\n" << "method,runs,mean_final_f,mean_final_g,first_step,last_step,stages\n";
    os << "smd," << t.runs << "," << format_double(t.smd_final_f) << "," << format_double(t.smd_final_g) << ","
       << format_double(t.smd_step) << "," << format_double(t.smd_step) << ",1\n";
    os << "msmd," << t.runs << "," << format_double(t.msmd_final_f) << "," << format_double(t.msmd_final_g) << ","
       << format_double(t.schedule.gamma.front()) << "," << format_double(t.schedule.gamma.back()) << ","
       << t.schedule.steps() << "\n";
    write_file_atomic(join_path(c.output_dir, csv_name("compare", family, t.n, t.N)), os.str());
  }
}

}  // namespace

std::vector<TrajectoryResult> run_trajectory_compare(const ExperimentConfig& config, bool write) {
  config.validate();
  const int workers = worker_count(config.workers);
  const std::string family = family_of(config);
  std::vector<TrajectoryResult> out;
  for (const auto& [n, N] : config.grid) {
    const ProblemSpec problem = make_problem(config, n, replication_seed(config.master_seed, family, n, N, -1));
    if (!problem.exact_value) throw UnsupportedCapability("trajectory comparison needs an exact objective");
    const auto setup = make_setup(config.setup, problem.set);
    const Vector start = make_start(config, problem, *setup);
    TrajectoryResult res;
    res.n = n;
    res.N = N;
    res.runs = config.replications;
    res.schedule = compare_schedule(problem, *setup, start, N, config.msmd_steps);
    const long msmd_calls = res.schedule.total_calls();
    const long stride = config.series_stride;

    std::vector<RunSeries> series(static_cast<std::size_t>(config.replications));
    std::vector<std::string> errors(series.size());
    parallel_for(config.replications, workers, [&, n = n, N = N](long r) {
      auto& s = series[static_cast<std::size_t>(r)];
      try {
        const std::uint64_t seed =
            hash_combine(replication_seed(config.master_seed, family, n, N, r), hash_string("run"));
        SolverConfig cfg;
        cfg.N = N;
        cfg.seed = seed;
        cfg.start = start;
        cfg.observer = [&](const IterationView& v) {
          if ((v.t - 1) % stride != 0 && v.t != N) return;
          s.smd_g.push_back(v.g_avg);
          s.smd_f.push_back(problem.exact_value(v.x_avg));
          s.smd_step.push_back(v.step);
        };
        const RunRecord smd = smd_run(problem, *setup, cfg);
        s.smd_final_f = problem.exact_value(smd.x_avg);
        s.smd_final_g = smd.g_avg;

        MultistepOptions opt;
        opt.start = start;
        opt.schedule = res.schedule;
        long global = 0;
        opt.observer = [&](const IterationView& v) {
          ++global;
          if ((global - 1) % stride != 0 && global != msmd_calls) return;
          s.msmd_g.push_back(v.g_avg);
          s.msmd_f.push_back(problem.exact_value(v.x_avg));
          s.msmd_step.push_back(v.step);
          s.msmd_stage.push_back(v.stage);
        };
        const RunRecord ms = msmd_run(problem, *setup, res.schedule.steps(), seed, opt);
        s.msmd_final_f = problem.exact_value(ms.x_avg);
        s.msmd_final_g = ms.g_avg;
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(r)] = e.what();
      }
    });
    for (std::size_t r = 0; r < errors.size(); ++r)
      if (!errors[r].empty()) throw std::runtime_error("trajectory run " + std::to_string(r) + ": " + errors[r]);

    // Sum in run order so the averages do not depend on the worker count.
    const double R = static_cast<double>(config.replications);
    const std::size_t len = std::max(series.front().smd_g.size(), series.front().msmd_g.size());
    res.series.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
      auto& p = res.series[i];
      p.iteration = static_cast<long>(i) * stride + 1;
      if (i + 1 == len) p.iteration = std::max(N, msmd_calls);
      for (const auto& s : series) {
        if (i < s.smd_g.size()) {
          p.smd_g += s.smd_g[i] / R;
          p.smd_f += s.smd_f[i] / R;
          p.smd_step = s.smd_step[i];
        }
        if (i < s.msmd_g.size()) {
          p.msmd_g += s.msmd_g[i] / R;
          p.msmd_f += s.msmd_f[i] / R;
          p.msmd_step = s.msmd_step[i];
          p.msmd_stage = s.msmd_stage[i];
        }
      }
    }
    for (const auto& s : series) {
      res.smd_final_f += s.smd_final_f / R;
      res.msmd_final_f += s.msmd_final_f / R;
      res.smd_final_g += s.smd_final_g / R;
      res.msmd_final_g += s.msmd_final_g / R;
    }
    res.smd_step = series.front().smd_step.empty() ? 0.0 : series.front().smd_step.front();
    if (write) write_trajectory(config, res);
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace mirror_bounds
