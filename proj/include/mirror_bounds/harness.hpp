#pragma once

#include "mirror_bounds/json_io.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mirror_bounds {

enum class ExperimentKind { Coverage, WidthSweep, TrajectoryCompare, SingleSolve };
std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Coverage;
  // Instance parameters; n and seed are filled per cell and replication.
  Json instance = Json{{"family", "instance1"}};
  std::vector<std::pair<Index, long>> grid;  // (n, N)
  long replications = 250;
  double filter_fraction = 0.2;
  double alpha = 0.1;
  std::vector<double> thetas{1.0};
  std::uint64_t master_seed = 1;
  std::string output_dir = "results";
  std::string setup = "entropy";
  // Solver start: "center" (setup center) or "e1" (first vertex of the simplex factor).
  std::string start = "center";
  // Trajectory comparison: steps of the multistep schedule and iteration thinning of the series.
  int msmd_steps = 2;
  long series_stride = 1;
  // 0: MIRROR_BOUNDS_WORKERS, else hardware concurrency.
  int workers = 0;

  void validate() const;
};

ExperimentConfig config_from_json(const Json& j);
Json to_json(const ExperimentConfig& c);

std::uint64_t replication_seed(std::uint64_t master, const std::string& family, Index n, long N, long r);
int worker_count(int configured);

// Indices removed by the filter: floor(fraction * widths.size()) smallest widths, ties by index.
std::vector<std::size_t> filtered_out(const std::vector<double>& widths, double fraction);

struct MethodOutcome {
  std::string method;  // smd1 | smd2 | asymptotic
  double theta = 0;
  double low = 0;
  double high = 0;
  double estimate = 0;
  double seconds = 0;
};

struct ReplicationResult {
  long index = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  bool kept = false;
  double f_star = 0;
  std::vector<MethodOutcome> methods;
};

struct CoverageRow {
  Index n = 0;
  long N = 0;
  std::string method;
  double theta = 0;
  double coverage = 0;
  double mean_width = 0;
  double mean_seconds = 0;
  double median_seconds = 0;
  long kept = 0;
  long failures = 0;
};

struct RatioRow {
  Index n = 0;
  long N = 0;
  std::string numerator;
  std::string denominator;
  double theta = 0;
  double mean_ratio = 0;
};

struct CellResult {
  Index n = 0;
  long N = 0;
  std::vector<ReplicationResult> replications;
  std::vector<CoverageRow> rows;
  std::vector<RatioRow> ratios;
};

// Runs every (n, N) cell and writes coverage_*, ratios_*, replications_* and timing_* CSVs when write is set.
std::vector<CellResult> run_coverage(const ExperimentConfig& config, bool write = true);

struct TrajectoryPoint {
  long iteration = 0;
  int msmd_stage = 0;
  double smd_g = 0;
  double smd_f = 0;
  double msmd_g = 0;
  double msmd_f = 0;
  double smd_step = 0;
  double msmd_step = 0;
};

struct TrajectoryResult {
  Index n = 0;
  long N = 0;
  long runs = 0;
  double smd_final_f = 0;
  double msmd_final_f = 0;
  double smd_final_g = 0;
  double msmd_final_g = 0;
  double smd_step = 0;
  MultistepSchedule schedule;
  std::vector<TrajectoryPoint> series;
};

// Paired-seed SMD (constant step) against multistep SMD on instance 1 with uniform-convexity constants.
std::vector<TrajectoryResult> run_trajectory_compare(const ExperimentConfig& config, bool write = true);

inline constexpr const char* kCsvHeader = "# mirror-bounds v1";

}  // namespace mirror_bounds
