#pragma once

// Config-driven experiments: problem and network construction, replica-parallel
// chain runs, metric aggregation, theory evaluation and CSV/JSON output.
//
// Seeds:  data        hash(master, "data")          unless task.data_seed is set
//         network δ   hash(master, "network")
//         replica r   hash(master, r)
//         compare     hash(master, algorithm tag, r)

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "exlg/config.hpp"
#include "exlg/metrics.hpp"
#include "exlg/network.hpp"
#include "exlg/samplers.hpp"
#include "exlg/tasks.hpp"
#include "exlg/theory.hpp"

namespace exlg {

inline constexpr const char* kVersion = "0.3.0";

enum class TaskKind { LinReg, LogRegSynthetic, LogRegCsv, Quadratic };

std::string_view to_string(TaskKind k);
TaskKind parse_task_kind(std::string_view s);

struct TaskSpec {
  TaskKind kind = TaskKind::LinReg;
  std::size_t n_points = 5000;
  std::size_t dim = 2;
  Vector beta_true;  // empty: task-specific default
  double noise_std = 1.0;
  double prior_var = 10.0;
  double feature_var = 20.0;
  std::size_t n_eval = 1000;
  std::optional<std::uint64_t> data_seed;
  std::string csv_path;
  std::string label_column = "0";
  std::string positive_label;
  std::vector<std::string> ignore_columns;
  bool standardize = true;
  double curvature_min = 1.0;
  double curvature_max = 3.0;
};

struct NetworkSpec {
  TopologyKind topology = TopologyKind::Ring;
  std::size_t agents = 6;
  double h = 0.5;
  std::optional<double> delta;
  std::string adjacency_file;
};

struct SamplerSpec {
  std::vector<Algorithm> algorithms{Algorithm::GEN_EXTRA_SGLD};
  double eta = 0.01;
  std::optional<std::size_t> batch;
  std::int64_t K = 200;
  int temperature = 1;
  BMatrix::Kind b_mode = BMatrix::Kind::WTildeOverEta;
  double b_scale = 1.0;
  InitKind init = InitKind::Zero;
  double init_var = 1.0;
};

struct RunSpec {
  std::size_t replicas = 1;
  std::int64_t record_every = 1;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::size_t threads = 1;
  bool allow_assumption_violations = false;
  bool write_trajectories = true;
};

struct TheorySpec {
  std::optional<double> sigma2;
  std::optional<double> delta2;
  std::optional<double> w2_init;
  bool auto_shrink = false;
  std::size_t noise_draws = 2000;
};

struct ExperimentConfig {
  TaskSpec task;
  NetworkSpec network;
  SamplerSpec sampler;
  RunSpec run;
  std::vector<double> h_grid;  // sweep-h
  TheorySpec theory;
  Config raw;

  /// Throws ConfigError with the offending line on any malformed or unknown key.
  static ExperimentConfig from_config(const Config& c);
  /// Reads a config file, or the "config" object of a manifest.json written by a run.
  static ExperimentConfig load(const std::string& path);
};

/// Loads a config file or a manifest (the resolved config is echoed there).
Config load_config_source(const std::string& path);

struct Problem {
  TaskKind kind = TaskKind::LinReg;
  std::unique_ptr<GradientOracle> oracle;
  std::optional<GaussianDist> posterior;  // exact target (linear regression)
  std::optional<Dataset> eval_set;        // held-out set (logistic regression)
  Vector x_star;

  const GradientOracle& task() const { return *oracle; }
};

Problem build_problem(const ExperimentConfig& cfg);
MixingSet build_network(const ExperimentConfig& cfg, HRange range = HRange::Strict);
/// As build_network but with an explicit h.
MixingSet build_network(const ExperimentConfig& cfg, double h, HRange range = HRange::Strict);

SamplerConfig sampler_config(const ExperimentConfig& cfg, Algorithm alg, std::uint64_t seed);

std::uint64_t replica_seed(std::uint64_t master, std::size_t r);
std::uint64_t compare_seed(std::uint64_t master, Algorithm alg, std::size_t r);

struct ReplicaSet {
  Algorithm algorithm = Algorithm::GEN_EXTRA_SGLD;
  std::vector<std::uint64_t> seeds;
  std::vector<TrajectoryRecord> records;
};

/// Runs one chain per seed on up to `threads` workers; results are stored by replica
/// index so output never depends on scheduling. A divergence is rethrown with the
/// lowest failing replica id in its message.
ReplicaSet run_replicas(const SamplerConfig& base, const MixingSet& mixing,
                        const GradientOracle& oracle, const std::vector<std::uint64_t>& seeds,
                        std::int64_t record_every, std::size_t threads);

/// Task-appropriate series: W₂ per agent and of the mean (linear regression, R >= 2),
/// held-out accuracy (logistic), distance to x* (quadratic), and consensus error.
std::vector<MetricSeries> compute_metrics(const Problem& problem, const ReplicaSet& rs);

/// The series whose plateau ranks algorithms and h values, and whether lower is better.
struct PrimaryMetric {
  std::string label;
  bool lower_is_better = true;
};
PrimaryMetric primary_metric(TaskKind kind, std::size_t replicas);

/// Theory inputs derived from the problem, network and sampler settings.
ProblemParams problem_params(const ExperimentConfig& cfg, const Problem& problem,
                             const MixingSet& mixing);

// Output helpers -----------------------------------------------------------

/// Writes (k, label, value) rows; returns the number of data rows.
std::size_t write_metrics_csv(const std::string& path, const std::vector<MetricSeries>& series);
/// Writes (replica, k, agent, coord_0..coord_{d-1}); returns the number of data rows.
std::size_t write_trajectory_csv(const std::string& path, const ReplicaSet& rs);

struct FileEntry {
  std::string name;
  std::size_t rows = 0;
};

struct ManifestInfo {
  std::string command;
  const ExperimentConfig* cfg = nullptr;
  std::vector<std::pair<std::string, std::vector<std::uint64_t>>> seeds;  // per algorithm
  std::vector<FileEntry> files;
  double wall_seconds = 0.0;
  std::size_t threads = 1;
};

/// Writes manifest.json via a temporary file and rename.
void write_manifest(const std::string& dir, const ManifestInfo& info);

// Commands -----------------------------------------------------------------
// Each returns a process exit status (0 or 3) and throws ConfigError,
// AssumptionError or DivergenceError for the other failures.

int cmd_validate(const ExperimentConfig& cfg, std::ostream& out);
int cmd_run(const ExperimentConfig& cfg, std::ostream& out);
int cmd_compare(const ExperimentConfig& cfg, std::ostream& out);
int cmd_sweep_h(const ExperimentConfig& cfg, std::ostream& out);
int cmd_theory(const ExperimentConfig& cfg, std::ostream& out);
int cmd_gen_data(const ExperimentConfig& cfg, std::ostream& out);

}  // namespace exlg
