#include "exlg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "exlg/error.hpp"

namespace exlg {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Config

std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::LinReg: return "linreg";
    case TaskKind::LogRegSynthetic: return "logreg-synthetic";
    case TaskKind::LogRegCsv: return "logreg-csv";
    case TaskKind::Quadratic: return "quadratic";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view s) {
  std::string v(s);
  for (char& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::replace(v.begin(), v.end(), '_', '-');
  if (v == "linreg" || v == "linear-regression") return TaskKind::LinReg;
  if (v == "logreg-synthetic" || v == "logreg") return TaskKind::LogRegSynthetic;
  if (v == "logreg-csv") return TaskKind::LogRegCsv;
  if (v == "quadratic") return TaskKind::Quadratic;
  throw ConfigError("unknown task kind '" + std::string(s) + "'");
}

namespace {

const std::vector<std::string> kKnownKeys = {
    "task.kind",          "task.n_points",        "task.dim",
    "task.beta_true",     "task.noise_std",       "task.prior_var",
    "task.feature_var",   "task.n_eval",          "task.data_seed",
    "task.csv_path",      "task.label_column",    "task.positive_label",
    "task.ignore_columns", "task.standardize",    "task.curvature_min",
    "task.curvature_max", "network.topology",     "network.agents",
    "network.h",          "network.delta",        "network.adjacency_file",
    "sampler.algorithm",  "sampler.algorithms",   "sampler.eta",
    "sampler.batch",      "sampler.k",            "sampler.temperature",
    "sampler.b_mode",     "sampler.b_scale",      "sampler.init",
    "sampler.init_var",   "run.replicas",         "run.record_every",
    "run.seed",           "run.out",              "run.threads",
    "run.allow_assumption_violations",            "run.write_trajectories",
    "sweep.h_grid",       "sweep.h_count",        "sweep.h_min",
    "sweep.h_max",        "theory.sigma2",        "theory.delta2",
    "theory.w2_init",     "theory.auto_shrink",   "theory.noise_draws",
};

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

Vector default_beta(std::size_t d) {
  Vector b(d);
  for (std::size_t c = 0; c < d; ++c) b[c] = (c % 2 == 0 ? 1.0 : -1.0) / static_cast<double>(1 + c / 2);
  return b;
}

std::size_t positive_size(const Config& c, const std::string& key, std::int64_t fallback) {
  const std::int64_t v = c.get_int(key, fallback);
  if (v < 1) throw ConfigError(c.source() + ": " + key + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const Config& c) {
  c.reject_unknown(kKnownKeys);
  ExperimentConfig e;
  e.raw = c;

  TaskSpec& t = e.task;
  t.kind = parse_task_kind(c.get_string("task.kind", "linreg"));
  t.n_points = positive_size(c, "task.n_points", t.kind == TaskKind::LinReg ? 5000 : 1000);
  t.dim = positive_size(c, "task.dim", t.kind == TaskKind::LogRegSynthetic ? 3 : 2);
  if (c.has("task.beta_true")) {
    t.beta_true = c.get_doubles("task.beta_true");
    if (t.beta_true.size() != t.dim)
      throw ConfigError(c.source() + ": task.beta_true must have task.dim entries");
  } else {
    t.beta_true = default_beta(t.dim);
  }
  t.noise_std = c.get_double("task.noise_std", 1.0);
  t.prior_var = c.get_double("task.prior_var", 10.0);
  t.feature_var = c.get_double("task.feature_var", 20.0);
  t.n_eval = positive_size(c, "task.n_eval", 1000);
  if (c.has("task.data_seed")) t.data_seed = c.get_u64("task.data_seed", 0);
  t.csv_path = c.get_string("task.csv_path", "");
  t.label_column = c.get_string("task.label_column", "0");
  t.positive_label = c.get_string("task.positive_label", "");
  if (c.has("task.ignore_columns")) t.ignore_columns = c.get_strings("task.ignore_columns");
  t.standardize = c.get_bool("task.standardize", true);
  t.curvature_min = c.get_double("task.curvature_min", 1.0);
  t.curvature_max = c.get_double("task.curvature_max", 3.0);
  if (!(t.noise_std > 0.0)) throw ConfigError(c.source() + ": task.noise_std must be positive");
  if (!(t.prior_var > 0.0)) throw ConfigError(c.source() + ": task.prior_var must be positive");
  if (!(t.curvature_min > 0.0 && t.curvature_max >= t.curvature_min))
    throw ConfigError(c.source() + ": need 0 < task.curvature_min <= task.curvature_max");
  if (t.kind == TaskKind::LogRegCsv) {
    if (t.csv_path.empty()) throw ConfigError(c.source() + ": task.csv_path is required for logreg-csv");
    if (!fs::exists(t.csv_path)) throw ConfigError(c.source() + ": task.csv_path '" + t.csv_path + "' does not exist");
  }

  NetworkSpec& n = e.network;
  n.topology = parse_topology_kind(c.get_string("network.topology", "ring"));
  n.agents = positive_size(c, "network.agents", 6);
  n.h = c.get_double("network.h", 0.5);
  n.delta = c.get_optional_double("network.delta");
  n.adjacency_file = c.get_string("network.adjacency_file", "");
  if (n.topology == TopologyKind::Custom) {
    if (n.adjacency_file.empty()) throw ConfigError(c.source() + ": custom topology needs network.adjacency_file");
    if (!fs::exists(n.adjacency_file))
      throw ConfigError(c.source() + ": network.adjacency_file '" + n.adjacency_file + "' does not exist");
  }

  SamplerSpec& s = e.sampler;
  if (c.has("sampler.algorithms")) {
    s.algorithms.clear();
    for (const auto& a : c.get_strings("sampler.algorithms")) s.algorithms.push_back(parse_algorithm(a));
  } else {
    s.algorithms = {parse_algorithm(c.get_string("sampler.algorithm", "gen_extra_sgld"))};
  }
  if (s.algorithms.empty()) throw ConfigError(c.source() + ": no algorithm given");
  s.eta = c.get_double("sampler.eta", 0.01);
  if (!(s.eta > 0.0)) throw ConfigError(c.source() + ": sampler.eta must be positive");
  if (c.has("sampler.batch") && lower(c.get_string("sampler.batch")) != "full")
    s.batch = positive_size(c, "sampler.batch", 1);
  s.K = c.get_int("sampler.k", 200);
  if (s.K < 0) throw ConfigError(c.source() + ": sampler.K must be non-negative");
  s.temperature = static_cast<int>(c.get_int("sampler.temperature", 1));
  if (s.temperature != 0 && s.temperature != 1) throw ConfigError(c.source() + ": sampler.temperature must be 0 or 1");
  {
    const std::string m = lower(c.get_string("sampler.b_mode", "w_tilde_over_eta"));
    if (m == "w_tilde_over_eta") s.b_mode = BMatrix::Kind::WTildeOverEta;
    else if (m == "scaled_identity") s.b_mode = BMatrix::Kind::ScaledIdentity;
    else throw ConfigError(c.source() + ": sampler.b_mode must be w_tilde_over_eta or scaled_identity");
  }
  s.b_scale = c.get_double("sampler.b_scale", 1.0);
  {
    const std::string m = lower(c.get_string("sampler.init", "zero"));
    if (m == "zero") s.init = InitKind::Zero;
    else if (m == "prior") s.init = InitKind::Prior;
    else throw ConfigError(c.source() + ": sampler.init must be zero or prior");
  }
  s.init_var = c.get_double("sampler.init_var", t.prior_var);

  RunSpec& r = e.run;
  r.replicas = positive_size(c, "run.replicas", 1);
  r.record_every = static_cast<std::int64_t>(positive_size(c, "run.record_every", 1));
  r.seed = c.get_u64("run.seed", 0);
  r.out_dir = c.get_string("run.out", "out");
  {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    r.threads = positive_size(c, "run.threads", hw);
  }
  r.allow_assumption_violations = c.get_bool("run.allow_assumption_violations", false);
  r.write_trajectories = c.get_bool("run.write_trajectories", true);

  if (c.has("sweep.h_grid")) {
    e.h_grid = c.get_doubles("sweep.h_grid");
  } else {
    const std::size_t cnt = positive_size(c, "sweep.h_count", 5);
    const double lo = c.get_double("sweep.h_min", 0.001);
    const double hi = c.get_double("sweep.h_max", 0.5);
    for (std::size_t i = 0; i < cnt; ++i)
      e.h_grid.push_back(cnt == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cnt - 1));
  }
  for (double h : e.h_grid)
    if (!(h > 0.0 && h <= 0.5)) throw ConfigError(c.source() + ": sweep grid value " + std::to_string(h) + " outside (0, 1/2]");

  TheorySpec& th = e.theory;
  th.sigma2 = c.get_optional_double("theory.sigma2");
  th.delta2 = c.get_optional_double("theory.delta2");
  th.w2_init = c.get_optional_double("theory.w2_init");
  th.auto_shrink = c.get_bool("theory.auto_shrink", false);
  th.noise_draws = positive_size(c, "theory.noise_draws", 2000);
  return e;
}

Config load_config_source(const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest '" + path + "'");
    json j;
    try {
      in >> j;
    } catch (const json::exception& ex) {
      throw ConfigError(path + ": invalid JSON: " + ex.what());
    }
    if (!j.contains("config") || !j["config"].is_object()) throw ConfigError(path + ": no \"config\" object");
    std::ostringstream text;
    std::string section;
    for (const auto& [key, value] : j["config"].items()) {
      const auto dot = key.find('.');
      if (dot == std::string::npos) throw ConfigError(path + ": malformed config key '" + key + "'");
      if (key.substr(0, dot) != section) {
        section = key.substr(0, dot);
        text << "[" << section << "]\n";
      }
      text << key.substr(dot + 1) << " = " << value.get<std::string>() << "\n";
    }
    return Config::parse(text.str(), path);
  }
  return Config::load(path);
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_config(load_config_source(path));
}

// ---------------------------------------------------------------------------
// Construction

namespace {

std::uint64_t data_seed(const ExperimentConfig& cfg) {
  return cfg.task.data_seed ? *cfg.task.data_seed : hash_seed({cfg.run.seed, hash_tag("data")});
}

}  // namespace

Problem build_problem(const ExperimentConfig& cfg) {
  const TaskSpec& t = cfg.task;
  const std::size_t n_agents = cfg.network.agents;
  const std::uint64_t ds = data_seed(cfg);
  Rng gen(ds);
  Rng part(hash_seed({ds, hash_tag("partition")}));
  Problem p;
  p.kind = t.kind;
  switch (t.kind) {
    case TaskKind::LinReg: {
      const Dataset all = gen_linreg_data(t.n_points, t.dim, t.beta_true, t.noise_std, gen);
      auto task = std::make_unique<LinRegTask>(partition_data(all, n_agents, part), t.noise_std, t.prior_var);
      p.posterior = task->posterior();
      p.x_star = p.posterior->mean;
      p.oracle = std::move(task);
      break;
    }
    case TaskKind::LogRegSynthetic: {
      const Dataset all = gen_logreg_data(t.n_points, t.dim, t.beta_true, gen, t.feature_var);
      Rng eval_rng(hash_seed({ds, hash_tag("eval")}));
      p.eval_set = gen_logreg_data(t.n_eval, t.dim, t.beta_true, eval_rng, t.feature_var);
      p.oracle = std::make_unique<LogRegTask>(partition_data(all, n_agents, part), t.prior_var);
      p.x_star = find_minimizer(*p.oracle);
      break;
    }
    case TaskKind::LogRegCsv: {
      CsvOptions opts;
      opts.label_column = t.label_column;
      opts.positive_label = t.positive_label;
      opts.standardize = t.standardize;
      for (const auto& c : t.ignore_columns) opts.ignore_columns.emplace_back(c);
      const Dataset all = load_csv_dataset(t.csv_path, opts);
      p.eval_set = all;
      p.oracle = std::make_unique<LogRegTask>(partition_data(all, n_agents, part), t.prior_var);
      p.x_star = find_minimizer(*p.oracle);
      break;
    }
    case TaskKind::Quadratic: {
      Vector a(n_agents);
      std::vector<Vector> centers(n_agents, Vector(t.dim));
      for (std::size_t i = 0; i < n_agents; ++i) {
        a[i] = t.curvature_min + (t.curvature_max - t.curvature_min) * gen.uniform();
        gen.fill_normal(centers[i]);
      }
      auto task = std::make_unique<QuadraticTask>(std::move(a), std::move(centers));
      p.x_star = task->minimizer();
      p.oracle = std::move(task);
      break;
    }
  }
  return p;
}

MixingSet build_network(const ExperimentConfig& cfg, double h, HRange range) {
  const NetworkSpec& n = cfg.network;
  const Topology topo = n.topology == TopologyKind::Custom ? Topology::read_adjacency_file(n.adjacency_file)
                                                           : Topology::make(n.topology, n.agents);
  if (topo.n_agents() != n.agents)
    throw ConfigError("adjacency file has " + std::to_string(topo.n_agents()) + " agents, network.agents is " +
                      std::to_string(n.agents));
  return build_mixing_set(topo, h, n.delta, hash_seed({cfg.run.seed, hash_tag("network")}), range);
}

MixingSet build_network(const ExperimentConfig& cfg, HRange range) {
  return build_network(cfg, cfg.network.h, range);
}

SamplerConfig sampler_config(const ExperimentConfig& cfg, Algorithm alg, std::uint64_t seed) {
  SamplerConfig s;
  s.algorithm = alg;
  s.eta = cfg.sampler.eta;
  s.batch = cfg.sampler.batch;
  s.temperature = cfg.sampler.temperature;
  s.b_matrix = cfg.sampler.b_mode == BMatrix::Kind::ScaledIdentity ? BMatrix::scaled_identity(cfg.sampler.b_scale)
                                                                    : BMatrix::w_tilde_over_eta();
  s.seed = seed;
  s.K = cfg.sampler.K;
  s.init = cfg.sampler.init;
  s.init_var = cfg.sampler.init_var;
  return s;
}

std::uint64_t replica_seed(std::uint64_t master, std::size_t r) { return hash_seed({master, r}); }

std::uint64_t compare_seed(std::uint64_t master, Algorithm alg, std::size_t r) {
  return hash_seed({master, hash_tag(to_string(alg)), r});
}

ReplicaSet run_replicas(const SamplerConfig& base, const MixingSet& mixing,
                        const GradientOracle& oracle, const std::vector<std::uint64_t>& seeds,
                        std::int64_t record_every, std::size_t threads) {
  const std::size_t R = seeds.size();
  ReplicaSet rs;
  rs.algorithm = base.algorithm;
  rs.seeds = seeds;
  rs.records.resize(R);
  std::vector<std::exception_ptr> errors(R);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < R; r = next++) {
      try {
        SamplerConfig cfg = base;
        cfg.seed = seeds[r];
        rs.records[r] = run_chain(cfg, mixing, oracle, record_every);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const std::size_t nt = std::max<std::size_t>(1, std::min(threads, R));
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (std::size_t i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t r = 0; r < R; ++r) {
    if (!errors[r]) continue;
    try {
      std::rethrow_exception(errors[r]);
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.iteration(), e.max_abs(), "replica " + std::to_string(r) + ": " + e.what());
    }
  }
  return rs;
}

// ---------------------------------------------------------------------------
// Metrics

PrimaryMetric primary_metric(TaskKind kind, std::size_t replicas) {
  switch (kind) {
    case TaskKind::LinReg:
      return replicas >= 2 ? PrimaryMetric{"w2_mean", true} : PrimaryMetric{"consensus", true};
    case TaskKind::LogRegSynthetic:
    case TaskKind::LogRegCsv:
      return {"accuracy_mean", false};
    case TaskKind::Quadratic:
      return {"dist_max", true};
  }
  return {"consensus", true};
}

std::vector<MetricSeries> compute_metrics(const Problem& problem, const ReplicaSet& rs) {
  std::vector<MetricSeries> out;
  if (rs.records.empty()) return out;
  const auto& iters = rs.records.front().iterations;
  const std::size_t T = iters.size();
  const std::size_t rows = rs.records.front().x.front().rows();
  const double R = static_cast<double>(rs.records.size());

  auto averaged = [&](std::string label, auto&& per_record) {
    MetricSeries s{std::move(label), iters, std::vector<double>(T, 0.0)};
    for (const auto& rec : rs.records)
      for (std::size_t t = 0; t < T; ++t) s.values[t] += per_record(rec, t) / R;
    return s;
  };

  if (problem.posterior && rs.records.size() >= 2) {
    if (rows > 1)
      for (std::size_t i = 0; i < rows; ++i)
        out.push_back(w2_series(rs.records, *problem.posterior, BlockSelector::of_agent(i)));
    MetricSeries m = w2_series(rs.records, *problem.posterior, BlockSelector::mean());
    m.label = "w2_mean";
    for (auto& s : out)
      if (s.label.rfind("agent_", 0) == 0) s.label = "w2_" + s.label;
    out.push_back(std::move(m));
  }

  if (problem.eval_set) {
    const Dataset& ev = *problem.eval_set;
    if (rows > 1) {
      for (std::size_t i = 0; i < rows; ++i)
        out.push_back(averaged("accuracy_agent_" + std::to_string(i), [&](const TrajectoryRecord& rec, std::size_t t) {
          return accuracy(rec.x[t].row(i), ev);
        }));
      MetricSeries mean_acc{"accuracy_mean", iters, std::vector<double>(T, 0.0)};
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t t = 0; t < T; ++t) mean_acc.values[t] += out[out.size() - rows + i].values[t] / static_cast<double>(rows);
      out.push_back(std::move(mean_acc));
    }
    out.push_back(averaged("accuracy_xbar", [&](const TrajectoryRecord& rec, std::size_t t) {
      return accuracy(rec.mean[t], ev);
    }));
    if (rows == 1) {
      MetricSeries alias = out.back();
      alias.label = "accuracy_mean";
      out.push_back(std::move(alias));
    }
  }

  if (problem.kind == TaskKind::Quadratic) {
    const Vector& xs = problem.x_star;
    auto dist = [&](std::span<const double> x) {
      double s = 0.0;
      for (std::size_t c = 0; c < xs.size(); ++c) s += (x[c] - xs[c]) * (x[c] - xs[c]);
      return std::sqrt(s);
    };
    out.push_back(averaged("dist_max", [&](const TrajectoryRecord& rec, std::size_t t) {
      double m = 0.0;
      for (std::size_t i = 0; i < rec.x[t].rows(); ++i) m = std::max(m, dist(rec.x[t].row(i)));
      return m;
    }));
    out.push_back(averaged("dist_xbar", [&](const TrajectoryRecord& rec, std::size_t t) {
      return dist(rec.mean[t]);
    }));
  }

  out.push_back(averaged("consensus", [&](const TrajectoryRecord& rec, std::size_t t) {
    return consensus_error(rec.x[t]);
  }));
  return out;
}

namespace {

const MetricSeries& find_series(const std::vector<MetricSeries>& all, const std::string& label) {
  for (const auto& s : all)
    if (s.label == label) return s;
  throw Error("metric series '" + label + "' not computed");
}

double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

ProblemParams problem_params(const ExperimentConfig& cfg, const Problem& problem, const MixingSet& mixing) {
  const GradientOracle& o = problem.task();
  ProblemParams p;
  p.mu = o.mu();
  p.L = o.L();
  p.d = o.dim();
  p.N = o.n_agents();
  p.eta = cfg.sampler.eta;
  p.h = mixing.h;
  p.spectral = mixing.spectral;
  p.delta2 = cfg.theory.delta2;
  if (cfg.sampler.b_mode == BMatrix::Kind::WTildeOverEta) {
    p.b_is_wtilde_over_eta = true;
    p.norm_B = spectral_norm(mixing.w_tilde) / p.eta;
  } else {
    p.b_is_wtilde_over_eta = false;
    p.norm_B = std::abs(cfg.sampler.b_scale);
  }
  if (cfg.theory.sigma2) {
    p.sigma2 = *cfg.theory.sigma2;
  } else if (cfg.sampler.batch) {
    const Vector per_agent = estimate_grad_noise(o, problem.x_star, *cfg.sampler.batch, cfg.theory.noise_draws,
                                                 hash_seed({cfg.run.seed, hash_tag("sigma2")}));
    p.sigma2 = *std::max_element(per_agent.begin(), per_agent.end());
  }
  p.grad_at_min_sq = stacked_grad_norm_sq(o, problem.x_star);

  const double N = static_cast<double>(p.N), d = static_cast<double>(p.d);
  const double xs2 = sq_norm(problem.x_star);
  if (cfg.sampler.init == InitKind::Zero) {
    p.init = {0.0, 0.0, xs2, p.grad_at_min_sq};
  } else {
    const double s = cfg.sampler.init_var;
    p.init = {N * d * s, (N - 1.0) * d * s, xs2 + d * s / N, p.grad_at_min_sq};
  }

  if (cfg.theory.w2_init) {
    p.w2_init = *cfg.theory.w2_init;
  } else if (problem.posterior) {
    const double var0 = cfg.sampler.init == InitKind::Zero ? 0.0 : cfg.sampler.init_var / N;
    const GaussianDist init_law{Vector(p.d, 0.0), var0 * SymMatrix::identity(p.d)};
    p.w2_init = w2_gaussian(init_law, *problem.posterior);
  } else {
    throw ConfigError("theory.w2_init is required when the target is not Gaussian");
  }
  return p;
}

// ---------------------------------------------------------------------------
// Output

namespace {

class CsvOut {
 public:
  explicit CsvOut(const std::string& path) : path_(path), out_(path) {
    if (!out_) throw Error("cannot write '" + path + "'");
    out_ << std::setprecision(17);
  }
  std::ostream& os() { return out_; }
  void finish() {
    out_.flush();
    if (!out_) throw Error("write failed for '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

}  // namespace

std::size_t write_metrics_csv(const std::string& path, const std::vector<MetricSeries>& series) {
  CsvOut f(path);
  f.os() << "k,label,value\n";
  std::size_t rows = 0;
  for (const auto& s : series)
    for (std::size_t t = 0; t < s.size(); ++t, ++rows) f.os() << s.iterations[t] << "," << s.label << "," << s.values[t] << "\n";
  f.finish();
  return rows;
}

std::size_t write_trajectory_csv(const std::string& path, const ReplicaSet& rs) {
  CsvOut f(path);
  std::size_t d = 0;
  if (!rs.records.empty() && !rs.records.front().x.empty()) d = rs.records.front().x.front().cols();
  f.os() << "replica,k,agent";
  for (std::size_t c = 0; c < d; ++c) f.os() << ",coord_" << c;
  f.os() << "\n";
  std::size_t rows = 0;
  for (std::size_t r = 0; r < rs.records.size(); ++r) {
    const auto& rec = rs.records[r];
    for (std::size_t t = 0; t < rec.size(); ++t)
      for (std::size_t i = 0; i < rec.x[t].rows(); ++i, ++rows) {
        f.os() << r << "," << rec.iterations[t] << "," << i;
        for (double v : rec.x[t].row(i)) f.os() << "," << v;
        f.os() << "\n";
      }
  }
  f.finish();
  return rows;
}

void write_manifest(const std::string& dir, const ManifestInfo& info) {
  json j;
  j["tool"] = "exlg";
  j["version"] = kVersion;
  j["command"] = info.command;
  json cfg = json::object();
  if (info.cfg)
    for (const auto& [k, e] : info.cfg->raw.entries()) cfg[k] = e.value;
  j["config"] = cfg;
  if (info.cfg) j["master_seed"] = info.cfg->run.seed;
  json seeds = json::object();
  for (const auto& [alg, s] : info.seeds) seeds[alg] = s;
  j["replica_seeds"] = seeds;
  json files = json::array();
  for (const auto& f : info.files) files.push_back({{"name", f.name}, {"rows", f.rows}});
  j["files"] = files;
  j["wall_clock_seconds"] = info.wall_seconds;
  j["threads"] = info.threads;

  const std::string final_path = join(dir, "manifest.json");
  const std::string tmp = final_path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out << j.dump(2) << "\n";
    if (!out) throw Error("write failed for '" + tmp + "'");
  }
  fs::rename(tmp, final_path);
}

// ---------------------------------------------------------------------------
// Commands

namespace {

using Clock = std::chrono::steady_clock;

bool all_decoupled(const std::vector<Algorithm>& algs) {
  return std::all_of(algs.begin(), algs.end(), [](Algorithm a) {
    return a == Algorithm::DE_SGLD || a == Algorithm::ULA || a == Algorithm::REFERENCE_CHAIN;
  });
}

HRange range_for(const ExperimentConfig& cfg) {
  return all_decoupled(cfg.sampler.algorithms) ? HRange::AllowZero : HRange::Strict;
}

// Throws AssumptionError naming the first failed network check unless overridden.
void enforce_assumptions(const ExperimentConfig& cfg, const MixingSet& ms, std::ostream& out) {
  const ValidationReport rep = validate_assumptions(ms);
  if (rep.all_passed()) return;
  const AssumptionCheck* f = rep.first_failure();
  if (cfg.run.allow_assumption_violations) {
    out << "warning: network assumption '" << f->name << "' fails (" << f->detail
        << "); continuing because run.allow_assumption_violations is set\n";
    return;
  }
  throw AssumptionError("network assumption '" + f->name + "' fails (" + f->detail +
                        "); set run.allow_assumption_violations = true to run anyway");
}

std::vector<std::uint64_t> seeds_for_run(const ExperimentConfig& cfg) {
  std::vector<std::uint64_t> s(cfg.run.replicas);
  for (std::size_t r = 0; r < s.size(); ++r) s[r] = replica_seed(cfg.run.seed, r);
  return s;
}

std::string with_prefix(const std::string& prefix, const std::string& label) {
  return prefix.empty() ? label : prefix + "/" + label;
}

}  // namespace

int cmd_validate(const ExperimentConfig& cfg, std::ostream& out) {
  const MixingSet ms = build_network(cfg, HRange::Unchecked);
  const ValidationReport rep = validate_assumptions(ms);
  out << "network: " << to_string(ms.kind) << ", N = " << ms.n_agents() << ", h = " << ms.h
      << ", delta = " << ms.delta << "\n";
  out << rep.to_string();

  // The stepsize certificate is informational here; `theory` enforces it.
  try {
    const Problem problem = build_problem(cfg);
    ProblemParams p = problem_params(cfg, problem, ms);
    out << "\nmu = " << p.mu << ", L = " << p.L << "\n";
    out << validate_stepsize(p).to_string();
  } catch (const ConfigError& e) {
    out << "\nstepsize certificate skipped: " << e.what() << "\n";
  }

  if (rep.all_passed()) {
    out << "\nassumptions: PASS\n";
    return 0;
  }
  const AssumptionCheck* f = rep.first_failure();
  out << "\nassumptions: FAIL (" << f->name << ")\n";
  return cfg.run.allow_assumption_violations ? 0 : 3;
}

int cmd_run(const ExperimentConfig& cfg, std::ostream& out) {
  const auto t0 = Clock::now();
  const Problem problem = build_problem(cfg);
  const MixingSet ms = build_network(cfg, range_for(cfg));
  enforce_assumptions(cfg, ms, out);
  ensure_dir(cfg.run.out_dir);

  ManifestInfo info;
  info.command = "run";
  info.cfg = &cfg;
  info.threads = cfg.run.threads;
  const auto seeds = seeds_for_run(cfg);
  std::vector<MetricSeries> all;
  const bool multi = cfg.sampler.algorithms.size() > 1;
  for (Algorithm alg : cfg.sampler.algorithms) {
    const std::string name(to_string(alg));
    const ReplicaSet rs = run_replicas(sampler_config(cfg, alg, 0), ms, problem.task(), seeds,
                                       cfg.run.record_every, cfg.run.threads);
    info.seeds.emplace_back(name, seeds);
    auto series = compute_metrics(problem, rs);
    for (auto& s : series) {
      if (multi) s.label = with_prefix(name, s.label);
      all.push_back(std::move(s));
    }
    if (cfg.run.write_trajectories) {
      const std::string fname = multi ? "trajectory_" + name + ".csv" : "trajectory.csv";
      info.files.push_back({fname, write_trajectory_csv(join(cfg.run.out_dir, fname), rs)});
    }
  }
  info.files.push_back({"metrics.csv", write_metrics_csv(join(cfg.run.out_dir, "metrics.csv"), all)});
  info.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  write_manifest(cfg.run.out_dir, info);
  out << "wrote " << info.files.size() << " files to " << cfg.run.out_dir << "\n";
  return 0;
}

int cmd_compare(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.sampler.algorithms.size() < 2) throw ConfigError("compare needs at least two algorithms in sampler.algorithms");
  const auto t0 = Clock::now();
  const Problem problem = build_problem(cfg);
  const MixingSet ms = build_network(cfg, range_for(cfg));
  enforce_assumptions(cfg, ms, out);
  ensure_dir(cfg.run.out_dir);

  const PrimaryMetric pm = primary_metric(cfg.task.kind, cfg.run.replicas);
  ManifestInfo info;
  info.command = "compare";
  info.cfg = &cfg;
  info.threads = cfg.run.threads;
  std::vector<MetricSeries> all;
  std::vector<std::pair<std::string, double>> plateaus;
  std::vector<std::string> used;
  for (Algorithm alg : cfg.sampler.algorithms) {
    std::string label(to_string(alg));
    const std::size_t dup = static_cast<std::size_t>(std::count(used.begin(), used.end(), std::string(to_string(alg))));
    used.emplace_back(to_string(alg));
    if (dup > 0) label += "#" + std::to_string(dup + 1);

    std::vector<std::uint64_t> seeds(cfg.run.replicas);
    for (std::size_t r = 0; r < seeds.size(); ++r) seeds[r] = compare_seed(cfg.run.seed, alg, r);
    const ReplicaSet rs = run_replicas(sampler_config(cfg, alg, 0), ms, problem.task(), seeds,
                                       cfg.run.record_every, cfg.run.threads);
    info.seeds.emplace_back(label, seeds);
    auto series = compute_metrics(problem, rs);
    plateaus.emplace_back(label, find_series(series, pm.label).tail_mean(0.1));
    for (auto& s : series) {
      s.label = with_prefix(label, s.label);
      all.push_back(std::move(s));
    }
  }
  info.files.push_back({"metrics.csv", write_metrics_csv(join(cfg.run.out_dir, "metrics.csv"), all)});
  {
    CsvOut f(join(cfg.run.out_dir, "plateau.csv"));
    f.os() << "algorithm,metric,plateau\n";
    for (const auto& [label, v] : plateaus) f.os() << label << "," << pm.label << "," << v << "\n";
    f.finish();
    info.files.push_back({"plateau.csv", plateaus.size()});
  }
  info.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  write_manifest(cfg.run.out_dir, info);
  for (const auto& [label, v] : plateaus) out << label << "  plateau(" << pm.label << ") = " << v << "\n";
  return 0;
}

int cmd_sweep_h(const ExperimentConfig& cfg, std::ostream& out) {
  const auto t0 = Clock::now();
  const Problem problem = build_problem(cfg);
  ensure_dir(cfg.run.out_dir);
  // h only enters through W̃, so tune the first algorithm that mixes with it.
  const auto& algs = cfg.sampler.algorithms;
  const auto it = std::find_if(algs.begin(), algs.end(), [](Algorithm a) { return !all_decoupled({a}); });
  if (it == algs.end()) throw ConfigError("sweep-h needs extra_sgld or gen_extra_sgld in sampler.algorithms");
  const Algorithm alg = *it;
  const PrimaryMetric pm = primary_metric(cfg.task.kind, cfg.run.replicas);
  const auto seeds = seeds_for_run(cfg);
  out << "tuning h for " << to_string(alg) << "\n";

  ManifestInfo info;
  info.command = "sweep-h";
  info.cfg = &cfg;
  info.threads = cfg.run.threads;
  info.seeds.emplace_back(std::string(to_string(alg)), seeds);
  std::vector<double> plateau;
  for (std::size_t i = 0; i < cfg.h_grid.size(); ++i) {
    const MixingSet ms = build_network(cfg, cfg.h_grid[i], HRange::Strict);
    enforce_assumptions(cfg, ms, out);
    const ReplicaSet rs = run_replicas(sampler_config(cfg, alg, 0), ms, problem.task(), seeds,
                                       cfg.run.record_every, cfg.run.threads);
    const auto series = compute_metrics(problem, rs);
    plateau.push_back(find_series(series, pm.label).tail_mean(0.1));
    const std::string sub = "h_" + std::to_string(i);
    ensure_dir(join(cfg.run.out_dir, sub));
    info.files.push_back({sub + "/metrics.csv", write_metrics_csv(join(join(cfg.run.out_dir, sub), "metrics.csv"), series)});
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < plateau.size(); ++i)
    if (pm.lower_is_better ? plateau[i] < plateau[best] : plateau[i] > plateau[best]) best = i;
  {
    CsvOut f(join(cfg.run.out_dir, "sweep.csv"));
    f.os() << "h,metric,plateau,best\n";
    for (std::size_t i = 0; i < plateau.size(); ++i)
      f.os() << cfg.h_grid[i] << "," << pm.label << "," << plateau[i] << "," << (i == best ? 1 : 0) << "\n";
    f.finish();
    info.files.push_back({"sweep.csv", plateau.size()});
  }
  info.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  write_manifest(cfg.run.out_dir, info);
  for (std::size_t i = 0; i < plateau.size(); ++i)
    out << "h = " << cfg.h_grid[i] << "  plateau(" << pm.label << ") = " << plateau[i] << (i == best ? "  <- best" : "") << "\n";
  return 0;
}

int cmd_theory(const ExperimentConfig& cfg, std::ostream& out) {
  const auto t0 = Clock::now();
  const Problem problem = build_problem(cfg);
  const MixingSet ms = build_network(cfg, HRange::Strict);
  ProblemParams p = problem_params(cfg, problem, ms);
  ensure_dir(cfg.run.out_dir);
  ManifestInfo info;
  info.command = "theory";
  info.cfg = &cfg;

  if (cfg.theory.auto_shrink) {
    const auto shrunk = find_admissible(p);
    if (!shrunk) {
      out << validate_stepsize(p).to_string();
      out << "no admissible (h, eta) found by halving eta\n";
      return 3;
    }
    p = *shrunk;
    out << "auto_shrink: eta = " << p.eta << ", h = " << p.h << "\n";
  }

  const CertReport rep = validate_stepsize(p);
  out << "mu = " << p.mu << ", L = " << p.L << ", sigma2 = " << p.sigma2 << ", |grad F(x*)|^2 = " << p.grad_at_min_sq
      << "\n";
  out << rep.to_string();
  {
    std::ofstream f(join(cfg.run.out_dir, "admissibility.txt"));
    f << rep.to_string();
  }
  if (!rep.passed) {
    const Clause* c = rep.first_failure();
    out << "inadmissible: " << (c ? c->name : rep.spectral_note) << "\n";
    return 3;
  }

  const TheoryConstants tc = compute_constants(p);
  {
    CsvOut f(join(cfg.run.out_dir, "constants.csv"));
    f.os() << "name,value\n";
    f.os() << "eta," << p.eta << "\nh," << p.h << "\nmu," << p.mu << "\nL," << p.L << "\nnorm_B," << p.norm_B << "\n";
    for (const auto& [name, v] : tc.named()) f.os() << name << "," << v << "\n";
    f.finish();
    info.files.push_back({"constants.csv", tc.named().size() + 5});
  }

  std::size_t rows = 0;
  {
    CsvOut f(join(cfg.run.out_dir, "bound_curve.csv"));
    f.os() << "k,bound_w2_mean,bound_w2_agents\n";
    const std::int64_t k0 = first_valid_k(tc);
    for (std::int64_t k = 0; k <= cfg.sampler.K; k += cfg.run.record_every) {
      if (k < k0) continue;
      f.os() << k << "," << bound_w2_mean(p, tc, k) << "," << bound_w2_agents(p, tc, k) << "\n";
      ++rows;
    }
    if (cfg.sampler.K % cfg.run.record_every != 0 && cfg.sampler.K >= k0) {
      f.os() << cfg.sampler.K << "," << bound_w2_mean(p, tc, cfg.sampler.K) << ","
             << bound_w2_agents(p, tc, cfg.sampler.K) << "\n";
      ++rows;
    }
    f.finish();
    if (rows == 0) out << "note: sampler.K = " << cfg.sampler.K << " is below K0 = " << tc.K0 << "; bound curve is empty\n";
  }
  info.files.push_back({"bound_curve.csv", rows});
  info.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  write_manifest(cfg.run.out_dir, info);
  out << "K0 = " << tc.K0 << ", floor sqrt(eta)*E1 = " << std::sqrt(p.eta) * tc.script_E1 << "\n";
  return 0;
}

int cmd_gen_data(const ExperimentConfig& cfg, std::ostream& out) {
  const auto t0 = Clock::now();
  const Problem problem = build_problem(cfg);
  ensure_dir(cfg.run.out_dir);
  ManifestInfo info;
  info.command = "gen-data";
  info.cfg = &cfg;

  const GradientOracle& o = problem.task();
  auto shards_of = [&]() -> const std::vector<Dataset>* {
    if (auto* t = dynamic_cast<const LinRegTask*>(&o)) return &t->shards();
    if (auto* t = dynamic_cast<const LogRegTask*>(&o)) return &t->shards();
    return nullptr;
  };
  if (const auto* shards = shards_of()) {
    CsvOut f(join(cfg.run.out_dir, "data.csv"));
    f.os() << "agent";
    for (std::size_t c = 0; c < o.dim(); ++c) f.os() << ",x_" << c;
    f.os() << ",y\n";
    std::size_t rows = 0;
    for (std::size_t i = 0; i < shards->size(); ++i)
      for (std::size_t j = 0; j < (*shards)[i].size(); ++j, ++rows) {
        f.os() << i;
        for (double v : (*shards)[i].x.row(j)) f.os() << "," << v;
        f.os() << "," << (*shards)[i].y[j] << "\n";
      }
    f.finish();
    info.files.push_back({"data.csv", rows});
  }
  if (problem.eval_set) {
    write_csv_dataset(join(cfg.run.out_dir, "eval.csv"), *problem.eval_set);
    info.files.push_back({"eval.csv", problem.eval_set->size()});
  }
  if (problem.posterior) {
    CsvOut f(join(cfg.run.out_dir, "posterior.csv"));
    f.os() << "name,value\n";
    const auto& g = *problem.posterior;
    for (std::size_t c = 0; c < g.dim(); ++c) f.os() << "mean_" << c << "," << g.mean[c] << "\n";
    for (std::size_t a = 0; a < g.dim(); ++a)
      for (std::size_t b = 0; b < g.dim(); ++b) f.os() << "cov_" << a << "_" << b << "," << g.cov(a, b) << "\n";
    f.finish();
    info.files.push_back({"posterior.csv", g.dim() + g.dim() * g.dim()});
  }
  {
    CsvOut f(join(cfg.run.out_dir, "task.csv"));
    f.os() << "name,value\nmu," << o.mu() << "\nL," << o.L() << "\n";
    for (std::size_t c = 0; c < problem.x_star.size(); ++c) f.os() << "x_star_" << c << "," << problem.x_star[c] << "\n";
    f.finish();
    info.files.push_back({"task.csv", 2 + problem.x_star.size()});
  }
  info.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  write_manifest(cfg.run.out_dir, info);
  out << "wrote " << info.files.size() << " files to " << cfg.run.out_dir << "\n";
  return 0;
}

}  // namespace exlg
