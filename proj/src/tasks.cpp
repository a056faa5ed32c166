#include "exlg/tasks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "exlg/error.hpp"

namespace exlg {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

std::size_t common_dim(const std::vector<Dataset>& shards, const char* who) {
  if (shards.empty()) throw ConfigError(std::string(who) + ": needs at least one agent");
  const std::size_t d = shards.front().dim();
  for (const auto& s : shards) {
    if (s.dim() != d) throw ConfigError(std::string(who) + ": shards disagree on dimension");
    if (s.x.rows() != s.y.size()) throw ConfigError(std::string(who) + ": feature/label count mismatch");
    for (double v : s.x.data())
      if (!std::isfinite(v)) throw ConfigError(std::string(who) + ": non-finite feature");
    for (double v : s.y)
      if (!std::isfinite(v)) throw ConfigError(std::string(who) + ": non-finite target");
  }
  if (d == 0) throw ConfigError(std::string(who) + ": zero-dimensional data");
  return d;
}

SymMatrix gram(const Dataset& s) {
  const std::size_t d = s.dim();
  Matrix g(d, d);
  for (std::size_t j = 0; j < s.size(); ++j) {
    auto xj = s.x.row(j);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a; b < d; ++b) g(a, b) += xj[a] * xj[b];
  }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < a; ++b) g(a, b) = g(b, a);
  return SymMatrix(g);
}

void add_prior(std::span<const double> x, double weight, std::span<double> out) {
  for (std::size_t c = 0; c < x.size(); ++c) out[c] += weight * x[c];
}

}  // namespace

// ---------------------------------------------------------------------------
// GradientOracle

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t b, Rng& rng) {
  if (b > n) throw Error("sample_without_replacement: batch larger than population");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(b);
  return idx;
}

void GradientOracle::minibatch_grad(std::size_t agent, std::span<const double> x, std::size_t b,
                                    Rng& rng, std::span<double> out) const {
  const std::size_t n = n_points(agent);
  if (b < 1 || b > n) {
    std::ostringstream os;
    os << "minibatch size " << b << " outside [1, " << n << "] for agent " << agent;
    throw ConfigError(os.str());
  }
  if (b == n) {
    full_grad(agent, x, out);
    return;
  }
  const auto batch = sample_without_replacement(n, b, rng);
  batch_grad(agent, x, batch, out);
}

void GradientOracle::stoch_grad(std::size_t agent, std::span<const double> x,
                                std::optional<std::size_t> batch, Rng& rng,
                                std::span<double> out) const {
  if (!batch || *batch >= n_points(agent)) {
    full_grad(agent, x, out);
    return;
  }
  minibatch_grad(agent, x, *batch, rng, out);
}

Vector GradientOracle::total_grad(std::span<const double> x) const {
  Vector total(dim(), 0.0);
  Vector g(dim());
  for (std::size_t i = 0; i < n_agents(); ++i) {
    full_grad(i, x, g);
    for (std::size_t c = 0; c < g.size(); ++c) total[c] += g[c];
  }
  return total;
}

// ---------------------------------------------------------------------------
// Linear regression

LinRegTask::LinRegTask(std::vector<Dataset> shards, double noise_std, double prior_var)
    : shards_(std::move(shards)),
      dim_(common_dim(shards_, "LinRegTask")),
      noise_std_(noise_std),
      prior_var_(prior_var) {
  if (!(noise_std_ > 0.0)) throw ConfigError("LinRegTask: noise_std must be positive");
  if (!(prior_var_ > 0.0)) throw ConfigError("LinRegTask: prior_var must be positive");
  const auto b = mu_L_bounds(*this);
  mu_ = b.mu;
  L_ = b.L;
}

double LinRegTask::value(std::size_t agent, std::span<const double> x) const {
  const Dataset& s = shards_.at(agent);
  const double inv2s2 = 0.5 / (noise_std_ * noise_std_);
  double v = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double r = s.y[j] - dot(x, s.x.row(j));
    v += inv2s2 * r * r;
  }
  return v + dot(x, x) / (2.0 * prior_var_ * static_cast<double>(n_agents()));
}

void LinRegTask::add_datum_grad(const Dataset& s, std::size_t j, std::span<const double> x,
                                double scale, std::span<double> out) const {
  auto xj = s.x.row(j);
  const double r = (dot(x, xj) - s.y[j]) * scale / (noise_std_ * noise_std_);
  for (std::size_t c = 0; c < dim_; ++c) out[c] += r * xj[c];
}

void LinRegTask::full_grad(std::size_t agent, std::span<const double> x, std::span<double> out) const {
  const Dataset& s = shards_.at(agent);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < s.size(); ++j) add_datum_grad(s, j, x, 1.0, out);
  add_prior(x, 1.0 / (prior_var_ * static_cast<double>(n_agents())), out);
}

void LinRegTask::batch_grad(std::size_t agent, std::span<const double> x,
                            std::span<const std::size_t> batch, std::span<double> out) const {
  const Dataset& s = shards_.at(agent);
  std::fill(out.begin(), out.end(), 0.0);
  const double scale = static_cast<double>(s.size()) / static_cast<double>(batch.size());
  for (std::size_t j : batch) add_datum_grad(s, j, x, scale, out);
  add_prior(x, 1.0 / (prior_var_ * static_cast<double>(n_agents())), out);
}

SymMatrix LinRegTask::hessian(std::size_t agent, std::span<const double>) const {
  const double prior = 1.0 / (prior_var_ * static_cast<double>(n_agents()));
  return (1.0 / (noise_std_ * noise_std_)) * gram(shards_.at(agent)) +
         prior * SymMatrix::identity(dim_);
}

GaussianDist LinRegTask::posterior() const { return linreg_posterior(concat(shards_), prior_var_, noise_std_); }

// ---------------------------------------------------------------------------
// Logistic regression

LogRegTask::LogRegTask(std::vector<Dataset> shards, double prior_var)
    : shards_(std::move(shards)), dim_(common_dim(shards_, "LogRegTask")), prior_var_(prior_var) {
  if (!(prior_var_ > 0.0)) throw ConfigError("LogRegTask: prior_var must be positive");
  for (const auto& s : shards_)
    for (double y : s.y)
      if (y != 0.0 && y != 1.0) throw ConfigError("LogRegTask: labels must be 0 or 1");
  const auto b = mu_L_bounds(*this);
  mu_ = b.mu;
  L_ = b.L;
}

double LogRegTask::value(std::size_t agent, std::span<const double> x) const {
  const Dataset& s = shards_.at(agent);
  double v = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double sj = 2.0 * s.y[j] - 1.0;
    v += softplus(-sj * dot(x, s.x.row(j)));
  }
  return v + dot(x, x) / (2.0 * static_cast<double>(n_agents()) * prior_var_);
}

void LogRegTask::add_datum_grad(const Dataset& s, std::size_t j, std::span<const double> x,
                                double scale, std::span<double> out) const {
  auto xj = s.x.row(j);
  const double sj = 2.0 * s.y[j] - 1.0;
  const double w = -sj * sigmoid(-sj * dot(x, xj)) * scale;
  for (std::size_t c = 0; c < dim_; ++c) out[c] += w * xj[c];
}

void LogRegTask::full_grad(std::size_t agent, std::span<const double> x, std::span<double> out) const {
  const Dataset& s = shards_.at(agent);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < s.size(); ++j) add_datum_grad(s, j, x, 1.0, out);
  add_prior(x, 1.0 / (static_cast<double>(n_agents()) * prior_var_), out);
}

void LogRegTask::batch_grad(std::size_t agent, std::span<const double> x,
                            std::span<const std::size_t> batch, std::span<double> out) const {
  const Dataset& s = shards_.at(agent);
  std::fill(out.begin(), out.end(), 0.0);
  const double scale = static_cast<double>(s.size()) / static_cast<double>(batch.size());
  for (std::size_t j : batch) add_datum_grad(s, j, x, scale, out);
  add_prior(x, 1.0 / (static_cast<double>(n_agents()) * prior_var_), out);
}

SymMatrix LogRegTask::hessian(std::size_t agent, std::span<const double> x) const {
  const Dataset& s = shards_.at(agent);
  Matrix h(dim_, dim_);
  for (std::size_t j = 0; j < s.size(); ++j) {
    auto xj = s.x.row(j);
    const double p = sigmoid(dot(x, xj));
    const double w = p * (1.0 - p);
    for (std::size_t a = 0; a < dim_; ++a)
      for (std::size_t b = 0; b < dim_; ++b) h(a, b) += w * xj[a] * xj[b];
  }
  const double prior = 1.0 / (static_cast<double>(n_agents()) * prior_var_);
  for (std::size_t a = 0; a < dim_; ++a) h(a, a) += prior;
  return SymMatrix(h);
}

// ---------------------------------------------------------------------------
// Quadratic

QuadraticTask::QuadraticTask(Vector curvatures, std::vector<Vector> centers)
    : a_(std::move(curvatures)), c_(std::move(centers)) {
  if (a_.empty() || a_.size() != c_.size()) throw ConfigError("QuadraticTask: bad shapes");
  dim_ = c_.front().size();
  for (const auto& c : c_)
    if (c.size() != dim_) throw ConfigError("QuadraticTask: centers disagree on dimension");
  for (double a : a_)
    if (!(a > 0.0)) throw ConfigError("QuadraticTask: curvatures must be positive");
  mu_ = *std::min_element(a_.begin(), a_.end());
  L_ = *std::max_element(a_.begin(), a_.end());
}

double QuadraticTask::value(std::size_t agent, std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t c = 0; c < dim_; ++c) {
    const double r = x[c] - c_[agent][c];
    s += r * r;
  }
  return 0.5 * a_[agent] * s;
}

void QuadraticTask::full_grad(std::size_t agent, std::span<const double> x,
                              std::span<double> out) const {
  for (std::size_t c = 0; c < dim_; ++c) out[c] = a_[agent] * (x[c] - c_[agent][c]);
}

void QuadraticTask::batch_grad(std::size_t agent, std::span<const double> x,
                               std::span<const std::size_t>, std::span<double> out) const {
  full_grad(agent, x, out);
}

SymMatrix QuadraticTask::hessian(std::size_t agent, std::span<const double>) const {
  return a_[agent] * SymMatrix::identity(dim_);
}

Vector QuadraticTask::minimizer() const {
  Vector m(dim_, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < a_.size(); ++i) {
    total += a_[i];
    for (std::size_t c = 0; c < dim_; ++c) m[c] += a_[i] * c_[i][c];
  }
  for (double& v : m) v /= total;
  return m;
}

// ---------------------------------------------------------------------------

CurvatureBounds mu_L_bounds(const LinRegTask& task) {
  const double prior = 1.0 / (task.prior_var() * static_cast<double>(task.n_agents()));
  const double inv_s2 = 1.0 / (task.noise_std() * task.noise_std());
  double mu = std::numeric_limits<double>::infinity();
  double L = 0.0;
  for (const auto& s : task.shards()) {
    const Spectrum sp = sym_eig(inv_s2 * gram(s), "agent Gram matrix");
    mu = std::min(mu, sp.eigvals.front());
    L = std::max(L, sp.eigvals.back());
  }
  return {mu + prior, L + prior};
}

CurvatureBounds mu_L_bounds(const LogRegTask& task) {
  const double prior = 1.0 / (task.prior_var() * static_cast<double>(task.n_agents()));
  double L = 0.0;
  for (const auto& s : task.shards()) L = std::max(L, 0.25 * sym_eig(gram(s), "agent Gram matrix").eigvals.back());
  return {prior, L + prior};
}

Dataset gen_linreg_data(std::size_t n_total, std::size_t d, std::span<const double> beta_true,
                        double noise_std, Rng& rng) {
  if (n_total < 1) throw ConfigError("gen_linreg_data: need at least one point");
  if (beta_true.size() != d) throw ConfigError("gen_linreg_data: beta_true has wrong dimension");
  Dataset out{Matrix(n_total, d), Vector(n_total)};
  for (std::size_t i = 0; i < n_total; ++i) {
    auto xi = out.x.row(i);
    rng.fill_normal(xi);
    out.y[i] = dot(beta_true, xi) + noise_std * rng.normal();
  }
  return out;
}

Dataset gen_logreg_data(std::size_t n_total, std::size_t d, std::span<const double> beta_true,
                        Rng& rng, double feature_var) {
  if (n_total < 1) throw ConfigError("gen_logreg_data: need at least one point");
  if (beta_true.size() != d) throw ConfigError("gen_logreg_data: beta_true has wrong dimension");
  const double sd = std::sqrt(feature_var);
  Dataset out{Matrix(n_total, d), Vector(n_total)};
  for (std::size_t i = 0; i < n_total; ++i) {
    auto xi = out.x.row(i);
    for (double& v : xi) v = sd * rng.normal();
    const double p = rng.uniform();
    out.y[i] = p <= sigmoid(dot(beta_true, xi)) ? 1.0 : 0.0;
  }
  return out;
}

GaussianDist linreg_posterior(const Dataset& all, double prior_var, double noise_std) {
  if (!(prior_var > 0.0) || !(noise_std > 0.0))
    throw ConfigError("linreg_posterior: prior_var and noise_std must be positive");
  const std::size_t d = all.dim();
  const double inv_s2 = 1.0 / (noise_std * noise_std);
  const SymMatrix precision = inv_s2 * gram(all) + (1.0 / prior_var) * SymMatrix::identity(d);
  Vector xty(d, 0.0);
  for (std::size_t j = 0; j < all.size(); ++j) {
    auto xj = all.x.row(j);
    for (std::size_t c = 0; c < d; ++c) xty[c] += inv_s2 * all.y[j] * xj[c];
  }
  return {solve_spd(precision, xty), inverse_spd(precision)};
}

std::vector<Dataset> partition_data(const Dataset& data, std::size_t n_agents, Rng& rng) {
  const std::size_t n = data.size();
  if (n_agents == 0) throw ConfigError("partition_data: zero agents");
  if (n_agents > n) throw ConfigError("partition_data: more agents than data rows");
  const std::size_t per = n / n_agents;
  if (per * n_agents != n)
    std::cerr << "warning: partition_data drops " << n - per * n_agents << " of " << n
              << " rows so that " << n_agents << " agents get " << per << " each\n";
  const auto perm = sample_without_replacement(n, n, rng);
  std::vector<Dataset> shards;
  shards.reserve(n_agents);
  for (std::size_t a = 0; a < n_agents; ++a) {
    Dataset s{Matrix(per, data.dim()), Vector(per)};
    for (std::size_t k = 0; k < per; ++k) {
      const std::size_t src = perm[a * per + k];
      std::copy_n(data.x.row(src).begin(), data.dim(), s.x.row(k).begin());
      s.y[k] = data.y[src];
    }
    shards.push_back(std::move(s));
  }
  return shards;
}

Dataset concat(std::span<const Dataset> shards) {
  std::size_t n = 0;
  const std::size_t d = shards.empty() ? 0 : shards.front().dim();
  for (const auto& s : shards) n += s.size();
  Dataset out{Matrix(n, d), Vector(n)};
  std::size_t r = 0;
  for (const auto& s : shards)
    for (std::size_t j = 0; j < s.size(); ++j, ++r) {
      std::copy_n(s.x.row(j).begin(), d, out.x.row(r).begin());
      out.y[r] = s.y[j];
    }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  const auto e = s.find_last_not_of(" \t\r\"");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  return ec == std::errc() && p == e;
}

}  // namespace

Dataset load_csv_dataset(const std::string& path, const CsvOptions& opts, CsvLoadInfo* info) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV file '" + path + "'");

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_csv(line));
  }
  if (rows.empty()) throw ConfigError("CSV file '" + path + "' is empty");

  std::vector<std::string> header;
  {
    double tmp;
    const auto& first = rows.front();
    bool is_header = false;
    for (std::size_t c = 0; c < first.size(); ++c) {
      if (parse_double(first[c], tmp)) continue;
      if (rows.size() == 1 || (c < rows[1].size() && parse_double(rows[1][c], tmp))) is_header = true;
    }
    if (is_header) {
      header = rows.front();
      rows.erase(rows.begin());
    }
  }
  if (rows.empty()) throw ConfigError("CSV file '" + path + "' has a header but no data");
  const bool had_header = !header.empty();
  // A first line narrower or wider than the data is a descriptor, not column names.
  if (had_header && header.size() != rows.front().size()) header.clear();
  const std::size_t ncols = header.empty() ? rows.front().size() : header.size();

  auto column_index = [&](const ColumnRef& ref) -> std::size_t {
    if (const auto* idx = std::get_if<std::size_t>(&ref)) {
      if (*idx >= ncols) throw ConfigError("CSV column index out of range");
      return *idx;
    }
    const std::string& name = std::get<std::string>(ref);
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      // A numeric string doubles as an index when there is no such name.
      std::size_t idx = 0;
      auto [p, ec] = std::from_chars(name.data(), name.data() + name.size(), idx);
      if (ec == std::errc() && p == name.data() + name.size() && idx < ncols) return idx;
      throw ConfigError("CSV has no column named '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t label_idx = column_index(opts.label_column);
  std::vector<bool> skip(ncols, false);
  skip[label_idx] = true;
  for (const auto& ref : opts.ignore_columns) skip[column_index(ref)] = true;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < ncols; ++c)
    if (!skip[c]) feature_cols.push_back(c);

  Dataset out{Matrix(rows.size(), feature_cols.size()), Vector(rows.size())};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = rows[r];
    const std::size_t lineno = r + (had_header ? 2 : 1);
    if (f.size() != ncols) {
      std::ostringstream os;
      os << path << ":" << lineno << ": expected " << ncols << " fields, got " << f.size();
      throw ConfigError(os.str());
    }
    double y;
    if (!opts.positive_label.empty()) {
      y = f[label_idx] == opts.positive_label ? 1.0 : 0.0;
    } else if (!parse_double(f[label_idx], y) || (y != 0.0 && y != 1.0)) {
      std::ostringstream os;
      os << path << ":" << lineno << ": label '" << f[label_idx] << "' is not 0 or 1";
      throw ConfigError(os.str());
    }
    out.y[r] = y;
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      double v;
      if (!parse_double(f[feature_cols[k]], v)) {
        std::ostringstream os;
        os << path << ":" << lineno << ": field '" << f[feature_cols[k]] << "' is not a number";
        throw ConfigError(os.str());
      }
      out.x(r, k) = v;
    }
  }

  if (opts.standardize) {
    const double n = static_cast<double>(out.size());
    for (std::size_t k = 0; k < out.dim(); ++k) {
      double mean = 0.0;
      for (std::size_t r = 0; r < out.size(); ++r) mean += out.x(r, k);
      mean /= n;
      double var = 0.0;
      for (std::size_t r = 0; r < out.size(); ++r) var += (out.x(r, k) - mean) * (out.x(r, k) - mean);
      var /= n;
      const double scale = var > 1e-24 ? 1.0 / std::sqrt(var) : 0.0;
      for (std::size_t r = 0; r < out.size(); ++r) out.x(r, k) = (out.x(r, k) - mean) * scale;
    }
  }

  if (info) *info = {out.size(), out.dim(), had_header};
  return out;
}

void write_csv_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write CSV file '" + path + "'");
  out << std::setprecision(17);
  for (std::size_t k = 0; k < data.dim(); ++k) out << "x" << k << ",";
  out << "label\n";
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (std::size_t k = 0; k < data.dim(); ++k) out << data.x(r, k) << ",";
    out << data.y[r] << "\n";
  }
}

// ---------------------------------------------------------------------------

Vector find_minimizer(const GradientOracle& oracle, double tol) {
  const std::size_t d = oracle.dim();
  Vector x(d, 0.0);
  auto total_value = [&](std::span<const double> p) {
    double v = 0.0;
    for (std::size_t i = 0; i < oracle.n_agents(); ++i) v += oracle.value(i, p);
    return v;
  };
  auto norm = [](std::span<const double> v) { return std::sqrt(dot(v, v)); };

  for (int iter = 0; iter < 200; ++iter) {
    const Vector g = oracle.total_grad(x);
    if (norm(g) <= tol * (1.0 + norm(x))) return x;
    Matrix h(d, d);
    for (std::size_t i = 0; i < oracle.n_agents(); ++i) h = h + oracle.hessian(i, x).matrix();
    const Vector step = solve_spd(SymMatrix(h), g);
    const double f0 = total_value(x);
    const double slope = dot(g, step);
    double t = 1.0;
    Vector trial(d);
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t c = 0; c < d; ++c) trial[c] = x[c] - t * step[c];
      if (total_value(trial) <= f0 - 1e-4 * t * slope) break;
      t *= 0.5;
    }
    x = trial;
  }
  const Vector g = oracle.total_grad(x);
  if (norm(g) > 1e3 * tol * (1.0 + norm(x))) throw Error("find_minimizer: Newton did not converge");
  return x;
}

double stacked_grad_norm_sq(const GradientOracle& oracle, std::span<const double> x) {
  Vector g(oracle.dim());
  double s = 0.0;
  for (std::size_t i = 0; i < oracle.n_agents(); ++i) {
    oracle.full_grad(i, x, g);
    s += dot(g, g);
  }
  return s;
}

Vector estimate_grad_noise(const GradientOracle& oracle, std::span<const double> x,
                           std::size_t batch, std::size_t draws, std::uint64_t seed) {
  const std::size_t d = oracle.dim();
  Vector full(d), g(d);
  Vector out(oracle.n_agents(), 0.0);
  for (std::size_t i = 0; i < oracle.n_agents(); ++i) {
    oracle.full_grad(i, x, full);
    Rng rng(hash_seed({seed, hash_tag("grad_noise"), i}));
    double acc = 0.0;
    for (std::size_t r = 0; r < draws; ++r) {
      oracle.stoch_grad(i, x, batch, rng, g);
      for (std::size_t c = 0; c < d; ++c) acc += (g[c] - full[c]) * (g[c] - full[c]);
    }
    out[i] = acc / static_cast<double>(draws);
  }
  return out;
}

}  // namespace exlg
