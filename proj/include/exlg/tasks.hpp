#pragma once

// Component functions f_i for Bayesian regression, split across agents:
//   π(β) ∝ exp(-Σ_i f_i(β)),  f_i = (agent i's negative log-likelihood) + ‖β‖²/(2λN).

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "exlg/matrixcore.hpp"
#include "exlg/rng.hpp"

namespace exlg {

/// n×d features plus n targets (real for regression, 0/1 for classification).
struct Dataset {
  Matrix x;
  Vector y;

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return x.cols(); }
};

struct GaussianDist {
  Vector mean;
  SymMatrix cov;

  std::size_t dim() const { return mean.size(); }
};

/// Per-agent gradient access. Implementations are immutable after construction;
/// randomness comes only from the Rng handle passed in.
class GradientOracle {
 public:
  virtual ~GradientOracle() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t n_agents() const = 0;
  virtual std::size_t n_points(std::size_t agent) const = 0;

  virtual double value(std::size_t agent, std::span<const double> x) const = 0;
  virtual void full_grad(std::size_t agent, std::span<const double> x,
                         std::span<double> out) const = 0;
  /// (n_i / |batch|)·Σ_{j∈batch} ∇ℓ_j(x) + prior term.
  virtual void batch_grad(std::size_t agent, std::span<const double> x,
                          std::span<const std::size_t> batch, std::span<double> out) const = 0;
  virtual SymMatrix hessian(std::size_t agent, std::span<const double> x) const = 0;

  /// Strong convexity and smoothness constants shared by every f_i.
  virtual double mu() const = 0;
  virtual double L() const = 0;

  /// Minibatch gradient with the batch drawn uniformly without replacement.
  /// b == n_i returns full_grad exactly. Throws unless 1 <= b <= n_i.
  void minibatch_grad(std::size_t agent, std::span<const double> x, std::size_t b, Rng& rng,
                      std::span<double> out) const;

  /// Full gradient when `batch` is empty, minibatch gradient otherwise.
  void stoch_grad(std::size_t agent, std::span<const double> x, std::optional<std::size_t> batch,
                  Rng& rng, std::span<double> out) const;

  /// Σ_i ∇f_i(x).
  Vector total_grad(std::span<const double> x) const;
};

/// Draws b distinct indices from [0, n) (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t b, Rng& rng);

/// f_i(β) = Σ_j (y_j - βᵀX_j)²/(2ξ²) + ‖β‖²/(2λN).
class LinRegTask final : public GradientOracle {
 public:
  LinRegTask(std::vector<Dataset> shards, double noise_std, double prior_var);

  std::size_t dim() const override { return dim_; }
  std::size_t n_agents() const override { return shards_.size(); }
  std::size_t n_points(std::size_t agent) const override { return shards_.at(agent).size(); }

  double value(std::size_t agent, std::span<const double> x) const override;
  void full_grad(std::size_t agent, std::span<const double> x, std::span<double> out) const override;
  void batch_grad(std::size_t agent, std::span<const double> x, std::span<const std::size_t> batch,
                  std::span<double> out) const override;
  SymMatrix hessian(std::size_t agent, std::span<const double> x) const override;

  double mu() const override { return mu_; }
  double L() const override { return L_; }

  double noise_std() const { return noise_std_; }
  double prior_var() const { return prior_var_; }
  const std::vector<Dataset>& shards() const { return shards_; }

  /// Exact posterior exp(-Σ f_i) = N(m, V).
  GaussianDist posterior() const;

 private:
  void add_datum_grad(const Dataset& s, std::size_t j, std::span<const double> x, double scale,
                      std::span<double> out) const;

  std::vector<Dataset> shards_;
  std::size_t dim_;
  double noise_std_;
  double prior_var_;
  double mu_ = 0.0;
  double L_ = 0.0;
};

/// f_i(β) = Σ_j log(1 + exp(-s_j βᵀX_j)) + ‖β‖²/(2Nλ) with s_j = 2y_j - 1.
class LogRegTask final : public GradientOracle {
 public:
  LogRegTask(std::vector<Dataset> shards, double prior_var);

  std::size_t dim() const override { return dim_; }
  std::size_t n_agents() const override { return shards_.size(); }
  std::size_t n_points(std::size_t agent) const override { return shards_.at(agent).size(); }

  double value(std::size_t agent, std::span<const double> x) const override;
  void full_grad(std::size_t agent, std::span<const double> x, std::span<double> out) const override;
  void batch_grad(std::size_t agent, std::span<const double> x, std::span<const std::size_t> batch,
                  std::span<double> out) const override;
  SymMatrix hessian(std::size_t agent, std::span<const double> x) const override;

  double mu() const override { return mu_; }
  double L() const override { return L_; }

  double prior_var() const { return prior_var_; }
  const std::vector<Dataset>& shards() const { return shards_; }

 private:
  void add_datum_grad(const Dataset& s, std::size_t j, std::span<const double> x, double scale,
                      std::span<double> out) const;

  std::vector<Dataset> shards_;
  std::size_t dim_;
  double prior_var_;
  double mu_ = 0.0;
  double L_ = 0.0;
};

/// f_i(x) = (a_i/2)·‖x - c_i‖². A deterministic test problem with known minimizer
/// Σ a_i c_i / Σ a_i; each agent holds one pseudo-datum, so every gradient is exact.
class QuadraticTask final : public GradientOracle {
 public:
  QuadraticTask(Vector curvatures, std::vector<Vector> centers);

  std::size_t dim() const override { return dim_; }
  std::size_t n_agents() const override { return a_.size(); }
  std::size_t n_points(std::size_t) const override { return 1; }

  double value(std::size_t agent, std::span<const double> x) const override;
  void full_grad(std::size_t agent, std::span<const double> x, std::span<double> out) const override;
  void batch_grad(std::size_t agent, std::span<const double> x, std::span<const std::size_t> batch,
                  std::span<double> out) const override;
  SymMatrix hessian(std::size_t agent, std::span<const double> x) const override;

  double mu() const override { return mu_; }
  double L() const override { return L_; }

  Vector minimizer() const;

 private:
  Vector a_;
  std::vector<Vector> c_;
  std::size_t dim_;
  double mu_;
  double L_;
};

struct CurvatureBounds {
  double mu;
  double L;
};

/// LinReg: μ = min_i λ_min(X_iᵀX_i/ξ²) + 1/(λN), L = max_i λ_max(X_iᵀX_i/ξ²) + 1/(λN).
/// LogReg: μ = 1/(Nλ), L = max_i λ_max(X_iᵀX_i)/4 + 1/(Nλ).
CurvatureBounds mu_L_bounds(const LinRegTask& task);
CurvatureBounds mu_L_bounds(const LogRegTask& task);

/// X_i ~ N(0, I_d), y_i = βᵀX_i + ε_i with ε_i ~ N(0, noise_std²).
Dataset gen_linreg_data(std::size_t n_total, std::size_t d, std::span<const double> beta_true,
                        double noise_std, Rng& rng);

/// X_j ~ N(0, feature_var·I_d), y_j = 1 if U(0,1) <= sigmoid(βᵀX_j) else 0.
Dataset gen_logreg_data(std::size_t n_total, std::size_t d, std::span<const double> beta_true,
                        Rng& rng, double feature_var = 20.0);

/// Posterior of the Gaussian linear model with prior N(0, λI):
///   V = (XᵀX/ξ² + I/λ)⁻¹,  m = V·Xᵀy/ξ².
GaussianDist linreg_posterior(const Dataset& all, double prior_var, double noise_std);

/// Shuffles and deals equal disjoint shards; the n mod N leftover rows are dropped
/// (with a warning on stderr).
std::vector<Dataset> partition_data(const Dataset& data, std::size_t n_agents, Rng& rng);

Dataset concat(std::span<const Dataset> shards);

/// Label column given by header name or by zero-based index.
using ColumnRef = std::variant<std::string, std::size_t>;

struct CsvOptions {
  ColumnRef label_column = std::size_t{0};
  bool standardize = true;
  std::vector<ColumnRef> ignore_columns;
  /// Labels equal to this string map to 1 and all others to 0; when empty, labels
  /// must parse as 0 or 1.
  std::string positive_label;
};

struct CsvLoadInfo {
  std::size_t rows = 0;
  std::size_t feature_columns = 0;
  bool had_header = false;
};

/// Comma-separated table. The first row is a header when one of its fields is
/// non-numeric while the same column of the second row is numeric; a header whose width
/// differs from the data is skipped and columns are then addressed by index. Features must be
/// numeric. With `standardize`, features are shifted to zero mean and scaled to unit
/// variance; constant columns become all zeros.
Dataset load_csv_dataset(const std::string& path, const CsvOptions& opts,
                         CsvLoadInfo* info = nullptr);

/// Writes features then label as the last column, with a header row, 17 significant digits.
void write_csv_dataset(const std::string& path, const Dataset& data);

/// Damped Newton on Σ_i f_i; stops when ‖Σ∇f_i‖ <= tol·(1 + ‖x‖).
Vector find_minimizer(const GradientOracle& oracle, double tol = 1e-10);

/// Σ_i ‖∇f_i(x)‖², i.e. ‖∇F(x*)‖² for the stacked consensus point.
double stacked_grad_norm_sq(const GradientOracle& oracle, std::span<const double> x);

/// Empirical E‖stoch_grad - full_grad‖² per agent at x, from `draws` batches.
Vector estimate_grad_noise(const GradientOracle& oracle, std::span<const double> x,
                           std::size_t batch, std::size_t draws, std::uint64_t seed);

}  // namespace exlg
