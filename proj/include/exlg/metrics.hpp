#pragma once

// Distances and summaries over replica ensembles.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exlg/matrixcore.hpp"
#include "exlg/samplers.hpp"
#include "exlg/tasks.hpp"

namespace exlg {

/// Exact W₂ between Gaussians:
///   W₂² = ‖m_a - m_b‖² + tr Σ_a + tr Σ_b - 2 tr (Σ_b^{1/2} Σ_a Σ_b^{1/2})^{1/2}.
/// Throws Error when a covariance is not PSD beyond the clip tolerance.
double w2_gaussian(const GaussianDist& a, const GaussianDist& b);

struct MomentEstimate {
  Vector mean;
  SymMatrix cov;  // 1/(n-1) normalization
  std::size_t n_samples = 0;

  GaussianDist as_gaussian() const { return {mean, cov}; }
};

/// Throws Error with fewer than 2 samples or ragged dimensions.
MomentEstimate estimate_moments(std::span<const Vector> samples);

/// √(Σ_i ‖x_i - x̄‖²)
double consensus_error(const Matrix& x);
double consensus_error(const EnsembleState& s);

/// Fraction of rows with 1{sigmoid(βᵀX) >= 1/2} == y; a tie predicts label 1.
double accuracy(std::span<const double> beta, const Dataset& eval_set);

struct MetricSeries {
  std::string label;
  std::vector<std::int64_t> iterations;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  /// Mean of the last `fraction` of the values (at least one).
  double tail_mean(double fraction = 0.1) const;
};

/// Which block of a record to fit: agent i's row, or the agent average x̄.
struct BlockSelector {
  std::optional<std::size_t> agent;  // empty: the mean iterate

  static BlockSelector mean() { return {}; }
  static BlockSelector of_agent(std::size_t i) { return {i}; }
  std::string label() const;
};

/// At each recorded k, fits mean and covariance across replicas and reports W₂ to
/// `target`. Needs >= 2 replicas with identical recorded iterations.
MetricSeries w2_series(std::span<const TrajectoryRecord> replicas, const GaussianDist& target,
                       BlockSelector which);

}  // namespace exlg
