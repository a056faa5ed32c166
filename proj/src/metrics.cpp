#include "exlg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "exlg/error.hpp"

namespace exlg {

double w2_gaussian(const GaussianDist& a, const GaussianDist& b) {
  const std::size_t d = a.dim();
  if (b.dim() != d || a.cov.order() != d || b.cov.order() != d)
    throw Error("w2_gaussian: dimension mismatch");
  double mean_sq = 0.0;
  for (std::size_t c = 0; c < d; ++c) mean_sq += (a.mean[c] - b.mean[c]) * (a.mean[c] - b.mean[c]);

  const SymMatrix sb = psd_sqrt(b.cov);
  psd_sqrt(a.cov);  // PSD check on Σ_a
  const SymMatrix inner = congruence(sb, a.cov);
  const SymMatrix root = psd_sqrt(inner);
  const double w2sq = mean_sq + a.cov.trace() + b.cov.trace() - 2.0 * root.trace();
  return std::sqrt(std::max(w2sq, 0.0));
}

MomentEstimate estimate_moments(std::span<const Vector> samples) {
  if (samples.size() < 2) throw Error("estimate_moments: need at least 2 samples");
  const std::size_t d = samples.front().size();
  Vector mean(d, 0.0);
  for (const auto& s : samples) {
    if (s.size() != d) throw Error("estimate_moments: ragged samples");
    for (std::size_t c = 0; c < d; ++c) mean[c] += s[c];
  }
  const double n = static_cast<double>(samples.size());
  for (double& m : mean) m /= n;
  Matrix cov(d, d);
  for (const auto& s : samples)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a; b < d; ++b) cov(a, b) += (s[a] - mean[a]) * (s[b] - mean[b]);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      cov(a, b) /= (n - 1.0);
      cov(b, a) = cov(a, b);
    }
  return {std::move(mean), SymMatrix(cov), samples.size()};
}

double consensus_error(const Matrix& x) {
  const Vector m = column_mean(x);
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < x.cols(); ++c) s += (x(i, c) - m[c]) * (x(i, c) - m[c]);
  return std::sqrt(s);
}

double consensus_error(const EnsembleState& s) { return consensus_error(s.x); }

double accuracy(std::span<const double> beta, const Dataset& eval_set) {
  if (eval_set.size() == 0) throw Error("accuracy: empty evaluation set");
  if (beta.size() != eval_set.dim()) throw Error("accuracy: dimension mismatch");
  std::size_t correct = 0;
  for (std::size_t j = 0; j < eval_set.size(); ++j) {
    auto xj = eval_set.x.row(j);
    double t = 0.0;
    for (std::size_t c = 0; c < beta.size(); ++c) t += beta[c] * xj[c];
    // sigmoid(t) >= 1/2  <=>  t >= 0
    const double pred = t >= 0.0 ? 1.0 : 0.0;
    if (pred == eval_set.y[j]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(eval_set.size());
}

double MetricSeries::tail_mean(double fraction) const {
  if (values.empty()) throw Error("tail_mean: empty series");
  const auto n = values.size();
  const std::size_t take = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * n)));
  double s = 0.0;
  for (std::size_t i = n - std::min(take, n); i < n; ++i) s += values[i];
  return s / static_cast<double>(std::min(take, n));
}

std::string BlockSelector::label() const {
  return agent ? "agent_" + std::to_string(*agent) : std::string("mean");
}

MetricSeries w2_series(std::span<const TrajectoryRecord> replicas, const GaussianDist& target,
                       BlockSelector which) {
  if (replicas.size() < 2) throw Error("w2_series: need at least 2 replicas");
  const auto& iters = replicas.front().iterations;
  for (const auto& r : replicas)
    if (r.iterations != iters) throw Error("w2_series: replicas recorded different iterations");

  MetricSeries out;
  out.label = which.label();
  out.iterations = iters;
  out.values.reserve(iters.size());
  std::vector<Vector> samples(replicas.size());
  for (std::size_t t = 0; t < iters.size(); ++t) {
    for (std::size_t r = 0; r < replicas.size(); ++r) {
      if (which.agent) {
        const Matrix& x = replicas[r].x[t];
        if (*which.agent >= x.rows()) throw Error("w2_series: agent index out of range");
        auto row = x.row(*which.agent);
        samples[r].assign(row.begin(), row.end());
      } else {
        samples[r] = replicas[r].mean[t];
      }
    }
    out.values.push_back(w2_gaussian(estimate_moments(samples).as_gaussian(), target));
  }
  return out;
}

}  // namespace exlg
