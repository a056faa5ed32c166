#pragma once

// Non-asymptotic W₂ guarantees for the generalized EXTRA chain: the named constants,
// the admissible (h, η) region, and the bound curves in K.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "exlg/network.hpp"

namespace exlg {

struct InitMoments {
  double x0_sq = 0.0;        // E‖x^{(0)}‖² (stacked, Nd)
  double x_tilde0_sq = 0.0;  // E‖x^{(0)} - 1⊗x̄^{(0)}‖²
  double e_x0_sq = 0.0;      // E‖x̄^{(0)} - x*‖²
  double v_tilde0_sq = 0.0;  // E‖ṽ^{(0)}‖²
};

struct ProblemParams {
  double mu = 0.0;
  double L = 0.0;
  double sigma2 = 0.0;
  std::size_t d = 0;
  std::size_t N = 0;
  double eta = 0.0;
  double h = 0.0;
  double norm_B = 0.0;
  /// When set, ‖B‖ tracks ‖W̃‖₂/η (B = W̃/η) as η and h change.
  bool b_is_wtilde_over_eta = true;
  double grad_at_min_sq = 0.0;  // ‖∇F(x*)‖², stacked
  InitMoments init;
  SpectralSummary spectral;
  std::optional<double> delta2;  // empty: lower endpoint of the admissible interval
  double w2_init = 0.0;          // W₂(law of x0, π)

  /// Copy with a new h; the W̃ part of the spectrum is recomputed from W's.
  ProblemParams with_h(double h) const;
  /// Copy with a new η (and ‖B‖ when it tracks W̃/η).
  ProblemParams with_eta(double eta) const;

  /// [lo, 1) for δ².
  std::pair<double, double> delta2_interval() const;
  /// δ² actually used: the configured value after range checks, or the lower endpoint.
  double delta2_value() const;
  /// 1 - δ², computed without cancellation when δ² is the default.
  double delta2_gap() const;
};

/// Three-branch constant on s = |λ₂(W̃)|² ∈ (0, 1). At s = 2/3 both the middle and
/// last branch apply; the middle one is used. Throws ConfigError outside (0, 1).
double gamma_wtilde(double lam2_wt_sq);

struct TheoryConstants {
  double gamma_wt = 0.0;
  double A = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double w1 = 0.0;
  double w2 = 0.0;
  double E1 = 0.0, E2 = 0.0, E3 = 0.0, E4 = 0.0;
  double C0 = 0.0, C1 = 0.0, C2 = 0.0, C3 = 0.0, C4 = 0.0;
  double D0 = 0.0, D1 = 0.0, D2 = 0.0;
  double R_h = 0.0;
  double R_h_prime = 0.0;
  double K0 = 0.0;
  double script_E1 = 0.0;
  double delta2 = 0.0;
  double delta2_gap = 0.0;  // 1 - δ²

  /// (name, value) pairs in a fixed order, for the CSV dump.
  std::vector<std::pair<std::string, double>> named() const;
};

/// Throws AssumptionError when 1 - hγ₁γ₂ <= 0, when δ² + ημ(1 - ηL/2) - 1 <= 0, or at
/// the degenerate spectral point γ_W̃ = 0; ConfigError on malformed parameters.
TheoryConstants compute_constants(const ProblemParams& p);

struct Clause {
  std::string name;
  double bound = 0.0;
  bool strict = false;  // value must be < bound (else <=)
  bool passed = false;
};

struct CertReport {
  std::vector<Clause> h_clauses;
  std::vector<Clause> eta_clauses;
  double h = 0.0;
  double eta = 0.0;
  double h_max = 0.0;    // smallest h clause bound
  double eta_max = 0.0;  // smallest η clause bound at the current h
  std::string binding_h;
  std::string binding_eta;
  double delta2_lo = 0.0;
  double delta2_hi = 1.0;
  double delta2_gap_max = 0.0;
  bool spectral_ok = true;
  std::string spectral_note;
  bool passed = false;

  /// First failed clause (h clauses first), or nullptr.
  const Clause* first_failure() const;
  std::string to_string() const;
};

/// Evaluates each h and η clause separately and reports the binding one. Never throws
/// on inadmissible input; an unusable spectrum is flagged via spectral_ok.
CertReport validate_stepsize(const ProblemParams& p);

/// Shrinks η by halving (and sets h just under its clause minimum) until
/// validate_stepsize passes. Returns the first passing parameters, or nullopt.
std::optional<ProblemParams> find_admissible(const ProblemParams& p, int max_halvings = 200,
                                             double h_safety = 0.99);

/// Mean-iterate bound at K:
///   √((γ̄^{2K} - r^K)/(γ̄² - r))·2Lγ̄/√N·√E‖x0‖² + (1-μη)^K·W₂(x0, π) + √η·𝓔₁,
/// with γ̄ = γ̄_W̃ and r = 1 - ημ(1 - ηL/2). Throws AssumptionError when K < K₀.
double bound_w2_mean(const ProblemParams& p, const TheoryConstants& tc, std::int64_t K);

/// Average per-agent bound: ηD₁/√N + √η(D₂ + 𝓔₁) + the mean-bound geometric terms
/// + 2γ̄^K/√N·√E‖x0‖².
double bound_w2_agents(const ProblemParams& p, const TheoryConstants& tc, std::int64_t K);

/// Smallest integer K with K >= K₀.
std::int64_t first_valid_k(const TheoryConstants& tc);

}  // namespace exlg
