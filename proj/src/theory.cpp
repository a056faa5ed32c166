#include "exlg/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "exlg/error.hpp"

namespace exlg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sq(double x) { return x * x; }

// x / y with x/0 = +inf for x > 0 and 0/0 = 0.
double safe_ratio(double x, double y) {
  if (y != 0.0) return x / y;
  return x > 0.0 ? kInf : 0.0;
}

// 1 - γ̄_W and 1 - γ̄_{I-W}² combined.
double network_den(const SpectralSummary& s) {
  return (1.0 - s.gammabar_w) * (1.0 - sq(s.gammabar_iw));
}

void check_params(const ProblemParams& p) {
  if (!(p.mu > 0.0) || !(p.L >= p.mu)) throw ConfigError("theory: need 0 < mu <= L");
  if (!(p.sigma2 >= 0.0)) throw ConfigError("theory: sigma2 must be non-negative");
  if (p.d == 0 || p.N == 0) throw ConfigError("theory: d and N must be positive");
  if (!(p.eta > 0.0)) throw ConfigError("theory: eta must be positive");
  if (!(p.h > 0.0)) throw ConfigError("theory: h must be positive");
  if (!(p.norm_B >= 0.0)) throw ConfigError("theory: norm_B must be non-negative");
}

struct Core {
  double gamma_wt, A, gamma1, gamma2;
};

// The pieces the admissibility clauses need; throws AssumptionError at an unusable
// spectral point.
Core core_constants(const ProblemParams& p) {
  const double s = sq(p.spectral.lam2_wt);
  if (!(s > 0.0 && s < 1.0)) {
    std::ostringstream os;
    os << "inadmissible spectral point: |lambda_2(W_tilde)|^2 = " << s << " is outside (0, 1)";
    throw AssumptionError(os.str());
  }
  const double gw = gamma_wtilde(s);
  if (!(gw > 0.0)) {
    std::ostringstream os;
    os << "inadmissible spectral point: gamma_W_tilde = " << gw
       << " at |lambda_2(W_tilde)|^2 = " << s;
    throw AssumptionError(os.str());
  }
  const double L = p.L, mu = p.mu, N = static_cast<double>(p.N);
  const double den = network_den(p.spectral);
  if (!(den > 0.0)) throw AssumptionError("inadmissible spectral point: (1 - gammabar_W)(1 - gammabar_{I-W}^2) <= 0");
  const double lip = L * L + L * sq(p.norm_B);
  const double A = (L / mu - 1.0 + gw / (2.0 * (1.0 + mu / L))) * 4.0 * L * L / (N * N) *
                   (1.0 + (2.0 + 2.0 * L) / mu);
  const double gamma1 = (1.0 / gw) * (1.0 / L + 2.0 + 1.0 / (L * mu));
  const double gamma2 =
      12.0 * lip / den * (1.0 + 4.0 * L * L * (1.0 + (2.0 + 2.0 * L) / mu) / (N * N * mu));
  return {gw, A, gamma1, gamma2};
}

}  // namespace

ProblemParams ProblemParams::with_h(double new_h) const {
  ProblemParams q = *this;
  q.h = new_h;
  q.spectral.lam2_wt = new_h + (1.0 - new_h) * spectral.lam2_w;
  q.spectral.lamN_wt = new_h + (1.0 - new_h) * spectral.lamN_w;
  q.spectral.gammabar_wt = std::max(std::abs(q.spectral.lam2_wt), std::abs(q.spectral.lamN_wt));
  return q;
}

ProblemParams ProblemParams::with_eta(double new_eta) const {
  ProblemParams q = *this;
  q.eta = new_eta;
  // W̃ is symmetric doubly stochastic with spectrum in (0, 1], so ‖W̃‖₂ = 1.
  if (b_is_wtilde_over_eta) q.norm_B = 1.0 / new_eta;
  return q;
}

std::pair<double, double> ProblemParams::delta2_interval() const {
  const double a = 1.0 - 0.5 * eta * mu * (1.0 - 0.5 * eta * L);
  const double b = 1.0 - h * (1.0 - spectral.gammabar_w) / 4.0 * (1.0 - spectral.gammabar_iw);
  return {std::max(a, b), 1.0};
}

double ProblemParams::delta2_gap() const {
  if (delta2) return 1.0 - delta2_value();
  const double a = 0.5 * eta * mu * (1.0 - 0.5 * eta * L);
  const double b = h * (1.0 - spectral.gammabar_w) / 4.0 * (1.0 - spectral.gammabar_iw);
  return std::min(a, b);
}

double ProblemParams::delta2_value() const {
  const auto [lo, hi] = delta2_interval();
  if (!delta2) return lo;
  if (*delta2 < lo || *delta2 >= hi) {
    std::ostringstream os;
    os << "delta^2 = " << *delta2 << " is outside the admissible interval [" << lo << ", " << hi << ")";
    throw ConfigError(os.str());
  }
  return *delta2;
}

double gamma_wtilde(double s) {
  if (!(s > 0.0 && s < 1.0)) {
    std::ostringstream os;
    os << "gamma_wtilde: argument " << s << " is outside (0, 1)";
    throw ConfigError(os.str());
  }
  if (s < 0.5) return s;
  if (s <= 2.0 / 3.0) return s * (s - 0.5) / (1.0 - s);
  return (5.0 * s - 3.0 * s * s - 2.0) / (3.0 * s - 1.0);
}

std::vector<std::pair<std::string, double>> TheoryConstants::named() const {
  return {{"gamma_wt", gamma_wt}, {"A", A},       {"gamma1", gamma1}, {"gamma2", gamma2},
          {"w1", w1},             {"w2", w2},     {"E1", E1},         {"E2", E2},
          {"E3", E3},             {"E4", E4},     {"C0", C0},         {"C1", C1},
          {"C2", C2},             {"C3", C3},     {"C4", C4},         {"D0", D0},
          {"D1", D1},             {"D2", D2},     {"R_h", R_h},       {"R_h_prime", R_h_prime},
          {"K0", K0},             {"script_E1", script_E1},           {"delta2", delta2},
          {"one_minus_delta2", delta2_gap}};
}

TheoryConstants compute_constants(const ProblemParams& p) {
  check_params(p);
  const Core core = core_constants(p);
  const double L = p.L, mu = p.mu, eta = p.eta, h = p.h;
  const double N = static_cast<double>(p.N), d = static_cast<double>(p.d);
  const double sigma2 = p.sigma2, G = p.grad_at_min_sq;
  const double den = network_den(p.spectral);
  const double lip = L * L + L * sq(p.norm_B);
  const double gw = core.gamma_wt;

  TheoryConstants t;
  t.gamma_wt = gw;
  t.A = core.A;
  t.gamma1 = core.gamma1;
  t.gamma2 = core.gamma2;
  t.delta2 = p.delta2_value();
  t.delta2_gap = p.delta2_gap();
  const double delta2 = t.delta2;

  const double contraction = 1.0 - h * t.gamma1 * t.gamma2;
  if (!(contraction > 0.0)) {
    std::ostringstream os;
    os << "1 - h*gamma1*gamma2 = " << contraction << " <= 0";
    throw AssumptionError(os.str());
  }
  const double half = 1.0 - eta * L / 2.0;
  const double dd = eta * mu * half - t.delta2_gap;
  if (!(dd > 0.0) || !(half > 0.0)) {
    std::ostringstream os;
    os << "delta^2 + eta*mu*(1 - eta*L/2) - 1 = " << dd << " <= 0";
    throw AssumptionError(os.str());
  }

  t.w1 = 2.0 * ((N * N + 1.0) / gw + 4.0 / gw * (L / mu + 3.0 * eta * L - 1.0));
  t.w2 = (6.0 * lip / (N * mu) + N) * 8.0 / den;
  t.E1 = 8.0 / gw * (L / mu + 3.0 * eta * L - 1.0);
  t.E2 = 2.0 / gw;
  t.E3 = 12.0 * lip / (mu * den);
  t.E4 = 4.0 / den;

  const InitMoments& m = p.init;
  t.D0 = (t.E1 * m.x_tilde0_sq + t.E2 * m.e_x0_sq) / contraction;
  t.C0 = 2.0 * L * L / contraction *
         ((h / eta) * (t.E3 / eta) * m.e_x0_sq + (t.E4 / h) * m.v_tilde0_sq);
  const double noise = eta * sigma2 + 2.0 * d;
  t.C1 = 2.0 * L * L * noise / N * (t.w2 * t.gamma1 * (h / eta) + t.w1) / contraction;
  t.C2 = 2.0 * std::pow(L, 4) * (eta + (1.0 + eta * L) / (mu * half)) / (N * N * dd);
  t.C3 = 2.0 * L * L / N * noise / dd;
  t.C4 = 2.0 * L * L * m.e_x0_sq / dd;

  const double twoL2 = 2.0 * L * L;
  t.R_h = h * delta2 * (t.C1 * t.gamma2 / twoL2 + t.C0 * t.gamma1 * t.gamma2 / twoL2) +
          (h / eta) * delta2 * (t.gamma2 * t.D0 + t.w2 / N * noise) + G;
  t.R_h_prime = eta * delta2 * (t.C1 + t.C3 + t.gamma1 * t.C0 + t.D0 * t.C2) +
                delta2 * eta * eta * (t.C1 * t.C2 / twoL2 + t.gamma1 * t.C0 * t.C2 / twoL2) + 3.0 * G;

  const double k0_inner = std::max(1.0 - safe_ratio(G, t.D0 + t.C4), 1.0 - safe_ratio(G, t.C0));
  t.K0 = std::max(0.0, safe_ratio(delta2, t.delta2_gap) * k0_inner);

  const double gbar = p.spectral.gammabar_wt;
  const double R = t.R_h + t.R_h_prime;
  const double sigma = std::sqrt(sigma2);
  t.D1 = 2.0 * std::sqrt(2.0 * R) / (1.0 - gbar) + 2.0 * sigma / std::sqrt(1.0 - gbar * gbar);
  t.D2 = 2.0 * std::sqrt(2.0 * d / (1.0 - gbar * gbar));

  const double first = std::sqrt(eta / (mu * half) + sq(1.0 + eta * L) / (mu * mu * half * half));
  const double second = std::sqrt(4.0 * L * L * R * eta / (N * sq(1.0 - gbar)) +
                                  4.0 * L * L * sigma2 * eta / (1.0 - gbar * gbar) +
                                  8.0 * L * L * d / (1.0 - gbar * gbar));
  t.script_E1 = first * second + sigma / std::sqrt(mu * half * N) + 1.65 * (L / mu) * std::sqrt(d / N);
  return t;
}

const Clause* CertReport::first_failure() const {
  for (const auto& c : h_clauses)
    if (!c.passed) return &c;
  for (const auto& c : eta_clauses)
    if (!c.passed) return &c;
  return nullptr;
}

std::string CertReport::to_string() const {
  std::ostringstream os;
  os.precision(6);
  if (!spectral_ok) os << "spectrum: " << spectral_note << "\n";
  auto dump = [&](const char* title, const std::vector<Clause>& cs, double value, double current) {
    os << title << " clauses, largest admissible value " << value << " (current " << current << ")\n";
    for (const auto& c : cs)
      os << "  [" << (c.passed ? "ok" : "FAIL") << "] " << c.name << "  (bound " << c.bound << ")\n";
  };
  dump("h", h_clauses, h_max, h);
  os << "  binding h clause: " << binding_h << "\n";
  dump("eta", eta_clauses, eta_max, eta);
  os << "  binding eta clause: " << binding_eta << "\n";
  os << "delta^2 interval: [" << delta2_lo << ", " << delta2_hi << "), 1 - delta^2 <= " << delta2_gap_max << "\n";
  os << (passed ? "stepsize certificate: PASS" : "stepsize certificate: FAIL") << "\n";
  return os.str();
}

CertReport validate_stepsize(const ProblemParams& p) {
  CertReport r;
  const double L = p.L, mu = p.mu;
  Core core{0.0, 0.0, kInf, kInf};
  try {
    core = core_constants(p);
  } catch (const AssumptionError& e) {
    r.spectral_ok = false;
    r.spectral_note = e.what();
    core = {0.0, kInf, kInf, kInf};
  }
  const double g12 = core.gamma1 * core.gamma2;
  const double den_h = 4.0 * sq(p.spectral.gammabar_iw);

  auto add = [](std::vector<Clause>& cs, std::string name, double bound, bool strict, double value) {
    const bool ok = std::isfinite(value) && (strict ? value < bound : value <= bound);
    cs.push_back({std::move(name), bound, strict, ok});
  };

  r.h = p.h;
  r.eta = p.eta;
  r.h_clauses.push_back({"h > 0", 0.0, true, p.h > 0.0});
  add(r.h_clauses, "h <= (1-gammabar_W)/(4 gammabar_{I-W}^2)", safe_ratio(1.0 - p.spectral.gammabar_w, den_h),
      false, p.h);
  add(r.h_clauses, "h <= 1/2", 0.5, false, p.h);
  add(r.h_clauses, "h <= 1/(gamma1 gamma2)", safe_ratio(1.0, g12), false, p.h);

  r.eta_clauses.push_back({"eta > 0", 0.0, true, p.eta > 0.0});
  add(r.eta_clauses, "eta < 1/(h gamma1 gamma2)", safe_ratio(1.0, p.h * g12), true, p.eta);
  add(r.eta_clauses, "eta < gamma_W_tilde/(6(L+mu) v 2A)",
      core.gamma_wt / std::max(6.0 * (L + mu), 2.0 * core.A), true, p.eta);
  add(r.eta_clauses, "eta < 1", 1.0, true, p.eta);
  add(r.eta_clauses, "eta < 1/(L+mu)", 1.0 / (L + mu), true, p.eta);
  add(r.eta_clauses, "eta < gamma_W_tilde/(6(L+mu))", core.gamma_wt / (6.0 * (L + mu)), true, p.eta);

  auto binding = [](const std::vector<Clause>& cs) {
    const Clause* best = nullptr;
    for (std::size_t i = 1; i < cs.size(); ++i)
      if (!best || cs[i].bound < best->bound) best = &cs[i];
    return best ? best->name : std::string{};
  };
  r.binding_h = binding(r.h_clauses);
  r.binding_eta = binding(r.eta_clauses);
  auto smallest = [](const std::vector<Clause>& cs) {
    double m = kInf;
    for (std::size_t i = 1; i < cs.size(); ++i) m = std::min(m, cs[i].bound);
    return m;
  };
  r.h_max = smallest(r.h_clauses);
  r.eta_max = smallest(r.eta_clauses);

  const auto [lo, hi] = p.delta2_interval();
  r.delta2_lo = lo;
  r.delta2_hi = hi;
  ProblemParams lo_p = p;
  lo_p.delta2.reset();
  r.delta2_gap_max = lo_p.delta2_gap();

  r.passed = r.spectral_ok && r.first_failure() == nullptr;
  return r;
}

std::optional<ProblemParams> find_admissible(const ProblemParams& start, int max_halvings,
                                             double h_safety) {
  ProblemParams p = start;
  for (int round = 0; round <= max_halvings; ++round) {
    // h's clauses depend on h itself through γ_W̃; iterate toward a self-consistent h.
    for (int it = 0; it < 60; ++it) {
      const CertReport r = validate_stepsize(p);
      if (r.passed) return p;
      double hmin = kInf;
      for (std::size_t i = 1; i < r.h_clauses.size(); ++i) hmin = std::min(hmin, r.h_clauses[i].bound);
      if (!std::isfinite(hmin) || !(hmin > 0.0)) break;
      const double next_h = std::min(p.h, h_safety * hmin);
      if (next_h == p.h) break;
      p = p.with_h(next_h);
    }
    p = p.with_eta(p.eta / 2.0).with_h(start.h);
  }
  return std::nullopt;
}

std::int64_t first_valid_k(const TheoryConstants& tc) {
  if (!std::isfinite(tc.K0)) throw AssumptionError("K0 is not finite");
  constexpr auto kMax = std::numeric_limits<std::int64_t>::max();
  if (tc.K0 >= static_cast<double>(kMax)) return kMax;
  return static_cast<std::int64_t>(std::ceil(tc.K0));
}

namespace {

double geometric_term(const ProblemParams& p, std::int64_t K) {
  if (p.init.x0_sq == 0.0) return 0.0;
  const double g = p.spectral.gammabar_wt;
  const double g2 = g * g;
  const double r = 1.0 - p.eta * p.mu * (1.0 - p.eta * p.L / 2.0);
  const double k = static_cast<double>(K);
  double ratio;
  if (std::abs(g2 - r) <= 1e-12 * std::max(g2, r)) {
    ratio = K == 0 ? 0.0 : k * std::pow(r, k - 1.0);
  } else {
    ratio = (std::pow(g2, k) - std::pow(r, k)) / (g2 - r);
  }
  return std::sqrt(std::max(ratio, 0.0)) * 2.0 * p.L * g / std::sqrt(static_cast<double>(p.N)) *
         std::sqrt(p.init.x0_sq);
}

void check_k(const TheoryConstants& tc, std::int64_t K) {
  if (static_cast<double>(K) < tc.K0) {
    std::ostringstream os;
    os << "bound requested at K = " << K << " below K0 = " << tc.K0;
    throw AssumptionError(os.str());
  }
}

}  // namespace

double bound_w2_mean(const ProblemParams& p, const TheoryConstants& tc, std::int64_t K) {
  check_k(tc, K);
  return geometric_term(p, K) + std::pow(1.0 - p.mu * p.eta, static_cast<double>(K)) * p.w2_init +
         std::sqrt(p.eta) * tc.script_E1;
}

double bound_w2_agents(const ProblemParams& p, const TheoryConstants& tc, std::int64_t K) {
  check_k(tc, K);
  const double sqrtN = std::sqrt(static_cast<double>(p.N));
  return p.eta * tc.D1 / sqrtN + std::sqrt(p.eta) * (tc.D2 + tc.script_E1) + geometric_term(p, K) +
         std::pow(1.0 - p.mu * p.eta, static_cast<double>(K)) * p.w2_init +
         2.0 * std::pow(p.spectral.gammabar_wt, static_cast<double>(K)) / sqrtN * std::sqrt(p.init.x0_sq);
}

}  // namespace exlg
