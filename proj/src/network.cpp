#include "exlg/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "exlg/error.hpp"
#include "exlg/rng.hpp"

namespace exlg {

namespace {

constexpr double kStochasticTol = 1e-12;
constexpr double kOrderingTol = 1e-10;

void require_agents(std::size_t n) {
  if (n < 1) throw ConfigError("topology needs at least 1 agent");
}

double min_eig(const SymMatrix& a, std::string_view name) { return sym_eig(a, name).eigvals.front(); }

double row_sum_error(const SymMatrix& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.order(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.order(); ++j) s += m(i, j);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::FullyConnected:
      return "fully_connected";
    case TopologyKind::Ring:
      return "ring";
    case TopologyKind::Star:
      return "star";
    case TopologyKind::Disconnected:
      return "disconnected";
    case TopologyKind::Custom:
      return "custom";
  }
  return "unknown";
}

TopologyKind parse_topology_kind(std::string_view name) {
  if (name == "fully_connected" || name == "full" || name == "complete")
    return TopologyKind::FullyConnected;
  if (name == "ring" || name == "circular") return TopologyKind::Ring;
  if (name == "star") return TopologyKind::Star;
  if (name == "disconnected") return TopologyKind::Disconnected;
  if (name == "custom") return TopologyKind::Custom;
  throw ConfigError("unknown topology '" + std::string(name) + "'");
}

Topology Topology::fully_connected(std::size_t n) {
  require_agents(n);
  Matrix a(n, n, 1.0);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 0.0;
  return Topology(TopologyKind::FullyConnected, std::move(a));
}

Topology Topology::ring(std::size_t n) {
  require_agents(n);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    a(i, j) = 1.0;
    a(j, i) = 1.0;
  }
  return Topology(TopologyKind::Ring, std::move(a));
}

Topology Topology::star(std::size_t n) {
  require_agents(n);
  Matrix a(n, n);
  for (std::size_t i = 1; i < n; ++i) {
    a(0, i) = 1.0;
    a(i, 0) = 1.0;
  }
  return Topology(TopologyKind::Star, std::move(a));
}

Topology Topology::disconnected(std::size_t n) {
  require_agents(n);
  return Topology(TopologyKind::Disconnected, Matrix(n, n));
}

Topology Topology::custom(const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n) throw ConfigError("adjacency matrix must be square");
  require_agents(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw ConfigError("adjacency matrix must have a zero diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = adjacency(i, j);
      if (v != 0.0 && v != 1.0) throw ConfigError("adjacency entries must be 0 or 1");
      if (v != adjacency(j, i)) throw ConfigError("adjacency matrix must be symmetric");
    }
  }
  return Topology(TopologyKind::Custom, adjacency);
}

Topology Topology::make(TopologyKind kind, std::size_t n) {
  switch (kind) {
    case TopologyKind::FullyConnected:
      return fully_connected(n);
    case TopologyKind::Ring:
      return ring(n);
    case TopologyKind::Star:
      return star(n);
    case TopologyKind::Disconnected:
      return disconnected(n);
    case TopologyKind::Custom:
      break;
  }
  throw ConfigError("custom topology needs an adjacency file");
}

Topology Topology::read_adjacency_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open adjacency file '" + path + "'");
  long long n = 0;
  if (!(in >> n) || n < 2) throw ConfigError("adjacency file '" + path + "': bad agent count");
  Matrix a(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i)
    for (long long j = 0; j < n; ++j) {
      int v = -1;
      if (!(in >> v))
        throw ConfigError("adjacency file '" + path + "': expected " + std::to_string(n * n) +
                          " entries");
      a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = v;
    }
  return custom(a);
}

SymMatrix laplacian(const Topology& t) {
  const std::size_t n = t.n_agents();
  const Matrix& a = t.adjacency();
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      deg += a(i, j);
      if (i != j) l(i, j) = -a(i, j);
    }
    l(i, i) = deg;
  }
  return SymMatrix(l);
}

double resolve_delta(const Topology& t, std::optional<double> delta,
                     std::optional<std::uint64_t> seed) {
  const double lmax = sym_eig(laplacian(t), "graph Laplacian").eigvals.back();
  if (lmax <= kOrderingTol) {
    // No edges: W = I for every δ.
    return delta.value_or(0.0);
  }
  if (delta) {
    if (!(*delta > 0.0 && *delta < 2.0 / lmax)) {
      std::ostringstream os;
      os.precision(17);
      os << "delta = " << *delta << " outside admissible range (0, " << 2.0 / lmax << ")";
      throw ConfigError(os.str());
    }
    return *delta;
  }
  Rng rng(hash_seed({seed.value_or(0), hash_tag("laplacian_delta")}));
  return (0.05 + 0.9 * rng.uniform()) / lmax;
}

SymMatrix build_w(const Topology& t, std::optional<double> delta, std::optional<std::uint64_t> seed) {
  const double d = resolve_delta(t, delta, seed);
  const SymMatrix l = laplacian(t);
  return SymMatrix::identity(t.n_agents()) - d * l;
}

SymMatrix build_w_tilde(const SymMatrix& w, double h, HRange range) {
  const double hi = range == HRange::Unchecked ? 1.0 : 0.5;
  const bool lo_ok = range == HRange::Strict ? h > 0.0 : h >= 0.0;
  if (!(lo_ok && h <= hi)) {
    std::ostringstream os;
    os << "h = " << h << " outside " << (range == HRange::Strict ? "(0, " : "[0, ")
       << (range == HRange::Unchecked ? "1]" : "1/2]");
    throw ConfigError(os.str());
  }
  return h * SymMatrix::identity(w.order()) + (1.0 - h) * w;
}

MixingSet mixing_set_from_w(const SymMatrix& w, double h, HRange range) {
  MixingSet ms;
  ms.w = w;
  ms.w_tilde = build_w_tilde(w, h, range);
  ms.u = ms.w_tilde - ms.w;
  ms.u_sqrt = psd_sqrt(ms.u);
  ms.h = h;

  const std::size_t n = w.order();
  if (n == 1) {
    // A lone agent has no disagreement modes.
    ms.spectral.gammabar_iw = 1.0;
    ms.connected = true;
    return ms;
  }
  const Spectrum sw = sym_eig(w, "W");
  const Spectrum swt = sym_eig(ms.w_tilde, "W_tilde");
  auto& sp = ms.spectral;
  sp.lam2_w = sw.eigvals[n - 2];
  sp.lamN_w = sw.eigvals[0];
  sp.lam2_wt = swt.eigvals[n - 2];
  sp.lamN_wt = swt.eigvals[0];
  sp.gammabar_w = std::max(std::abs(sp.lam2_w), std::abs(sp.lamN_w));
  sp.gammabar_iw = std::max(1.0 - std::abs(sp.lam2_w), 1.0 - std::abs(sp.lamN_w));
  sp.gammabar_wt = std::max(std::abs(sp.lam2_wt), std::abs(sp.lamN_wt));

  // Recover the graph from the support of W to decide connectivity.
  Matrix adj(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && w(i, j) != 0.0) adj(i, j) = 1.0;
  const Spectrum sl = sym_eig(laplacian(Topology::custom(adj)), "graph Laplacian");
  sp.lam2_laplacian = sl.eigvals[1];
  sp.lammax_laplacian = sl.eigvals.back();
  ms.connected = sp.lam2_laplacian > 1e-10;
  return ms;
}

MixingSet build_mixing_set(const Topology& t, double h, std::optional<double> delta,
                           std::optional<std::uint64_t> seed, HRange range) {
  const double d = resolve_delta(t, delta, seed);
  MixingSet ms = mixing_set_from_w(build_w(t, d), h, range);
  ms.kind = t.kind();
  ms.delta = d;
  // Connectivity is a property of the graph, not of the weights.
  if (t.n_agents() == 1) return ms;
  const Spectrum sl = sym_eig(laplacian(t), "graph Laplacian");
  ms.spectral.lam2_laplacian = sl.eigvals[1];
  ms.spectral.lammax_laplacian = sl.eigvals.back();
  ms.connected = sl.eigvals[1] > 1e-10;
  return ms;
}

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AssumptionCheck* ValidationReport::first_failure() const {
  for (const auto& c : checks)
    if (!c.passed) return &c;
  return nullptr;
}

const AssumptionCheck* ValidationReport::find(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.passed ? "PASS " : "FAIL ") << c.name << "  violation=" << fmt(c.violation);
    if (!c.detail.empty()) os << "  (" << c.detail << ")";
    os << '\n';
  }
  return os.str();
}

ValidationReport validate_assumptions(const MixingSet& ms) {
  namespace cn = check_names;
  ValidationReport r;
  const std::size_t n = ms.n_agents();
  auto add = [&](std::string_view name, double violation, std::string detail = {}) {
    r.checks.push_back({std::string(name), violation <= 0.0, std::max(0.0, violation),
                        std::move(detail)});
  };

  add(cn::kHRange, ms.h > 0.0 && ms.h <= 0.5 ? 0.0 : (ms.h <= 0.0 ? std::max(-ms.h, 1e-300) : ms.h - 0.5),
      "h = " + fmt(ms.h));
  const double w_rows = row_sum_error(ms.w);
  add(cn::kWDoublyStochastic, w_rows > kStochasticTol ? w_rows : 0.0,
      "max |row sum - 1| = " + fmt(w_rows));
  const double wt_rows = row_sum_error(ms.w_tilde);
  add(cn::kWTildeDoublyStochastic, wt_rows > kStochasticTol ? wt_rows : 0.0,
      "max |row sum - 1| = " + fmt(wt_rows));

  double asym = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) asym = std::max(asym, std::abs(ms.w(i, j) - ms.w(j, i)));
  add(cn::kWSymmetric, asym);

  double min_diag = ms.w(0, 0);
  double min_off = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    min_diag = std::min(min_diag, ms.w(i, i));
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) min_off = std::min(min_off, ms.w(i, j));
  }
  add(cn::kWDiagonalPositive, min_diag > 0.0 ? 0.0 : std::max(-min_diag, 1e-300),
      "min W_ii = " + fmt(min_diag));
  add(cn::kWNonnegative, -min_off, "min W_ij = " + fmt(min_off));

  const Spectrum sw = sym_eig(ms.w, "W");
  const double w_lo = sw.eigvals.front();
  const double w_hi = sw.eigvals.back();
  {
    double v = std::max(w_hi - 1.0 - kOrderingTol, 0.0);
    if (w_lo <= -1.0) v = std::max(v, -1.0 - w_lo + 1e-300);
    add(cn::kWSpectrum, v, "eigenvalues in [" + fmt(w_lo) + ", " + fmt(w_hi) + "]");
  }
  const Spectrum swt = sym_eig(ms.w_tilde, "W_tilde");
  const double wt_lo = swt.eigvals.front();
  const double wt_hi = swt.eigvals.back();
  {
    double v = std::max(wt_hi - 1.0 - kOrderingTol, 0.0);
    if (wt_lo <= 0.0) v = std::max(v, -wt_lo + 1e-300);
    add(cn::kWTildeSpectrum, v, "eigenvalues in [" + fmt(wt_lo) + ", " + fmt(wt_hi) + "]");
  }

  const SymMatrix eye = SymMatrix::identity(n);
  const double upper = min_eig(0.5 * (eye + ms.w) - ms.w_tilde, "(I+W)/2 - W_tilde");
  add(cn::kUpperOrdering, -upper - kOrderingTol, "min eigenvalue " + fmt(upper));
  const double lower = min_eig(ms.u, "U");
  add(cn::kLowerOrdering, -lower - kOrderingTol, "min eigenvalue " + fmt(lower));
  const double above = min_eig(ms.w + eye, "W + I");
  add(cn::kWAboveMinusI, above > 0.0 ? 0.0 : -above + 1e-300, "min eigenvalue " + fmt(above));

  {
    const Spectrum su = sym_eig(ms.u, "U");
    const double unorm = std::max(std::abs(su.eigvals.front()), std::abs(su.eigvals.back()));
    const double thresh = 1e-10 * std::max(1.0, unorm);
    std::size_t dim = 0;
    for (double l : su.eigvals)
      if (l < thresh) ++dim;
    double u_ones = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += ms.u(i, j);
      u_ones = std::max(u_ones, std::abs(s));
    }
    const bool ok = dim == 1 && u_ones <= kStochasticTol;
    add(cn::kNullSpace, ok ? 0.0 : std::max<double>(std::abs(static_cast<double>(dim) - 1.0), u_ones),
        "dim null(U) = " + std::to_string(dim));
  }
  {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += (i == j ? 1.0 : 0.0) - ms.w_tilde(i, j);
      v = std::max(v, std::abs(s));
    }
    add(cn::kNullSpaceIWt, v > kStochasticTol ? v : 0.0);
  }
  add(cn::kConnected, ms.connected ? 0.0 : 1.0,
      "lambda_2(L) = " + fmt(ms.spectral.lam2_laplacian));
  return r;
}

}  // namespace exlg
