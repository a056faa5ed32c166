#pragma once

// Communication graphs and the mixing matrices built on them:
//   W  = I - δ·L                   (gossip matrix from the graph Laplacian)
//   W̃  = h·I + (1 - h)·W           (second mixing matrix, h in (0, 1/2])
//   U  = W̃ - W = h·(I - W)         (PSD, null space span{1} on connected graphs)

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exlg/matrixcore.hpp"

namespace exlg {

enum class TopologyKind { FullyConnected, Ring, Star, Disconnected, Custom };

std::string_view to_string(TopologyKind kind);
/// Accepts "fully_connected"/"full", "ring"/"circular", "star", "disconnected", "custom".
TopologyKind parse_topology_kind(std::string_view name);

/// An undirected graph on n_agents >= 2 nodes. Star graphs put the hub at agent 0.
class Topology {
 public:
  static Topology fully_connected(std::size_t n);
  static Topology ring(std::size_t n);
  static Topology star(std::size_t n);
  static Topology disconnected(std::size_t n);
  /// Symmetric 0/1 adjacency with zero diagonal; validated.
  static Topology custom(const Matrix& adjacency);
  static Topology make(TopologyKind kind, std::size_t n);

  /// Text format: first line N, then N rows of N space-separated 0/1 entries.
  static Topology read_adjacency_file(const std::string& path);

  TopologyKind kind() const { return kind_; }
  std::size_t n_agents() const { return adjacency_.rows(); }
  const Matrix& adjacency() const { return adjacency_; }

 private:
  Topology(TopologyKind kind, Matrix adjacency) : kind_(kind), adjacency_(std::move(adjacency)) {}

  TopologyKind kind_;
  Matrix adjacency_;
};

/// L = D_deg - A.
SymMatrix laplacian(const Topology& t);

/// Returns δ: the pinned value after range checks, or a deterministic draw
/// uniform on (0.05, 0.95)/λ_max(L) keyed by `seed`. Disconnected graphs accept
/// any δ (W = I regardless).
double resolve_delta(const Topology& t, std::optional<double> delta,
                     std::optional<std::uint64_t> seed);

/// W = I - δL. Throws ConfigError when δ is outside (0, 2/λ_max(L)).
SymMatrix build_w(const Topology& t, std::optional<double> delta = std::nullopt,
                  std::optional<std::uint64_t> seed = std::nullopt);

/// How strictly h is range-checked when W̃ is built.
///   Strict     h ∈ (0, 1/2]
///   AllowZero  h ∈ [0, 1/2]; h = 0 gives W̃ = W and U = 0 (the DE-SGLD reduction)
///   Unchecked  h ∈ [0, 1]; used to build and then diagnose out-of-range settings
enum class HRange { Strict, AllowZero, Unchecked };

/// W̃ = hI + (1-h)W. Throws ConfigError when h violates `range`.
SymMatrix build_w_tilde(const SymMatrix& w, double h, HRange range = HRange::Strict);

struct SpectralSummary {
  double lam2_w = 0.0;   // second-largest eigenvalue of W
  double lamN_w = 0.0;   // smallest eigenvalue of W
  double lam2_wt = 0.0;  // second-largest eigenvalue of W̃
  double lamN_wt = 0.0;  // smallest eigenvalue of W̃
  double gammabar_w = 0.0;   // max(|λ2^W|, |λN^W|)
  double gammabar_iw = 0.0;  // max(1-|λ2^W|, 1-|λN^W|)
  double gammabar_wt = 0.0;  // max(|λ2^W̃|, |λN^W̃|)
  double lam2_laplacian = 0.0;
  double lammax_laplacian = 0.0;
};

/// Immutable bundle of mixing matrices for one (topology, h, δ) choice.
struct MixingSet {
  TopologyKind kind = TopologyKind::Custom;
  SymMatrix w;
  SymMatrix w_tilde;
  SymMatrix u;
  SymMatrix u_sqrt;
  double h = 0.0;
  double delta = 0.0;
  SpectralSummary spectral;
  bool connected = false;

  std::size_t n_agents() const { return w.order(); }
};

MixingSet build_mixing_set(const Topology& t, double h, std::optional<double> delta = std::nullopt,
                           std::optional<std::uint64_t> seed = std::nullopt,
                           HRange range = HRange::Strict);

/// Assembles a MixingSet from an explicit W (and h); used by tests and for custom weights.
MixingSet mixing_set_from_w(const SymMatrix& w, double h, HRange range = HRange::Strict);

struct AssumptionCheck {
  std::string name;
  bool passed = false;
  double violation = 0.0;  // 0 when passed; otherwise how far the quantity is off
  std::string detail;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;

  bool all_passed() const;
  /// First failing check, or nullptr.
  const AssumptionCheck* first_failure() const;
  const AssumptionCheck* find(std::string_view name) const;
  std::string to_string() const;
};

namespace check_names {
inline constexpr std::string_view kHRange = "h in (0,1/2]";
inline constexpr std::string_view kWDoublyStochastic = "W doubly stochastic";
inline constexpr std::string_view kWTildeDoublyStochastic = "W_tilde doubly stochastic";
inline constexpr std::string_view kWSymmetric = "W symmetric";
inline constexpr std::string_view kWDiagonalPositive = "W diagonal positive";
inline constexpr std::string_view kWNonnegative = "W off-diagonal nonnegative";
inline constexpr std::string_view kWSpectrum = "W eigenvalues in (-1,1]";
inline constexpr std::string_view kWTildeSpectrum = "W_tilde eigenvalues in (0,1]";
inline constexpr std::string_view kUpperOrdering = "(I+W)/2 >= W_tilde";
inline constexpr std::string_view kLowerOrdering = "W_tilde >= W";
inline constexpr std::string_view kWAboveMinusI = "W > -I";
inline constexpr std::string_view kNullSpace = "null(W_tilde - W) = span(1)";
inline constexpr std::string_view kNullSpaceIWt = "null(I - W_tilde) contains span(1)";
inline constexpr std::string_view kConnected = "graph connected";
}  // namespace check_names

/// Runs every structural check on W and W̃ and reports the measured violations.
ValidationReport validate_assumptions(const MixingSet& ms);

}  // namespace exlg
