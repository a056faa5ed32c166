#pragma once

// Langevin chains over an agent ensemble. All chains draw their Gaussian blocks
// w^{(k)} and minibatches from a NoiseStream keyed by (seed, k, agent), so chains
// that share a seed are coupled draw for draw.
//
//   ULA            x⁺ = x - η∇̃f(x) + T√(2η)w                       (centralized, f = Σ f_i)
//   DE-SGLD        x⁺ = Wx - η∇̃F(x) + T√(2η)w
//   EXTRA SGLD     x^{k+2} = (I+W)x^{k+1} - W̃x^k - η(g^{k+1} - g^k) + T√(2η)(w^{k+2} - w^{k+1})
//                  x^1 = Wx^0 - ηg^0 + T√(2η)w^1
//   generalized    x⁺ = W̃x - η(g + v) + T√(2η)w
//                  v⁺ = v - U(v + g - Bx) + T·U√(2/η)w
//   reference      x⁺ = x - (η/N)∇f(x) + √(2η)w̄                    (w̄ = agent mean of w)
//
// T is the temperature flag (1 sampling, 0 optimization).

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "exlg/matrixcore.hpp"
#include "exlg/network.hpp"
#include "exlg/rng.hpp"
#include "exlg/tasks.hpp"

namespace exlg {

enum class Algorithm { ULA, DE_SGLD, EXTRA_SGLD, GEN_EXTRA_SGLD, REFERENCE_CHAIN };

std::string_view to_string(Algorithm a);
/// Case-insensitive; accepts "ula", "de_sgld", "extra_sgld", "gen_extra_sgld", "reference_chain".
Algorithm parse_algorithm(std::string_view name);

struct BMatrix {
  enum class Kind { WTildeOverEta, ScaledIdentity, Custom };

  Kind kind = Kind::WTildeOverEta;
  double b = 0.0;    // ScaledIdentity
  SymMatrix custom;  // Custom; columns must share a common sum

  static BMatrix w_tilde_over_eta() { return {}; }
  static BMatrix scaled_identity(double b) { return {Kind::ScaledIdentity, b, {}}; }
  static BMatrix from_matrix(SymMatrix m) { return {Kind::Custom, 0.0, std::move(m)}; }
};

enum class InitKind { Zero, Prior, Given };

struct SamplerConfig {
  Algorithm algorithm = Algorithm::GEN_EXTRA_SGLD;
  double eta = 0.01;
  std::optional<std::size_t> batch;  // empty: full batch
  int temperature = 1;               // 1 or 0
  BMatrix b_matrix;
  std::uint64_t seed = 0;
  std::int64_t K = 0;

  InitKind init = InitKind::Zero;
  double init_var = 1.0;  // InitKind::Prior: x_i^{(0)} ~ N(0, init_var·I) i.i.d.
  Matrix x0;              // InitKind::Given: N×d (or 1×d for single chains)

  /// Throws ConfigError on η <= 0, temperature not in {0,1}, or a zero batch.
  void validate() const;
};

struct EnsembleState {
  std::int64_t k = 0;
  Matrix x;  // N×d, row i = agent i
  Matrix v;  // N×d dual variables; zero except for the generalized chain

  std::size_t n_agents() const { return x.rows(); }
  std::size_t dim() const { return x.cols(); }
  /// x̄ = (1/N) Σ_i x_i
  Vector mean() const;
};

/// Agent-mean of each column of an N×d block.
Vector column_mean(const Matrix& block);

/// x - η·grad + √(2η)·w. Throws Error on a non-finite gradient.
Vector step_ula(std::span<const double> x, std::span<const double> grad, double eta,
                std::span<const double> w);

/// Reference-chain step x - (η/N)·grad_sum + √(2η)·w_avg.
Vector step_reference_chain(std::span<const double> x, std::span<const double> grad_sum,
                            std::size_t n_agents, double eta, std::span<const double> w_avg);

/// Row i = w_i^{(k)} from the stream.
Matrix gaussian_block(const NoiseStream& noise, std::int64_t k, std::size_t n, std::size_t d);

/// Row i = ∇̃f_i(x_i), with agent i's batch drawn from noise.batch_rng(k, i).
Matrix stoch_grad_block(const GradientOracle& oracle, const Matrix& x,
                        std::optional<std::size_t> batch, const NoiseStream& noise, std::int64_t k);

/// B for the generalized chain; checks the common column-sum constraint.
SymMatrix resolve_b(const SamplerConfig& cfg, const MixingSet& mixing);

/// x^{(0)} (and v^{(0)} = 0) for an ensemble of n agents.
EnsembleState initial_state(const SamplerConfig& cfg, std::size_t n_agents, std::size_t dim);

EnsembleState step_de_sgld(const EnsembleState& s, const MixingSet& mixing,
                           const GradientOracle& oracle, const SamplerConfig& cfg,
                           const NoiseStream& noise);

EnsembleState step_gen_extra(const EnsembleState& s, const MixingSet& mixing,
                             const GradientOracle& oracle, const SamplerConfig& cfg,
                             const NoiseStream& noise);
EnsembleState step_gen_extra(const EnsembleState& s, const MixingSet& mixing, const SymMatrix& b,
                             const GradientOracle& oracle, const SamplerConfig& cfg,
                             const NoiseStream& noise);

/// Two-step EXTRA state: the latest iterate plus what the recursion needs from the
/// step before (x^{(k-1)}, g^{(k-1)} and w^{(k)}). Before the first step only
/// `cur` is set.
struct ExtraPair {
  EnsembleState cur;
  Matrix prev_x;
  Matrix prev_grad;
  Matrix prev_noise;
  bool started = false;

  static ExtraPair start(EnsembleState x0) { return {std::move(x0), {}, {}, {}, false}; }
};

ExtraPair step_extra_two(const ExtraPair& p, const MixingSet& mixing, const GradientOracle& oracle,
                         const SamplerConfig& cfg, const NoiseStream& noise);

struct TrajectoryRecord {
  Algorithm algorithm = Algorithm::GEN_EXTRA_SGLD;
  std::vector<std::int64_t> iterations;
  std::vector<Matrix> x;     // per record: N×d (1×d for ULA and the reference chain)
  std::vector<Matrix> v;     // per record; only filled for the generalized chain
  std::vector<Vector> mean;  // per record: x̄

  std::size_t size() const { return iterations.size(); }
};

/// Iterates K steps, recording k = 0, record_every, 2·record_every, ... and always k = K.
/// Throws DivergenceError when an entry is non-finite or exceeds 1e12 in magnitude.
TrajectoryRecord run_chain(const SamplerConfig& cfg, const MixingSet& mixing,
                           const GradientOracle& oracle, std::int64_t record_every = 1);

inline constexpr double kDivergenceThreshold = 1e12;

}  // namespace exlg
