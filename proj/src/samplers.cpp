#include "exlg/samplers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <string>

#include "exlg/error.hpp"

namespace exlg {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::ULA: return "ula";
    case Algorithm::DE_SGLD: return "de_sgld";
    case Algorithm::EXTRA_SGLD: return "extra_sgld";
    case Algorithm::GEN_EXTRA_SGLD: return "gen_extra_sgld";
    case Algorithm::REFERENCE_CHAIN: return "reference_chain";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  std::string s(name);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::replace(s.begin(), s.end(), '-', '_');
  if (s == "ula" || s == "sgld") return Algorithm::ULA;
  if (s == "de_sgld" || s == "desgld") return Algorithm::DE_SGLD;
  if (s == "extra_sgld" || s == "extra") return Algorithm::EXTRA_SGLD;
  if (s == "gen_extra_sgld" || s == "gen_extra" || s == "generalized_extra") return Algorithm::GEN_EXTRA_SGLD;
  if (s == "reference_chain" || s == "reference") return Algorithm::REFERENCE_CHAIN;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

void SamplerConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be a positive finite number");
  if (temperature != 0 && temperature != 1) throw ConfigError("temperature must be 0 or 1");
  if (batch && *batch == 0) throw ConfigError("batch must be a positive integer");
  if (K < 0) throw ConfigError("K must be non-negative");
  if (init == InitKind::Prior && !(init_var > 0.0)) throw ConfigError("init_var must be positive");
}

Vector column_mean(const Matrix& block) {
  Vector m(block.cols(), 0.0);
  for (std::size_t i = 0; i < block.rows(); ++i) {
    auto r = block.row(i);
    for (std::size_t c = 0; c < m.size(); ++c) m[c] += r[c];
  }
  for (double& v : m) v /= static_cast<double>(block.rows());
  return m;
}

Vector EnsembleState::mean() const { return column_mean(x); }

Vector step_ula(std::span<const double> x, std::span<const double> grad, double eta,
                std::span<const double> w) {
  Vector out(x.size());
  const double s = std::sqrt(2.0 * eta);
  for (std::size_t c = 0; c < x.size(); ++c) {
    if (!std::isfinite(grad[c])) throw Error("step_ula: non-finite gradient");
    out[c] = x[c] - eta * grad[c] + s * w[c];
  }
  return out;
}

Vector step_reference_chain(std::span<const double> x, std::span<const double> grad_sum,
                            std::size_t n_agents, double eta, std::span<const double> w_avg) {
  Vector out(x.size());
  const double s = std::sqrt(2.0 * eta);
  const double a = eta / static_cast<double>(n_agents);
  for (std::size_t c = 0; c < x.size(); ++c) out[c] = x[c] - a * grad_sum[c] + s * w_avg[c];
  return out;
}

Matrix gaussian_block(const NoiseStream& noise, std::int64_t k, std::size_t n, std::size_t d) {
  Matrix w(n, d);
  for (std::size_t i = 0; i < n; ++i) noise.gaussian(k, i, w.row(i));
  return w;
}

Matrix stoch_grad_block(const GradientOracle& oracle, const Matrix& x,
                        std::optional<std::size_t> batch, const NoiseStream& noise,
                        std::int64_t k) {
  if (x.rows() != oracle.n_agents() || x.cols() != oracle.dim()) {
    std::ostringstream os;
    os << "state is " << x.rows() << "x" << x.cols() << " but the task has "
       << oracle.n_agents() << " agents in dimension " << oracle.dim();
    throw ConfigError(os.str());
  }
  Matrix g(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    Rng rng = noise.batch_rng(k, i);
    oracle.stoch_grad(i, x.row(i), batch, rng, g.row(i));
  }
  return g;
}

SymMatrix resolve_b(const SamplerConfig& cfg, const MixingSet& mixing) {
  const std::size_t n = mixing.n_agents();
  switch (cfg.b_matrix.kind) {
    case BMatrix::Kind::WTildeOverEta:
      return (1.0 / cfg.eta) * mixing.w_tilde;
    case BMatrix::Kind::ScaledIdentity:
      return cfg.b_matrix.b * SymMatrix::identity(n);
    case BMatrix::Kind::Custom: {
      const SymMatrix& b = cfg.b_matrix.custom;
      if (b.order() != n) throw ConfigError("custom B has the wrong order");
      double c0 = 0.0;
      for (std::size_t i = 0; i < n; ++i) c0 += b(i, 0);
      for (std::size_t j = 1; j < n; ++j) {
        double cj = 0.0;
        for (std::size_t i = 0; i < n; ++i) cj += b(i, j);
        if (std::abs(cj - c0) > 1e-10 * (1.0 + std::abs(c0))) {
          std::ostringstream os;
          os << "custom B violates the common column-sum constraint: column 0 sums to " << c0
             << ", column " << j << " to " << cj;
          throw ConfigError(os.str());
        }
      }
      return b;
    }
  }
  throw ConfigError("unknown B kind");
}

EnsembleState initial_state(const SamplerConfig& cfg, std::size_t n_agents, std::size_t dim) {
  EnsembleState s{0, Matrix(n_agents, dim), Matrix(n_agents, dim)};
  switch (cfg.init) {
    case InitKind::Zero:
      break;
    case InitKind::Prior: {
      const double sd = std::sqrt(cfg.init_var);
      for (std::size_t i = 0; i < n_agents; ++i) {
        Rng rng(hash_seed({cfg.seed, hash_tag("init"), i}));
        for (double& v : s.x.row(i)) v = sd * rng.normal();
      }
      break;
    }
    case InitKind::Given: {
      if (cfg.x0.cols() != dim) throw ConfigError("x0 has the wrong dimension");
      if (cfg.x0.rows() == n_agents) {
        s.x = cfg.x0;
      } else if (cfg.x0.rows() == 1) {
        for (std::size_t i = 0; i < n_agents; ++i) std::copy_n(cfg.x0.row(0).begin(), dim, s.x.row(i).begin());
      } else {
        throw ConfigError("x0 must have one row or one row per agent");
      }
      break;
    }
  }
  return s;
}

EnsembleState step_de_sgld(const EnsembleState& s, const MixingSet& mixing,
                           const GradientOracle& oracle, const SamplerConfig& cfg,
                           const NoiseStream& noise) {
  const std::size_t n = s.n_agents(), d = s.dim();
  const Matrix g = stoch_grad_block(oracle, s.x, cfg.batch, noise, s.k);
  const Matrix w = gaussian_block(noise, s.k + 1, n, d);
  EnsembleState out{s.k + 1, Matrix(n, d), s.v};
  mix_apply(mixing.w, s.x, out.x);
  const double ns = cfg.temperature * std::sqrt(2.0 * cfg.eta);
  auto xo = out.x.data();
  auto gd = g.data();
  auto wd = w.data();
  for (std::size_t e = 0; e < xo.size(); ++e) xo[e] += -cfg.eta * gd[e] + ns * wd[e];
  return out;
}

EnsembleState step_gen_extra(const EnsembleState& s, const MixingSet& mixing, const SymMatrix& b,
                             const GradientOracle& oracle, const SamplerConfig& cfg,
                             const NoiseStream& noise) {
  const std::size_t n = s.n_agents(), d = s.dim();
  if (s.v.rows() != n || s.v.cols() != d) throw ConfigError("dual block has the wrong shape");
  const Matrix g = stoch_grad_block(oracle, s.x, cfg.batch, noise, s.k);
  const Matrix w = gaussian_block(noise, s.k + 1, n, d);
  const double eta = cfg.eta;
  const double t = cfg.temperature;

  EnsembleState out{s.k + 1, Matrix(n, d), Matrix(n, d)};
  mix_apply(mixing.w_tilde, s.x, out.x);
  {
    auto xo = out.x.data();
    auto gd = g.data(), vd = s.v.data(), wd = w.data();
    const double ns = t * std::sqrt(2.0 * eta);
    for (std::size_t e = 0; e < xo.size(); ++e) xo[e] += -eta * (gd[e] + vd[e]) + ns * wd[e];
  }

  // r = v + g - Bx - T√(2/η)w, so that v⁺ = v - U·r.
  const Matrix bx = mix_apply(b, s.x);
  Matrix r(n, d);
  {
    auto rd = r.data();
    auto gd = g.data(), vd = s.v.data(), wd = w.data(), bd = bx.data();
    const double ns = t * std::sqrt(2.0 / eta);
    for (std::size_t e = 0; e < rd.size(); ++e) rd[e] = vd[e] + gd[e] - bd[e] - ns * wd[e];
  }
  const Matrix ur = mix_apply(mixing.u, r);
  {
    auto vo = out.v.data();
    auto vd = s.v.data(), ud = ur.data();
    for (std::size_t e = 0; e < vo.size(); ++e) vo[e] = vd[e] - ud[e];
  }
  return out;
}

EnsembleState step_gen_extra(const EnsembleState& s, const MixingSet& mixing,
                             const GradientOracle& oracle, const SamplerConfig& cfg,
                             const NoiseStream& noise) {
  return step_gen_extra(s, mixing, resolve_b(cfg, mixing), oracle, cfg, noise);
}

ExtraPair step_extra_two(const ExtraPair& p, const MixingSet& mixing, const GradientOracle& oracle,
                         const SamplerConfig& cfg, const NoiseStream& noise) {
  const EnsembleState& s = p.cur;
  const std::size_t n = s.n_agents(), d = s.dim();
  const double eta = cfg.eta;
  const double ns = cfg.temperature * std::sqrt(2.0 * eta);
  Matrix g = stoch_grad_block(oracle, s.x, cfg.batch, noise, s.k);
  Matrix w = gaussian_block(noise, s.k + 1, n, d);

  ExtraPair out;
  out.cur.k = s.k + 1;
  out.cur.v = s.v;
  out.started = true;

  if (!p.started) {
    out.cur.x = mix_apply(mixing.w, s.x);
    auto xo = out.cur.x.data();
    auto gd = g.data(), wd = w.data();
    for (std::size_t e = 0; e < xo.size(); ++e) xo[e] += -eta * gd[e] + ns * wd[e];
  } else {
    // (I + W)x^{k+1} - W̃x^k = x^{k+1} + Wx^{k+1} - W̃x^k
    const Matrix wx = mix_apply(mixing.w, s.x);
    const Matrix wtx = mix_apply(mixing.w_tilde, p.prev_x);
    out.cur.x = Matrix(n, d);
    auto xo = out.cur.x.data();
    using cspan = std::span<const double>;
    cspan xc = s.x.data(), a = wx.data(), bb = wtx.data();
    cspan gd = g.data(), gp = p.prev_grad.data(), wd = w.data(), wp = p.prev_noise.data();
    for (std::size_t e = 0; e < xo.size(); ++e)
      xo[e] = xc[e] + a[e] - bb[e] - eta * (gd[e] - gp[e]) + ns * (wd[e] - wp[e]);
  }
  out.prev_x = s.x;
  out.prev_grad = std::move(g);
  out.prev_noise = std::move(w);
  return out;
}

namespace {

void guard(const Matrix& m, std::int64_t k, std::string_view what) {
  double mx = 0.0;
  bool finite = true;
  for (double v : m.data()) {
    if (!std::isfinite(v)) {
      finite = false;
      break;
    }
    mx = std::max(mx, std::abs(v));
  }
  if (!finite || mx > kDivergenceThreshold) {
    const double shown = finite ? mx : std::numeric_limits<double>::infinity();
    std::ostringstream os;
    os << what << " diverged at iteration " << k << " (max |entry| = " << shown << ")";
    throw DivergenceError(k, shown, os.str());
  }
}

}  // namespace

TrajectoryRecord run_chain(const SamplerConfig& cfg, const MixingSet& mixing,
                           const GradientOracle& oracle, std::int64_t record_every) {
  cfg.validate();
  if (record_every < 1) throw ConfigError("record_every must be at least 1");
  const std::size_t n = oracle.n_agents(), d = oracle.dim();
  const bool single = cfg.algorithm == Algorithm::ULA || cfg.algorithm == Algorithm::REFERENCE_CHAIN;
  if (!single && mixing.n_agents() != n) {
    std::ostringstream os;
    os << "mixing matrix has order " << mixing.n_agents() << " but the task has " << n << " agents";
    throw ConfigError(os.str());
  }

  const NoiseStream noise(cfg.seed);
  TrajectoryRecord rec;
  rec.algorithm = cfg.algorithm;
  const bool keep_v = cfg.algorithm == Algorithm::GEN_EXTRA_SGLD;
  auto record = [&](const EnsembleState& s) {
    rec.iterations.push_back(s.k);
    rec.x.push_back(s.x);
    if (keep_v) rec.v.push_back(s.v);
    rec.mean.push_back(s.mean());
  };
  auto due = [&](std::int64_t k) { return k % record_every == 0 || k == cfg.K; };
  const std::string_view name = to_string(cfg.algorithm);

  if (single) {
    EnsembleState s0 = initial_state(cfg, n, d);
    EnsembleState s{0, Matrix(1, d), Matrix(1, d)};
    const Vector x0 = s0.mean();
    std::copy(x0.begin(), x0.end(), s.x.row(0).begin());
    record(s);
    Vector g(d), wavg(d);
    Matrix w(n, d);
    for (std::int64_t k = 0; k < cfg.K; ++k) {
      const auto x = s.x.row(0);
      Vector next;
      if (cfg.algorithm == Algorithm::ULA) {
        const Matrix x_rep = [&] {
          Matrix m(n, d);
          for (std::size_t i = 0; i < n; ++i) std::copy(x.begin(), x.end(), m.row(i).begin());
          return m;
        }();
        const Matrix gb = stoch_grad_block(oracle, x_rep, cfg.batch, noise, k);
        const Vector gsum = [&] {
          Vector t(d, 0.0);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < d; ++c) t[c] += gb(i, c);
          return t;
        }();
        Vector w0(d);
        noise.gaussian(k + 1, 0, w0);
        for (double& v : w0) v *= cfg.temperature;
        next = step_ula(x, gsum, cfg.eta, w0);
      } else {
        const Vector gsum = oracle.total_grad(x);
        w = gaussian_block(noise, k + 1, n, d);
        wavg = column_mean(w);
        for (double& v : wavg) v *= cfg.temperature;
        next = step_reference_chain(x, gsum, n, cfg.eta, wavg);
      }
      std::copy(next.begin(), next.end(), s.x.row(0).begin());
      s.k = k + 1;
      guard(s.x, s.k, name);
      if (due(s.k)) record(s);
    }
    return rec;
  }

  EnsembleState s = initial_state(cfg, n, d);
  record(s);
  switch (cfg.algorithm) {
    case Algorithm::DE_SGLD:
      for (std::int64_t k = 0; k < cfg.K; ++k) {
        s = step_de_sgld(s, mixing, oracle, cfg, noise);
        guard(s.x, s.k, name);
        if (due(s.k)) record(s);
      }
      break;
    case Algorithm::GEN_EXTRA_SGLD: {
      const SymMatrix b = resolve_b(cfg, mixing);
      for (std::int64_t k = 0; k < cfg.K; ++k) {
        s = step_gen_extra(s, mixing, b, oracle, cfg, noise);
        guard(s.x, s.k, name);
        guard(s.v, s.k, name);
        if (due(s.k)) record(s);
      }
      break;
    }
    case Algorithm::EXTRA_SGLD: {
      ExtraPair p = ExtraPair::start(std::move(s));
      for (std::int64_t k = 0; k < cfg.K; ++k) {
        p = step_extra_two(p, mixing, oracle, cfg, noise);
        guard(p.cur.x, p.cur.k, name);
        if (due(p.cur.k)) record(p.cur);
      }
      break;
    }
    default:
      break;
  }
  return rec;
}

}  // namespace exlg
