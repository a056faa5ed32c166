#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "exlg/error.hpp"
#include "exlg/harness.hpp"
#include "exlg/metrics.hpp"
#include "exlg/network.hpp"
#include "exlg/samplers.hpp"
#include "exlg/tasks.hpp"
#include "exlg/theory.hpp"

namespace py = pybind11;
using namespace exlg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array to_array(const SymMatrix& m) { return to_array(m.matrix()); }

Array to_array(std::span<const double> v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw ConfigError("expected a 2-d array");
  Matrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Vector to_vector(const Array& a) {
  if (a.ndim() != 1) throw ConfigError("expected a 1-d array");
  return Vector(a.data(), a.data() + a.size());
}

std::vector<Dataset> to_shards(const std::vector<std::pair<Array, Array>>& shards) {
  std::vector<Dataset> out;
  for (const auto& [x, y] : shards) out.push_back({to_matrix(x), to_vector(y)});
  return out;
}

Array stack(const std::vector<Matrix>& blocks) {
  if (blocks.empty()) return Array(std::vector<py::ssize_t>{0, 0, 0});
  const std::size_t r = blocks.front().rows(), c = blocks.front().cols();
  Array out({blocks.size(), r, c});
  double* p = out.mutable_data();
  for (const Matrix& m : blocks) p = std::copy(m.data().begin(), m.data().end(), p);
  return out;
}

ExperimentConfig config_from(const std::string& path, const std::map<std::string, std::string>& overrides) {
  Config c = load_config_source(path);
  for (const auto& [k, v] : overrides) c.set(k, v);
  return ExperimentConfig::from_config(c);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Decentralized Langevin samplers";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<AssumptionError>(m, "AssumptionError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

  py::enum_<Algorithm>(m, "Algorithm")
      .value("ULA", Algorithm::ULA)
      .value("DE_SGLD", Algorithm::DE_SGLD)
      .value("EXTRA_SGLD", Algorithm::EXTRA_SGLD)
      .value("GEN_EXTRA_SGLD", Algorithm::GEN_EXTRA_SGLD)
      .value("REFERENCE_CHAIN", Algorithm::REFERENCE_CHAIN);

  py::class_<MixingSet>(m, "MixingSet")
      .def_property_readonly("w", [](const MixingSet& s) { return to_array(s.w); })
      .def_property_readonly("w_tilde", [](const MixingSet& s) { return to_array(s.w_tilde); })
      .def_property_readonly("u", [](const MixingSet& s) { return to_array(s.u); })
      .def_readonly("h", &MixingSet::h)
      .def_readonly("delta", &MixingSet::delta)
      .def_readonly("connected", &MixingSet::connected)
      .def_property_readonly("n_agents", &MixingSet::n_agents)
      .def_property_readonly("spectral", [](const MixingSet& s) {
        const SpectralSummary& p = s.spectral;
        return py::dict(py::arg("lam2_w") = p.lam2_w, py::arg("lamN_w") = p.lamN_w, py::arg("lam2_wt") = p.lam2_wt,
                        py::arg("lamN_wt") = p.lamN_wt, py::arg("gammabar_w") = p.gammabar_w,
                        py::arg("gammabar_iw") = p.gammabar_iw, py::arg("gammabar_wt") = p.gammabar_wt);
      });

  m.def(
      "mixing_set",
      [](const std::string& topology, std::size_t n, double h, std::optional<double> delta,
         std::optional<std::uint64_t> seed, bool allow_zero_h) {
        return build_mixing_set(Topology::make(parse_topology_kind(topology), n), h, delta, seed,
                                allow_zero_h ? HRange::AllowZero : HRange::Strict);
      },
      py::arg("topology"), py::arg("n"), py::arg("h"), py::arg("delta") = py::none(), py::arg("seed") = py::none(),
      py::arg("allow_zero_h") = false);

  m.def(
      "mixing_set_from_w", [](const Array& w, double h) { return mixing_set_from_w(SymMatrix(to_matrix(w)), h); },
      py::arg("w"), py::arg("h"));

  m.def(
      "validate_assumptions",
      [](const MixingSet& s) {
        py::list out;
        for (const AssumptionCheck& c : validate_assumptions(s).checks)
          out.append(py::make_tuple(c.name, c.passed, c.violation));
        return out;
      },
      py::arg("mixing"), "List of (check name, passed, violation).");

  py::class_<GradientOracle>(m, "Task")
      .def_property_readonly("dim", &GradientOracle::dim)
      .def_property_readonly("n_agents", &GradientOracle::n_agents)
      .def_property_readonly("mu", &GradientOracle::mu)
      .def_property_readonly("L", &GradientOracle::L)
      .def(
          "value", [](const GradientOracle& t, std::size_t i, const Array& x) { return t.value(i, to_vector(x)); },
          py::arg("agent"), py::arg("x"))
      .def(
          "grad",
          [](const GradientOracle& t, std::size_t i, const Array& x) {
            Vector g(t.dim());
            t.full_grad(i, to_vector(x), g);
            return to_array(g);
          },
          py::arg("agent"), py::arg("x"))
      .def(
          "total_grad", [](const GradientOracle& t, const Array& x) { return to_array(t.total_grad(to_vector(x))); },
          py::arg("x"));

  py::class_<LinRegTask, GradientOracle>(m, "LinRegTask")
      .def(py::init([](const std::vector<std::pair<Array, Array>>& shards, double noise_std, double prior_var) {
             return LinRegTask(to_shards(shards), noise_std, prior_var);
           }),
           py::arg("shards"), py::arg("noise_std") = 1.0, py::arg("prior_var") = 10.0)
      .def("posterior", [](const LinRegTask& t) {
        const GaussianDist g = t.posterior();
        return py::make_tuple(to_array(g.mean), to_array(g.cov));
      });

  py::class_<LogRegTask, GradientOracle>(m, "LogRegTask")
      .def(py::init([](const std::vector<std::pair<Array, Array>>& shards, double prior_var) {
             return LogRegTask(to_shards(shards), prior_var);
           }),
           py::arg("shards"), py::arg("prior_var") = 10.0);

  py::class_<QuadraticTask, GradientOracle>(m, "QuadraticTask")
      .def(py::init([](const Array& a, const Array& centers) {
             const Matrix c = to_matrix(centers);
             std::vector<Vector> rows;
             for (std::size_t i = 0; i < c.rows(); ++i) rows.emplace_back(c.row(i).begin(), c.row(i).end());
             return QuadraticTask(to_vector(a), std::move(rows));
           }),
           py::arg("curvatures"), py::arg("centers"))
      .def("minimizer", [](const QuadraticTask& t) { return to_array(t.minimizer()); });

  m.def(
      "run_chain",
      [](const std::string& algorithm, const MixingSet& mixing, const GradientOracle& task, double eta,
         std::int64_t K, std::uint64_t seed, std::optional<std::size_t> batch, int temperature,
         std::int64_t record_every, std::optional<double> b) {
        SamplerConfig c;
        c.algorithm = parse_algorithm(algorithm);
        c.eta = eta;
        c.K = K;
        c.seed = seed;
        c.batch = batch;
        c.temperature = temperature;
        if (b) c.b_matrix = BMatrix::scaled_identity(*b);
        TrajectoryRecord rec;
        {
          py::gil_scoped_release release;
          rec = run_chain(c, mixing, task, record_every);
        }
        py::dict out;
        out["k"] = rec.iterations;
        out["x"] = stack(rec.x);
        out["v"] = stack(rec.v);
        std::vector<Matrix> means;
        for (const Vector& v : rec.mean) {
          Matrix row(1, v.size());
          std::copy(v.begin(), v.end(), row.data().begin());
          means.push_back(row);
        }
        out["mean"] = stack(means).attr("reshape")(static_cast<py::ssize_t>(means.size()), -1);
        return out;
      },
      py::arg("algorithm"), py::arg("mixing"), py::arg("task"), py::arg("eta"), py::arg("K"), py::arg("seed") = 0,
      py::arg("batch") = py::none(), py::arg("temperature") = 1, py::arg("record_every") = 1,
      py::arg("b") = py::none(),
      "Runs one chain. b sets B = b·I for the generalized chain (default B = W_tilde/eta).");

  m.def(
      "w2_gaussian",
      [](const Array& m1, const Array& s1, const Array& m2, const Array& s2) {
        return w2_gaussian({to_vector(m1), SymMatrix(to_matrix(s1))}, {to_vector(m2), SymMatrix(to_matrix(s2))});
      },
      py::arg("mean_a"), py::arg("cov_a"), py::arg("mean_b"), py::arg("cov_b"));

  m.def(
      "run_command",
      [](const std::string& command, const std::string& config,
         const std::map<std::string, std::string>& overrides) {
        using Fn = int (*)(const ExperimentConfig&, std::ostream&);
        static const std::map<std::string, Fn> table = {
            {"validate", cmd_validate}, {"run", cmd_run},       {"compare", cmd_compare},
            {"sweep-h", cmd_sweep_h},   {"theory", cmd_theory}, {"gen-data", cmd_gen_data}};
        const auto it = table.find(command);
        if (it == table.end()) throw ConfigError("unknown command '" + command + "'");
        const ExperimentConfig cfg = config_from(config, overrides);
        std::ostringstream os;
        int rc;
        {
          py::gil_scoped_release release;
          rc = it->second(cfg, os);
        }
        return py::make_tuple(rc, os.str());
      },
      py::arg("command"), py::arg("config"), py::arg("overrides") = std::map<std::string, std::string>{},
      "Runs a CLI subcommand in-process; returns (exit status, report text).");

  m.def(
      "theory_constants",
      [](const std::string& config, const std::map<std::string, std::string>& overrides, bool shrink) {
        const ExperimentConfig cfg = config_from(config, overrides);
        const Problem problem = build_problem(cfg);
        const MixingSet ms = build_network(cfg);
        ProblemParams p = problem_params(cfg, problem, ms);
        if (shrink && !validate_stepsize(p).passed) {
          const auto s = find_admissible(p);
          if (!s) throw AssumptionError("no admissible (h, eta) found");
          p = *s;
        }
        py::dict out;
        for (const auto& [k, v] : compute_constants(p).named()) out[py::str(k)] = v;
        out["eta"] = p.eta;
        out["h"] = p.h;
        return out;
      },
      py::arg("config"), py::arg("overrides") = std::map<std::string, std::string>{}, py::arg("shrink") = false);
}
