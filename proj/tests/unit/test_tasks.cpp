#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "exlg/error.hpp"
#include "exlg/tasks.hpp"
#include "helpers.hpp"

using namespace exlg;

namespace {

Dataset make_dataset(std::initializer_list<std::initializer_list<double>> rows, std::initializer_list<double> y) {
  const std::size_t d = rows.begin()->size();
  Dataset s{Matrix(rows.size(), d), Vector(y)};
  std::size_t i = 0;
  for (const auto& r : rows) {
    std::size_t c = 0;
    for (double v : r) s.x(i, c++) = v;
    ++i;
  }
  return s;
}

Dataset empty_dataset(std::size_t d) { return Dataset{Matrix(0, d), {}}; }

// Largest relative error of the analytic gradient against central differences.
double fd_error(const GradientOracle& o, std::size_t agent, const Vector& x) {
  const std::size_t d = o.dim();
  Vector g(d);
  o.full_grad(agent, x, g);
  double worst = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    const double step = 1e-5 * std::max(1.0, std::abs(x[c]));
    Vector xp = x, xm = x;
    xp[c] += step;
    xm[c] -= step;
    const double fd = (o.value(agent, xp) - o.value(agent, xm)) / (2.0 * step);
    worst = std::max(worst, std::abs(fd - g[c]) / std::max(1.0, std::abs(g[c])));
  }
  return worst;
}

std::vector<std::vector<std::size_t>> all_subsets(std::size_t n, std::size_t b) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(b), true);
  do {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) s.push_back(i);
    out.push_back(s);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

}  // namespace

TEST_CASE("gen_linreg_data") {
  Rng rng(1);
  const Vector beta{1.0, 0.0};
  SUBCASE("zero noise") {
    const Dataset s = gen_linreg_data(50, 2, beta, 0.0, rng);
    for (std::size_t j = 0; j < s.size(); ++j) CHECK(s.y[j] == s.x(j, 0));
  }
  SUBCASE("residual variance") {
    const Dataset s = gen_linreg_data(100000, 2, beta, 1.0, rng);
    double m = 0.0, q = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double r = s.y[j] - s.x(j, 0);
      m += r;
      q += r * r;
    }
    m /= 1e5;
    const double var = q / 1e5 - m * m;
    CHECK(var == doctest::Approx(1.0).epsilon(0.03));
  }
  SUBCASE("5000 points in 2 dimensions") {
    const Dataset s = gen_linreg_data(5000, 2, beta, 1.0, rng);
    CHECK(s.size() == 5000);
    CHECK(s.dim() == 2);
  }
}

TEST_CASE("linreg_posterior") {
  SUBCASE("no data gives the prior") {
    const GaussianDist p = linreg_posterior(empty_dataset(2), 10.0, 1.0);
    CHECK(p.mean[0] == 0.0);
    CHECK(p.cov(0, 0) == doctest::Approx(10.0));
    CHECK(p.cov(0, 1) == 0.0);
  }
  SUBCASE("flat prior limit") {
    const GaussianDist p = linreg_posterior(make_dataset({{1.0}}, {2.0}), 1e8, 1.0);
    CHECK(std::abs(p.mean[0] - 2.0) < 1e-6);
    CHECK(std::abs(p.cov(0, 0) - 1.0) < 1e-6);
  }
  SUBCASE("d=2, three points against a hand solve") {
    const Dataset s = make_dataset({{1, 0}, {0, 1}, {1, 1}}, {1, 2, 4});
    const double lam = 2.0, xi = 0.5;
    const GaussianDist p = linreg_posterior(s, lam, xi);
    // precision = XᵀX/ξ² + I/λ = [[2,1],[1,2]]/0.25 + 0.5 I = [[8.5,4],[4,8.5]]
    const double a = 8.5, b = 4.0, det = a * a - b * b;
    // Xᵀy/ξ² = (5, 6)/0.25 = (20, 24)
    const double m0 = (a * 20 - b * 24) / det, m1 = (a * 24 - b * 20) / det;
    CHECK(p.mean[0] == doctest::Approx(m0).epsilon(1e-12));
    CHECK(p.mean[1] == doctest::Approx(m1).epsilon(1e-12));
    CHECK(p.cov(0, 0) == doctest::Approx(a / det).epsilon(1e-12));
    CHECK(p.cov(0, 1) == doctest::Approx(-b / det).epsilon(1e-12));
  }
}

TEST_CASE("linreg gradient") {
  Rng rng(2);
  const Vector beta{0.5, -1.0, 2.0};
  auto shards = partition_data(gen_linreg_data(120, 3, beta, 0.7, rng), 4, rng);
  const LinRegTask task(shards, 0.7, 10.0);

  SUBCASE("finite differences at 20 random points") {
    for (int t = 0; t < 20; ++t) {
      const Vector x = testutil::random_vec(3, rng, 2.0);
      CHECK(fd_error(task, static_cast<std::size_t>(t) % 4, x) <= 1e-5);
    }
  }
  SUBCASE("stationary at the posterior mean") {
    const GaussianDist p = task.posterior();
    const Vector g = task.total_grad(p.mean);
    const double n = std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
    const double m = std::sqrt(std::inner_product(p.mean.begin(), p.mean.end(), p.mean.begin(), 0.0));
    CHECK(n <= 1e-6 * (1.0 + m));
  }
  SUBCASE("least-squares point zeroes the data term") {
    const Dataset s = make_dataset({{1, 0}, {0, 1}}, {3, -2});
    const LinRegTask t({s}, 1.0, 1e300);
    Vector g(2);
    t.full_grad(0, Vector{3, -2}, g);
    CHECK(std::abs(g[0]) < 1e-12);
    CHECK(std::abs(g[1]) < 1e-12);
  }
}

TEST_CASE("gen_logreg_data") {
  Rng rng(4);
  SUBCASE("zero coefficients give balanced labels") {
    const Dataset s = gen_logreg_data(10000, 3, Vector{0, 0, 0}, rng);
    const double rate = std::accumulate(s.y.begin(), s.y.end(), 0.0) / 1e4;
    CHECK(std::abs(rate - 0.5) <= 0.02);
  }
  SUBCASE("huge coefficients give sign labels") {
    const Vector beta{1e6, -1e6, 5e5};
    const Dataset s = gen_logreg_data(2000, 3, beta, rng);
    std::size_t agree = 0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double t = beta[0] * s.x(j, 0) + beta[1] * s.x(j, 1) + beta[2] * s.x(j, 2);
      agree += (t > 0) == (s.y[j] == 1.0);
    }
    CHECK(agree >= 1998);
  }
  SUBCASE("feature variance 20") {
    const Dataset s = gen_logreg_data(20000, 3, Vector{1, -1, 0.5}, rng);
    double q = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) q += s.x(j, 1) * s.x(j, 1);
    CHECK(q / 20000.0 == doctest::Approx(20.0).epsilon(0.05));
  }
}

TEST_CASE("logreg gradient") {
  Rng rng(6);
  SUBCASE("single datum at zero") {
    const LogRegTask t({make_dataset({{2, -4}}, {1})}, 10.0);
    Vector g(2);
    t.full_grad(0, Vector{0, 0}, g);
    CHECK(g[0] == doctest::Approx(-1.0));
    CHECK(g[1] == doctest::Approx(2.0));
  }
  SUBCASE("prior only") {
    const LogRegTask t({empty_dataset(2), empty_dataset(2)}, 10.0);
    Vector g(2);
    t.full_grad(1, Vector{3, -1}, g);
    CHECK(g[0] == doctest::Approx(3.0 / 20.0));
    CHECK(g[1] == doctest::Approx(-1.0 / 20.0));
  }
  SUBCASE("finite differences at 20 random points") {
    auto shards = partition_data(gen_logreg_data(300, 3, Vector{1, -1, 0.5}, rng), 6, rng);
    const LogRegTask t(shards, 10.0);
    for (int k = 0; k < 20; ++k) {
      const Vector x = testutil::random_vec(3, rng, 0.5);
      CHECK(fd_error(t, static_cast<std::size_t>(k) % 6, x) <= 1e-5);
    }
  }
  SUBCASE("labels must be binary") {
    CHECK_THROWS_AS(LogRegTask({make_dataset({{1}}, {2})}, 1.0), ConfigError);
  }
}

TEST_CASE("minibatch gradient") {
  Rng rng(8);
  const Dataset four = make_dataset({{1, 2}, {-1, 0.5}, {0.3, -2}, {2, 2}}, {1, 0, 1, 1});
  const LogRegTask lg({four}, 5.0);
  const LinRegTask ln({make_dataset({{1, 2}, {-1, 0.5}, {0.3, -2}, {2, 2}}, {0.2, -1, 3, 1})}, 1.0, 5.0);
  const Vector x{0.4, -0.3};

  SUBCASE("b = n is the full gradient") {
    Vector full(2), mb(2);
    lg.full_grad(0, x, full);
    lg.minibatch_grad(0, x, 4, rng, mb);
    CHECK(full == mb);
  }
  SUBCASE("exhaustive enumeration") {
    for (const GradientOracle* o : {static_cast<const GradientOracle*>(&lg), static_cast<const GradientOracle*>(&ln)})
      for (std::size_t b = 1; b <= 3; ++b) {
        Vector full(2), acc(2, 0.0), g(2);
        o->full_grad(0, x, full);
        const auto subsets = all_subsets(4, b);
        for (const auto& s : subsets) {
          o->batch_grad(0, x, s, g);
          for (std::size_t c = 0; c < 2; ++c) acc[c] += g[c] / static_cast<double>(subsets.size());
        }
        for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(acc[c] - full[c]) <= 1e-12);
      }
  }
  SUBCASE("Monte Carlo on a larger task") {
    const Vector beta{1, -1, 0.5};
    auto shards = partition_data(gen_logreg_data(600, 3, beta, rng), 2, rng);
    const LogRegTask t(shards, 10.0);
    const Vector at{0.2, 0.1, -0.3};
    Vector full(3), g(3), m(3, 0.0), q(3, 0.0);
    t.full_grad(1, at, full);
    const int draws = 10000;
    for (int k = 0; k < draws; ++k) {
      t.minibatch_grad(1, at, 32, rng, g);
      for (std::size_t c = 0; c < 3; ++c) {
        m[c] += g[c];
        q[c] += g[c] * g[c];
      }
    }
    for (std::size_t c = 0; c < 3; ++c) {
      const double mean = m[c] / draws;
      const double se = std::sqrt((q[c] / draws - mean * mean) / draws);
      CHECK(std::abs(mean - full[c]) <= 3.0 * se);
    }
  }
  SUBCASE("batch outside [1, n]") {
    Vector g(2);
    CHECK_THROWS_AS(lg.minibatch_grad(0, x, 0, rng, g), ConfigError);
    CHECK_THROWS_AS(lg.minibatch_grad(0, x, 5, rng, g), ConfigError);
  }
  SUBCASE("sampling without replacement") {
    for (int k = 0; k < 100; ++k) {
      auto s = sample_without_replacement(10, 4, rng);
      std::sort(s.begin(), s.end());
      CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
      CHECK(s.back() < 10);
    }
  }
}

TEST_CASE("mu_L_bounds") {
  SUBCASE("no data") {
    const LinRegTask t({empty_dataset(2), empty_dataset(2)}, 1.0, 10.0);
    CHECK(t.mu() == doctest::Approx(1.0 / 20.0));
    CHECK(t.L() == doctest::Approx(1.0 / 20.0));
  }
  SUBCASE("d=1, X = {1, 2}") {
    const LinRegTask t({make_dataset({{1}, {2}}, {0, 0})}, 1.0, 1e300);
    CHECK(t.L() == doctest::Approx(5.0));
    CHECK(t.hessian(0, Vector{0.0})(0, 0) == doctest::Approx(5.0));
  }
  SUBCASE("L > mu on generated tasks") {
    Rng rng(12);
    const LinRegTask ln(partition_data(gen_linreg_data(1000, 2, Vector{1, -1}, 1.0, rng), 20, rng), 1.0, 10.0);
    CHECK(ln.L() > ln.mu());
    const LogRegTask lg(partition_data(gen_logreg_data(1000, 3, Vector{1, -1, 0.5}, rng), 6, rng), 10.0);
    CHECK(lg.L() > lg.mu());
    CHECK(lg.mu() == doctest::Approx(1.0 / 60.0));
  }
}

TEST_CASE("partition_data") {
  Rng rng(13);
  const Dataset all = gen_linreg_data(5000, 2, Vector{1, -1}, 1.0, rng);
  SUBCASE("equal disjoint shards") {
    const auto shards = partition_data(all, 20, rng);
    CHECK(shards.size() == 20);
    for (const auto& s : shards) CHECK(s.size() == 250);
    std::vector<double> a(all.y), b(concat(shards).y);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
  SUBCASE("one agent") {
    const auto shards = partition_data(all, 1, rng);
    CHECK(shards.size() == 1);
    CHECK(shards[0].size() == 5000);
  }
  SUBCASE("more agents than points") {
    CHECK_THROWS_AS(partition_data(gen_linreg_data(3, 2, Vector{1, -1}, 1.0, rng), 4, rng), ConfigError);
  }
}

TEST_CASE("csv datasets") {
  const std::string path = "csv_test.csv";
  SUBCASE("round trip") {
    const Dataset s = make_dataset({{0.1, 1e-7}, {-3.25, 12345.678901234567}, {2.0 / 3.0, -0.0}}, {1, 0, 1});
    write_csv_dataset(path, s);
    CsvOptions o;
    o.label_column = std::string("label");
    o.standardize = false;
    CsvLoadInfo info;
    const Dataset r = load_csv_dataset(path, o, &info);
    CHECK(info.had_header);
    CHECK(r.x == s.x);
    CHECK(r.y == s.y);
  }
  SUBCASE("constant column standardizes to zeros") {
    {
      std::ofstream f(path);
      f << "1,5,0.5\n0,5,1.5\n1,5,2.5\n";
    }
    CsvOptions o;
    const Dataset r = load_csv_dataset(path, o);
    CHECK(r.dim() == 2);
    for (std::size_t j = 0; j < 3; ++j) CHECK(r.x(j, 0) == 0.0);
    CHECK(r.x(0, 1) == doctest::Approx(-std::sqrt(1.5)));
  }
  SUBCASE("string labels and ignored id column") {
    {
      std::ofstream f(path);
      f << "842302,M,1.0,2.0\n842517,B,2.0,1.0\n84300903,M,3.0,0.0\n";
    }
    CsvOptions o;
    o.label_column = std::size_t{1};
    o.positive_label = "M";
    o.ignore_columns = {std::size_t{0}};
    o.standardize = false;
    const Dataset r = load_csv_dataset(path, o);
    CHECK(r.dim() == 2);
    CHECK(r.y == Vector{1, 0, 1});
    CHECK(r.x(2, 0) == 3.0);
  }
  SUBCASE("descriptor first line of a different width") {
    {
      std::ofstream f(path);
      f << "3,2,malignant,benign\n1.0,2.0,0\n2.0,1.0,1\n3.0,0.0,1\n";
    }
    CsvOptions o;
    o.label_column = std::size_t{2};
    o.standardize = false;
    CsvLoadInfo info;
    const Dataset r = load_csv_dataset(path, o, &info);
    CHECK(info.had_header);
    CHECK(r.size() == 3);
    CHECK(r.y == Vector{0, 1, 1});
    CHECK(r.x(1, 0) == 2.0);
    o.label_column = std::string("benign");
    CHECK_THROWS_AS(load_csv_dataset(path, o), ConfigError);
  }
  SUBCASE("non-numeric feature reports the line") {
    {
      std::ofstream f(path);
      f << "1,2\n0,x\n";
    }
    CHECK_THROWS_WITH_AS(load_csv_dataset(path, CsvOptions{}), doctest::Contains(":2"), ConfigError);
  }
  std::remove(path.c_str());
}

TEST_CASE("find_minimizer") {
  Rng rng(21);
  const LogRegTask t(partition_data(gen_logreg_data(400, 3, Vector{1, -1, 0.5}, rng), 4, rng), 10.0);
  const Vector x = find_minimizer(t);
  const Vector g = t.total_grad(x);
  for (double v : g) CHECK(std::abs(v) < 1e-8);

  const QuadraticTask q({1.0, 3.0}, {Vector{0, 0}, Vector{4, -4}});
  const Vector m = q.minimizer();
  CHECK(m[0] == doctest::Approx(3.0));
  CHECK(m[1] == doctest::Approx(-3.0));
  CHECK(q.mu() == 1.0);
  CHECK(q.L() == 3.0);
}
