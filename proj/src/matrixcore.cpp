#include "exlg/matrixcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "exlg/error.hpp"

namespace exlg {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x"
       << b.cols();
    throw Error(os.str());
  }
}

constexpr int kMaxJacobiSweeps = 100;

}  // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error("matrix product: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix sum");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] += bd[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix difference");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (double& v : c.data()) v *= s;
  return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) m = std::max(m, std::abs(ad[i] - bd[i]));
  return m;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

SymMatrix::SymMatrix(const Matrix& a) : a_(a.rows(), a.cols()) {
  if (a.rows() != a.cols()) throw Error("SymMatrix: input is not square");
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = i == j ? a(i, i) : 0.5 * (a(i, j) + a(j, i));
      if (!std::isfinite(v)) throw Error("SymMatrix: non-finite entry");
      a_(i, j) = v;
      a_(j, i) = v;
    }
  }
}

SymMatrix SymMatrix::identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m.a_(i, i) = diag[i];
  return m;
}

SymMatrix SymMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  Matrix a(n, n);
  std::size_t i = 0;
  for (const auto& r : rows) {
    if (r.size() != n) throw Error("SymMatrix::from_rows: ragged input");
    std::size_t j = 0;
    for (double v : r) a(i, j++) = v;
    ++i;
  }
  return SymMatrix(a);
}

void SymMatrix::set(std::size_t i, std::size_t j, double v) {
  a_(i, j) = v;
  a_(j, i) = v;
}

double SymMatrix::frobenius() const {
  double s = 0.0;
  for (double v : a_.data()) s += v * v;
  return std::sqrt(s);
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < order(); ++i) t += a_(i, i);
  return t;
}

SymMatrix Spectrum::reconstruct() const {
  const std::size_t n = eigvals.size();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += eigvecs(i, k) * eigvals[k] * eigvecs(j, k);
      a(i, j) = s;
      a(j, i) = s;
    }
  return SymMatrix(a);
}

Spectrum sym_eig(const SymMatrix& input, std::string_view name) {
  const std::size_t n = input.order();
  Matrix a = input.matrix();
  Matrix v = Matrix::identity(n);

  const double tol = 1e-14 * input.frobenius();
  auto off_mass = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_mass() > tol) {
    if (++sweep > kMaxJacobiSweeps) {
      std::ostringstream os;
      os << "sym_eig: Jacobi iteration did not converge on " << name << " (order " << n
         << ") after " << kMaxJacobiSweeps << " sweeps; off-diagonal mass " << off_mass();
      throw Error(os.str());
    }
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        // A <- Jᵀ A J on rows/cols p, q.
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  Spectrum out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.eigvals[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.eigvecs(i, k) = v(i, order[k]);
  }
  return out;
}

double spectral_norm(const SymMatrix& a) {
  if (a.order() == 0) return 0.0;
  const Spectrum s = sym_eig(a, "spectral_norm input");
  return std::max(std::abs(s.eigvals.front()), std::abs(s.eigvals.back()));
}

SymMatrix psd_sqrt(const SymMatrix& a, std::optional<double> clip_tol) {
  const std::size_t n = a.order();
  Spectrum s = sym_eig(a, "psd_sqrt input");
  double norm = 0.0;
  for (double l : s.eigvals) norm = std::max(norm, std::abs(l));
  const double tol = clip_tol.value_or(1e-10 * norm);
  for (double& l : s.eigvals) {
    if (l < -tol) {
      std::ostringstream os;
      os.precision(17);
      os << "psd_sqrt: matrix is not PSD, eigenvalue " << l << " below -" << tol;
      throw Error(os.str());
    }
    l = l < 0.0 ? 0.0 : std::sqrt(l);
  }
  Matrix r(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += s.eigvecs(i, k) * s.eigvals[k] * s.eigvecs(j, k);
      r(i, j) = acc;
      r(j, i) = acc;
    }
  return SymMatrix(r);
}

void mix_apply(const SymMatrix& m, const Matrix& x, Matrix& out) {
  const std::size_t n = m.order();
  if (x.rows() != n) {
    std::ostringstream os;
    os << "mix_apply: mixing matrix has order " << n << " but state block has " << x.rows()
       << " rows";
    throw Error(os.str());
  }
  if (&out == &x) throw Error("mix_apply: output must not alias input");
  const std::size_t d = x.cols();
  if (out.rows() != n || out.cols() != d) out = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto o = out.row(i);
    std::fill(o.begin(), o.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double mij = m(i, j);
      if (mij == 0.0) continue;
      auto xj = x.row(j);
      for (std::size_t c = 0; c < d; ++c) o[c] += mij * xj[c];
    }
  }
}

Matrix mix_apply(const SymMatrix& m, const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  mix_apply(m, x, out);
  return out;
}

namespace {

// Lower-triangular Cholesky factor; throws if A is not numerically PD.
Matrix cholesky(const SymMatrix& a) {
  const std::size_t n = a.order();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) throw Error("cholesky: matrix is not positive definite");
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

Vector cholesky_solve(const Matrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  Vector y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= l(i, k) * y[k];
    y[i] /= l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) y[ii] -= l(k, ii) * y[k];
    y[ii] /= l(ii, ii);
  }
  return y;
}

}  // namespace

Vector solve_spd(const SymMatrix& a, std::span<const double> b) {
  if (b.size() != a.order()) throw Error("solve_spd: dimension mismatch");
  return cholesky_solve(cholesky(a), b);
}

SymMatrix inverse_spd(const SymMatrix& a) {
  const std::size_t n = a.order();
  const Matrix l = cholesky(a);
  Matrix inv(n, n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    const Vector col = cholesky_solve(l, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return SymMatrix(inv);
}

SymMatrix congruence(const SymMatrix& m, const SymMatrix& s) {
  return SymMatrix(m.matrix() * s.matrix() * m.matrix().transpose());
}

}  // namespace exlg
