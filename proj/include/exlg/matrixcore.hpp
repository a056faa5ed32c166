#pragma once

// Small dense linear algebra: symmetric eigendecomposition by cyclic Jacobi,
// PSD square roots, SPD solves, and the Kronecker-structured mixing product
// (M ⊗ I_d)·x applied to an N×d block without forming the Nd×Nd matrix.
//
// Everything is row-major and sized for N, d <= 64.

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace exlg {

using Vector = std::vector<double>;

/// Row-major dense matrix. Also used as the N×d block state of an agent ensemble
/// (row i holds agent i's d-vector).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  Matrix transpose() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

/// max_ij |a_ij - b_ij|; throws on shape mismatch.
double max_abs_diff(const Matrix& a, const Matrix& b);
double max_abs(const Matrix& a);

/// Square symmetric matrix. The constructor symmetrizes its input as (A + Aᵀ)/2,
/// so entries(i,j) == entries(j,i) holds bit-for-bit afterwards.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n) : a_(n, n) {}
  explicit SymMatrix(const Matrix& a);

  static SymMatrix identity(std::size_t n);
  static SymMatrix diagonal(std::span<const double> diag);
  static SymMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t order() const { return a_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return a_(i, j); }

  /// Writes both (i,j) and (j,i).
  void set(std::size_t i, std::size_t j, double v);

  const Matrix& matrix() const { return a_; }

  double max_abs_entry() const { return max_abs(a_); }
  double frobenius() const;
  double trace() const;

  SymMatrix operator+(const SymMatrix& o) const { return SymMatrix(a_ + o.a_); }
  SymMatrix operator-(const SymMatrix& o) const { return SymMatrix(a_ - o.a_); }
  friend SymMatrix operator*(double s, const SymMatrix& m) { return SymMatrix(s * m.a_); }

 private:
  Matrix a_;
};

/// Eigenpairs with eigenvalues ascending; column k of `eigvecs` pairs with eigvals[k].
struct Spectrum {
  Vector eigvals;
  Matrix eigvecs;

  /// Q·diag(λ)·Qᵀ
  SymMatrix reconstruct() const;
};

/// Cyclic Jacobi eigensolver. Converges when the off-diagonal Frobenius mass falls
/// below 1e-14·‖A‖_F; throws exlg::Error naming `name` if that takes more than
/// 100 sweeps.
Spectrum sym_eig(const SymMatrix& a, std::string_view name = "matrix");

/// Largest absolute eigenvalue.
double spectral_norm(const SymMatrix& a);

/// Symmetric PSD square root. Eigenvalues in [-clip_tol, 0) are clamped to zero;
/// anything below -clip_tol is a "not PSD" error. Default clip_tol is
/// 1e-10·‖A‖₂.
SymMatrix psd_sqrt(const SymMatrix& a, std::optional<double> clip_tol = std::nullopt);

/// out = (M ⊗ I_d)·x for an N×d block x, i.e. out.row(i) = Σ_j M(i,j)·x.row(j).
void mix_apply(const SymMatrix& m, const Matrix& x, Matrix& out);
Matrix mix_apply(const SymMatrix& m, const Matrix& x);

/// Cholesky factorization based solve of A·x = b for symmetric positive definite A.
Vector solve_spd(const SymMatrix& a, std::span<const double> b);
SymMatrix inverse_spd(const SymMatrix& a);

/// M·S·Mᵀ, symmetrized.
SymMatrix congruence(const SymMatrix& m, const SymMatrix& s);

}  // namespace exlg
