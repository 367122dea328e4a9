#pragma once

#include <span>
#include <vector>

#include "gmmot/common.hpp"

namespace gmmot {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw InvalidInput("Matrix: negative shape");
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<const double> row(int i) const {
    return {data_.data() + static_cast<std::size_t>(i) * cols_, static_cast<std::size_t>(cols_)};
  }

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
double trace(const Matrix& a);
double frobenius_norm(const Matrix& a);

/// Symmetric matrix; symmetry is enforced at construction by averaging the
/// off-diagonal pairs.
class SymMatrix {
 public:
  explicit SymMatrix(Matrix entries);

  int dim() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }

 private:
  Matrix entries_;
};

/// Relative tolerance below which negative eigenvalues of a nominally PSD
/// matrix are treated as rounding noise and clamped to zero.
inline constexpr double kPsdTolerance = 1e-9;

/// Symmetric positive semi-definite matrix, validated at construction:
/// eigenvalues below -kPsdTolerance * ||A|| raise NotPsd; small negative ones
/// are clamped to zero (the entries are rebuilt only if clamping occurred).
class PsdMatrix {
 public:
  explicit PsdMatrix(SymMatrix s);
  explicit PsdMatrix(Matrix entries) : PsdMatrix(SymMatrix(std::move(entries))) {}

  /// Wraps a matrix that is PSD by construction (e.g. Q Q^T + s^2 I) without
  /// paying for an eigenvalue validation. Callers must guarantee the claim.
  static PsdMatrix trusted(SymMatrix s);

  int dim() const { return sym_.dim(); }
  const SymMatrix& sym() const { return sym_; }
  const Matrix& entries() const { return sym_.entries(); }
  double operator()(int i, int j) const { return sym_(i, j); }

 private:
  struct Trusted {};
  PsdMatrix(SymMatrix s, Trusted) : sym_(std::move(s)) {}
  SymMatrix sym_;
};

/// Lower triangular matrix; entries above the diagonal are zeroed at
/// construction.
class LowerTriangular {
 public:
  explicit LowerTriangular(Matrix entries);
  explicit LowerTriangular(int dim) : entries_(dim, dim) {}

  int dim() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }
  double& at(int i, int j);

 private:
  Matrix entries_;
};

/// Result of sym_eig: eigenvalues in descending order, eigenvectors as the
/// columns of an orthogonal matrix.
struct EigenDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
};

/// Full eigendecomposition of a symmetric matrix (Householder
/// tridiagonalization followed by implicit-shift QL).
EigenDecomposition sym_eig(const SymMatrix& a);

/// Eigenvalues only (descending); cheaper than sym_eig when vectors are not
/// needed.
Vector sym_eigenvalues(const SymMatrix& a);

/// PSD square root: R with R * R = A. Eigenvalues within the PSD tolerance of
/// zero are clamped before the square root.
PsdMatrix sqrtm_psd(const PsdMatrix& a);

/// Cholesky factor L with L * L^T = A (+ a one-shot jitter of
/// 1e-12 * tr(A)/dim on rank-deficient input). Throws NotPsd if the
/// factorization still fails.
LowerTriangular cholesky(const PsdMatrix& a);

/// v^T A v; tiny negative rounding values are clamped to zero.
double quad_form(const SymMatrix& a, std::span<const double> v);

}  // namespace gmmot
