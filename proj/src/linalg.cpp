#include "gmmot/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gmmot {

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidInput("multiply: shape mismatch");
  const int n = a.rows(), k = a.cols(), m = b.cols();
  Matrix c(n, m);
  for (int i = 0; i < n; ++i) {
    double* ci = c.data() + static_cast<std::size_t>(i) * m;
    for (int l = 0; l < k; ++l) {
      const double ail = a(i, l);
      const double* bl = b.data() + static_cast<std::size_t>(l) * m;
      for (int j = 0; j < m; ++j) ci[j] += ail * bl[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

double trace(const Matrix& a) {
  double t = 0.0;
  for (int i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
  return t;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  const double* p = a.data();
  const std::size_t n = static_cast<std::size_t>(a.rows()) * a.cols();
  for (std::size_t i = 0; i < n; ++i) s += p[i] * p[i];
  return std::sqrt(s);
}

SymMatrix::SymMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() < 1)
    throw InvalidInput("SymMatrix: must be square with dim >= 1");
  for (int i = 0; i < entries_.rows(); ++i)
    for (int j = 0; j < i; ++j) {
      const double avg = 0.5 * (entries_(i, j) + entries_(j, i));
      entries_(i, j) = entries_(j, i) = avg;
    }
}

namespace {

bool all_finite(const Matrix& a) {
  const double* p = a.data();
  const std::size_t n = static_cast<std::size_t>(a.rows()) * a.cols();
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

// Householder reduction to tridiagonal form. On output d holds the diagonal
// and e[1..n-1] the subdiagonal. When accumulate is set, a is overwritten with
// the orthogonal transform Q (input = Q T Q^T); otherwise a is scratch.
void tridiagonalize(Matrix& a, Vector& d, Vector& e, bool accumulate) {
  const int n = a.rows();
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (int i = n - 1; i >= 1; --i) {
    const int l = i - 1;
    double h = 0.0, scale = 0.0;
    if (l > 0) {
      for (int k = 0; k <= l; ++k) scale += std::fabs(a(i, k));
      if (scale == 0.0) {
        e[i] = a(i, l);
      } else {
        for (int k = 0; k <= l; ++k) {
          a(i, k) /= scale;
          h += a(i, k) * a(i, k);
        }
        double f = a(i, l);
        double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        a(i, l) = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          if (accumulate) a(j, i) = a(i, j) / h;
          g = 0.0;
          for (int k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
          for (int k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
          e[j] = g / h;
          f += e[j] * a(i, j);
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = a(i, j);
          e[j] = g = e[j] - hh * f;
          for (int k = 0; k <= j; ++k) a(j, k) -= f * e[k] + g * a(i, k);
        }
      }
    } else {
      e[i] = a(i, l);
    }
    d[i] = h;
  }
  if (accumulate) d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    if (accumulate) {
      const int l = i - 1;
      if (d[i] != 0.0) {
        for (int j = 0; j <= l; ++j) {
          double g = 0.0;
          for (int k = 0; k <= l; ++k) g += a(i, k) * a(k, j);
          for (int k = 0; k <= l; ++k) a(k, j) -= g * a(k, i);
        }
      }
      d[i] = a(i, i);
      a(i, i) = 1.0;
      for (int j = 0; j <= l; ++j) a(j, i) = a(i, j) = 0.0;
    } else {
      d[i] = a(i, i);
    }
  }
}

// Implicit-shift QL on a tridiagonal matrix. When z is non-null its columns
// accumulate the eigenvectors.
void ql_implicit(Vector& d, Vector& e, Matrix* z) {
  const int n = static_cast<int>(d.size());
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) <= 2.3e-16 * dd + 1e-300) break;
      }
      if (m != l) {
        if (iter++ == 64) throw NumericalError("sym_eig: QL did not converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::fabs(r) : -std::fabs(r)));
        double s = 1.0, c = 1.0, p = 0.0;
        int i = m - 1;
        for (; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          if (z) {
            for (int k = 0; k < n; ++k) {
              f = (*z)(k, i + 1);
              (*z)(k, i + 1) = s * (*z)(k, i) + c * f;
              (*z)(k, i) = c * (*z)(k, i) - s * f;
            }
          }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

void sort_descending(Vector& d, Matrix* z) {
  const int n = static_cast<int>(d.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return d[i] > d[j]; });
  Vector ds(n);
  for (int i = 0; i < n; ++i) ds[i] = d[order[i]];
  d = std::move(ds);
  if (z) {
    Matrix zs(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) zs(i, j) = (*z)(i, order[j]);
    *z = std::move(zs);
  }
}

}  // namespace

EigenDecomposition sym_eig(const SymMatrix& a) {
  if (!all_finite(a.entries())) throw InvalidInput("sym_eig: non-finite entries");
  Matrix z = a.entries();
  Vector d, e;
  tridiagonalize(z, d, e, /*accumulate=*/true);
  ql_implicit(d, e, &z);
  sort_descending(d, &z);
  return {std::move(d), std::move(z)};
}

Vector sym_eigenvalues(const SymMatrix& a) {
  if (!all_finite(a.entries())) throw InvalidInput("sym_eigenvalues: non-finite entries");
  Matrix scratch = a.entries();
  Vector d, e;
  tridiagonalize(scratch, d, e, /*accumulate=*/false);
  ql_implicit(d, e, nullptr);
  sort_descending(d, nullptr);
  return d;
}

PsdMatrix::PsdMatrix(SymMatrix s) : sym_(std::move(s)) {
  if (!all_finite(sym_.entries())) throw InvalidInput("PsdMatrix: non-finite entries");
  const double norm = frobenius_norm(sym_.entries());
  EigenDecomposition eig = sym_eig(sym_);
  const double floor = -kPsdTolerance * norm;
  bool clamped = false;
  for (double& lam : eig.eigenvalues) {
    if (lam < floor)
      throw NotPsd("PsdMatrix: eigenvalue below PSD tolerance");
    if (lam < 0.0) {
      lam = 0.0;
      clamped = true;
    }
  }
  if (clamped) {
    // Rebuild V diag(lambda+) V^T so the stored entries honor the invariant.
    const int n = dim();
    Matrix scaled(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        scaled(i, j) = eig.eigenvectors(i, j) * eig.eigenvalues[j];
    sym_ = SymMatrix(multiply(scaled, transpose(eig.eigenvectors)));
  }
}

PsdMatrix PsdMatrix::trusted(SymMatrix s) { return PsdMatrix(std::move(s), Trusted{}); }

LowerTriangular::LowerTriangular(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() < 1)
    throw InvalidInput("LowerTriangular: must be square with dim >= 1");
  for (int i = 0; i < entries_.rows(); ++i)
    for (int j = i + 1; j < entries_.cols(); ++j) entries_(i, j) = 0.0;
}

double& LowerTriangular::at(int i, int j) {
  if (j > i) throw InvalidInput("LowerTriangular: upper entry is fixed at zero");
  return entries_(i, j);
}

PsdMatrix sqrtm_psd(const PsdMatrix& a) {
  EigenDecomposition eig = sym_eig(a.sym());
  const int n = a.dim();
  Matrix scaled(n, n);
  for (int j = 0; j < n; ++j) {
    const double root = std::sqrt(std::max(0.0, eig.eigenvalues[j]));
    for (int i = 0; i < n; ++i) scaled(i, j) = eig.eigenvectors(i, j) * root;
  }
  return PsdMatrix::trusted(SymMatrix(multiply(scaled, transpose(eig.eigenvectors))));
}

namespace {

// Plain PSD Cholesky; zero-ish pivots produce a zero column. Returns false
// when a pivot is genuinely negative.
bool try_cholesky(const Matrix& a, Matrix& l, double pivot_floor) {
  const int n = a.rows();
  l = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (int k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (diag < -pivot_floor) return false;
    if (diag <= pivot_floor) {
      l(j, j) = 0.0;
      continue;  // semidefinite direction; leave the column zero
    }
    const double root = std::sqrt(diag);
    l(j, j) = root;
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / root;
    }
  }
  return true;
}

}  // namespace

LowerTriangular cholesky(const PsdMatrix& a) {
  const int n = a.dim();
  const double tr = trace(a.entries());
  const double pivot_floor = 1e-14 * std::max(1.0, tr);
  Matrix l;
  if (try_cholesky(a.entries(), l, pivot_floor)) return LowerTriangular(std::move(l));
  // One round of jitter for rank-deficient input, then give up.
  Matrix jittered = a.entries();
  const double lambda = 1e-12 * tr / n;
  for (int i = 0; i < n; ++i) jittered(i, i) += lambda;
  if (try_cholesky(jittered, l, pivot_floor)) return LowerTriangular(std::move(l));
  throw NotPsd("cholesky: matrix is not factorizable");
}

double quad_form(const SymMatrix& a, std::span<const double> v) {
  const int n = a.dim();
  if (static_cast<int>(v.size()) != n) throw InvalidInput("quad_form: dimension mismatch");
  double total = 0.0;
  double scale = 0.0;
  for (int i = 0; i < n; ++i) {
    const std::span<const double> row = a.entries().row(i);
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += row[j] * v[j];
    total += v[i] * s;
    scale += std::fabs(v[i] * s);
  }
  if (total < 0.0 && -total <= 1e-13 * (1.0 + scale)) total = 0.0;
  return total;
}

}  // namespace gmmot
