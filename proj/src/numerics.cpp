#include "addps/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace addps {

namespace {

void check_same_size(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size())
    raise(Errc::DimensionMismatch, std::string(what) + ": " + std::to_string(a.size()) +
                                       " vs " + std::to_string(b.size()));
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, Vec entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows_ * cols_)
    raise(Errc::DimensionMismatch, "matrix entries size " + std::to_string(data_.size()) +
                                       " != " + std::to_string(rows_ * cols_));
  if (!all_finite()) raise(Errc::NonFiniteForward, "matrix entries must be finite");
}

Matrix Matrix::identity(std::size_t n) { return scaled_identity(n, 1.0); }

Matrix Matrix::scaled_identity(std::size_t n, double c) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = c;
  return m;
}

Matrix Matrix::diagonal(const Vec& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool Matrix::all_finite() const { return vec_all_finite(data_); }

bool vec_all_finite(const Vec& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

Vec vec_add(const Vec& a, const Vec& b) {
  check_same_size(a, b, "vec_add");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vec vec_sub(const Vec& a, const Vec& b) {
  check_same_size(a, b, "vec_sub");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vec vec_scale(const Vec& a, double c) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * c;
  return out;
}

double vec_dot(const Vec& a, const Vec& b) {
  check_same_size(a, b, "vec_dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double vec_squared_norm(const Vec& a) { return vec_dot(a, a); }

double vec_norm(const Vec& a) { return std::sqrt(vec_squared_norm(a)); }

Vec matvec(const Matrix& m, const Vec& x) {
  if (m.cols() != x.size())
    raise(Errc::DimensionMismatch,
          "matvec: " + std::to_string(m.cols()) + " cols vs x size " + std::to_string(x.size()));
  Vec out(m.rows(), 0.0);
  const Vec& e = m.entries();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    const double* row = e.data() + i * m.cols();
    for (std::size_t j = 0; j < m.cols(); ++j) s += row[j] * x[j];
    out[i] = s;
  }
  return out;
}

Vec matvec_transposed(const Matrix& m, const Vec& x) {
  if (m.rows() != x.size())
    raise(Errc::DimensionMismatch, "matvec_transposed: " + std::to_string(m.rows()) +
                                       " rows vs x size " + std::to_string(x.size()));
  Vec out(m.cols(), 0.0);
  const Vec& e = m.entries();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* row = e.data() + i * m.cols();
    const double xi = x[i];
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += row[j] * xi;
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) raise(Errc::DimensionMismatch, "matmul shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Matrix mat_add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    raise(Errc::DimensionMismatch, "mat_add shape mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < out.mutable_entries().size(); ++i)
    out.mutable_entries()[i] += b.entries()[i];
  return out;
}

Matrix mat_scale(const Matrix& a, double c) {
  Matrix out = a;
  for (auto& v : out.mutable_entries()) v *= c;
  return out;
}

Matrix cholesky(const Matrix& m, double tol) {
  if (!m.square()) raise(Errc::NotSquare, "cholesky needs a square matrix");
  const std::size_t n = m.rows();
  double max_abs = 0.0, max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    max_diag = std::max(max_diag, std::abs(m(i, i)));
    for (std::size_t j = 0; j < n; ++j) max_abs = std::max(max_abs, std::abs(m(i, j)));
  }
  const double sym_tol = tol * std::max(1.0, max_abs);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > sym_tol)
        raise(Errc::NotSPD, "matrix is not symmetric within tolerance");

  const double pivot_floor = tol * std::max(max_diag, 1e-300);
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > pivot_floor))
      raise(Errc::NotSPD, "pivot " + std::to_string(d) + " at column " + std::to_string(j));
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

Vec solve_lower_triangular(const Matrix& l, const Vec& b) {
  const std::size_t n = l.rows();
  if (b.size() != n) raise(Errc::DimensionMismatch, "triangular solve size mismatch");
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < i; ++j) s -= l(i, j) * x[j];
    x[i] = s / l(i, i);
  }
  return x;
}

Vec solve_upper_from_lower(const Matrix& l, const Vec& b) {
  const std::size_t n = l.rows();
  if (b.size() != n) raise(Errc::DimensionMismatch, "triangular solve size mismatch");
  Vec x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= l(j, ii) * x[j];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

Vec solve_spd(const Matrix& m, const Vec& b, double tol) {
  const Matrix l = cholesky(m, tol);
  return solve_upper_from_lower(l, solve_lower_triangular(l, b));
}

Matrix solve_spd_many(const Matrix& m, const Matrix& rhs, double tol) {
  if (m.rows() != rhs.rows()) raise(Errc::DimensionMismatch, "solve_spd_many shape mismatch");
  const Matrix l = cholesky(m, tol);
  Matrix out(rhs.rows(), rhs.cols());
  Vec col(rhs.rows());
  for (std::size_t j = 0; j < rhs.cols(); ++j) {
    for (std::size_t i = 0; i < rhs.rows(); ++i) col[i] = rhs(i, j);
    Vec x = solve_upper_from_lower(l, solve_lower_triangular(l, col));
    for (std::size_t i = 0; i < rhs.rows(); ++i) out(i, j) = x[i];
  }
  return out;
}

Matrix spd_inverse(const Matrix& m, double tol) {
  return solve_spd_many(m, Matrix::identity(m.rows()), tol);
}

SymEig sym_eig(const Matrix& m) {
  if (!m.square()) raise(Errc::NotSquare, "sym_eig needs a square matrix");
  const std::size_t n = m.rows();
  Matrix a = m;
  // symmetrize: downstream callers pass numerically symmetric matrices
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = avg;
      a(j, i) = avg;
    }
  Matrix v = Matrix::identity(n);

  const int max_sweeps = 128;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30) break;

    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }

  SymEig out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  // sort eigenpairs descending
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t x, std::size_t y) { return out.values[x] > out.values[y]; });
  Vec sorted(n);
  Matrix vs(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    sorted[j] = out.values[idx[j]];
    for (std::size_t i = 0; i < n; ++i) vs(i, j) = v(i, idx[j]);
  }
  out.values = std::move(sorted);
  out.vectors = std::move(vs);
  return out;
}

Matrix psd_sqrt(const Matrix& m) {
  const SymEig eig = sym_eig(m);
  const std::size_t n = m.rows();
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double lam = std::sqrt(std::max(eig.values[k], 0.0));
    if (lam == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out(i, j) += lam * eig.vectors(i, k) * eig.vectors(j, k);
  }
  return out;
}

Vec singular_values(const Matrix& a) {
  // A symmetric matrix gets its values straight from the eigensolver: the
  // Gram route below squares the conditioning and floats a sqrt(eps) noise
  // floor under the spectrum, which is fatal for rank queries at tol 1e-8.
  if (a.square()) {
    double scale = 0.0, skew = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < a.cols(); ++j) {
        scale = std::max(scale, std::abs(a(i, j)));
        skew = std::max(skew, std::abs(a(i, j) - a(j, i)));
      }
    }
    if (skew <= 1e-12 * std::max(scale, 1e-300)) {
      SymEig eig = sym_eig(a);
      Vec sv(eig.values.size());
      for (std::size_t i = 0; i < sv.size(); ++i) sv[i] = std::abs(eig.values[i]);
      std::sort(sv.begin(), sv.end(), std::greater<double>());
      return sv;
    }
  }
  // eigenvalues of the smaller Gram matrix
  const bool wide = a.cols() >= a.rows();
  const Matrix g = wide ? matmul(a, a.transposed()) : matmul(a.transposed(), a);
  SymEig eig = sym_eig(g);
  Vec sv(eig.values.size());
  for (std::size_t i = 0; i < sv.size(); ++i) sv[i] = std::sqrt(std::max(eig.values[i], 0.0));
  return sv;
}

std::size_t numerical_rank(const Matrix& a, double rel_tol) {
  const Vec sv = singular_values(a);
  if (sv.empty() || sv[0] == 0.0) return 0;
  const double cutoff = rel_tol * sv[0];
  std::size_t r = 0;
  for (double s : sv)
    if (s >= cutoff) ++r;
  return r;
}

Vec gaussian_draw(const Vec& mean, const Matrix& cov_chol, SeededRng& rng) {
  if (cov_chol.rows() != mean.size() || cov_chol.cols() != mean.size())
    raise(Errc::DimensionMismatch, "gaussian_draw: factor shape does not match mean");
  const Vec eps = normal_vector(rng, mean.size());
  return vec_add(mean, matvec(cov_chol, eps));
}

}  // namespace addps
