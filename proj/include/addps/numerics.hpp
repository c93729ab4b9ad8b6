#pragma once

#include <cstddef>
#include <vector>

#include "addps/errors.hpp"
#include "addps/rng.hpp"

namespace addps {

using Vec = std::vector<double>;

/// Dense row-major matrix. Entries are validated finite at construction.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, Vec entries);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(const Vec& d);
  static Matrix scaled_identity(std::size_t n, double c);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const Vec& entries() const { return data_; }
  Vec& mutable_entries() { return data_; }

  Matrix transposed() const;
  bool all_finite() const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  Vec data_;
};

// Vector kernels. Dimension mismatches raise Errc::DimensionMismatch.
Vec vec_add(const Vec& a, const Vec& b);
Vec vec_sub(const Vec& a, const Vec& b);
Vec vec_scale(const Vec& a, double c);
double vec_dot(const Vec& a, const Vec& b);
double vec_squared_norm(const Vec& a);
double vec_norm(const Vec& a);
bool vec_all_finite(const Vec& a);

Vec matvec(const Matrix& m, const Vec& x);
Vec matvec_transposed(const Matrix& m, const Vec& x);  // m^T x without forming m^T
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix mat_add(const Matrix& a, const Matrix& b);
Matrix mat_scale(const Matrix& a, double c);

/// Lower-triangular L with L L^T = m. `tol` bounds both the accepted
/// asymmetry and the pivot cutoff; pivots are compared against
/// tol * max diagonal entry.
Matrix cholesky(const Matrix& m, double tol = 1e-12);

Vec solve_spd(const Matrix& m, const Vec& b, double tol = 1e-12);
Matrix solve_spd_many(const Matrix& m, const Matrix& rhs, double tol = 1e-12);
Matrix spd_inverse(const Matrix& m, double tol = 1e-12);

Vec solve_lower_triangular(const Matrix& l, const Vec& b);
Vec solve_upper_from_lower(const Matrix& l, const Vec& b);  // solves L^T x = b

/// Symmetric eigendecomposition by cyclic Jacobi rotations,
/// m = vectors * diag(values) * vectors^T with eigenvalues descending.
struct SymEig {
  Vec values;
  Matrix vectors;  // columns are eigenvectors
};
SymEig sym_eig(const Matrix& m);

/// PSD square root via eigendecomposition; negative eigenvalues clamp to 0.
Matrix psd_sqrt(const Matrix& m);

Vec singular_values(const Matrix& a);  // descending
std::size_t numerical_rank(const Matrix& a, double rel_tol = 1e-8);

/// mean + cov_chol * eps with eps standard normal.
Vec gaussian_draw(const Vec& mean, const Matrix& cov_chol, SeededRng& rng);

}  // namespace addps
