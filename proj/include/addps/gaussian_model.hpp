#pragma once

#include <vector>

#include "addps/numerics.hpp"
#include "addps/rng.hpp"

namespace addps {

/// Multivariate Gaussian with a possibly-singular (PSD) covariance.
struct GaussianModel {
  Vec mean;
  Matrix cov;

  std::size_t dim() const { return mean.size(); }

  /// Validates symmetry and an eigenvalue floor of -1e-10.
  static GaussianModel make(Vec mean, Matrix cov);

  static GaussianModel standard(std::size_t n) {
    return {Vec(n, 0.0), Matrix::identity(n)};
  }
  static GaussianModel isotropic(std::size_t n, double variance) {
    return {Vec(n, 0.0), Matrix::scaled_identity(n, variance)};
  }
};

/// Factor F with F F^T = cov: Cholesky when SPD, eigendecomposition square
/// root otherwise (handles singular posteriors and point masses).
Matrix gaussian_factor(const GaussianModel& g);

Vec gaussian_sample(const GaussianModel& g, const Matrix& factor, SeededRng& rng);

/// Sample mean and covariance with the n-1 denominator. Needs >= 2 samples.
GaussianModel fit_gaussian(const std::vector<Vec>& samples);

}  // namespace addps
