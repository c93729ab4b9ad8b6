#pragma once

#include "addps/gaussian_model.hpp"
#include "addps/numerics.hpp"
#include "addps/rng.hpp"

namespace addps {

/// Linear-Gaussian observation model: x ~ N(0, sigma_x2 I_N), z = A x,
/// z_hat = z + n with n ~ N(0, sigma_n2 I_k'). A is k' x N with full row
/// rank; no power normalization is applied in this setting.
struct LinearGaussianProblem {
  Matrix a;
  double sigma_x2 = 1.0;
  double sigma_n2 = 1.0;

  std::size_t obs_dim() const { return a.rows(); }
  std::size_t source_dim() const { return a.cols(); }

  /// Validates sigma_x2 > 0, sigma_n2 >= 0 and full row rank
  /// (singular values > 1e-8).
  static LinearGaussianProblem make(Matrix a, double sigma_x2, double sigma_n2);
};

/// MAP estimate for the scalar channel: alpha * z_hat with
/// alpha = sigma_x2 / (sigma_x2 + sigma_n2).
double scalar_map(double z_hat, double sigma_x2, double sigma_n2);

/// (A^T A + (sigma_n2/sigma_x2) I)^-1 A^T z_hat. Needs sigma_n2 > 0.
Vec linear_map_primal(const LinearGaussianProblem& p, const Vec& z_hat);

/// Push-through form sigma_x2 A^T (sigma_x2 A A^T + sigma_n2 I)^-1 z_hat;
/// algebraically identical to the primal solution. Needs sigma_n2 > 0.
Vec linear_map_dual(const LinearGaussianProblem& p, const Vec& z_hat);

/// Distribution of the MAP output over the observation marginal:
/// mean 0, covariance sigma_x2^2 A^T Sigma_z^-1 A with
/// Sigma_z = sigma_x2 A A^T + sigma_n2 I. Rank <= k'; allows sigma_n2 = 0.
GaussianModel map_output_covariance(const LinearGaussianProblem& p);

/// Exact posterior p(x | z_hat): mean equal to the MAP point, covariance
/// (I/sigma_x2 + A^T A/sigma_n2)^-1. Needs sigma_n2 > 0.
GaussianModel exact_posterior(const LinearGaussianProblem& p, const Vec& z_hat);

/// z_hat-independent pieces of the posterior: mean = mean_map * z_hat and a
/// fixed covariance. sigma_n2 = 0 degenerates to the exact conditional on
/// A x = z_hat (singular PSD covariance, mean the min-norm solution).
struct PosteriorKernel {
  Matrix mean_map;
  Matrix cov;
};
PosteriorKernel posterior_kernel(const LinearGaussianProblem& p);

enum class MarginalEstimator { PosteriorDraw, MapPoint };

/// Monte-Carlo realization of the marginal-coverage argument: draw
/// x ~ prior, z_hat ~ channel, estimate x (posterior draw or MAP point),
/// fit a Gaussian to the estimates and return its squared W2 distance to
/// the prior. sigma_n2 = 0 uses the exact conditional on the linear
/// constraint A x = z_hat.
double posterior_sampling_marginal_check(const LinearGaussianProblem& p, std::size_t n,
                                         SeededRng& rng,
                                         MarginalEstimator estimator = MarginalEstimator::PosteriorDraw);

}  // namespace addps
