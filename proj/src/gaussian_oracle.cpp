#include "addps/gaussian_oracle.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "addps/errors.hpp"
#include "addps/metrics.hpp"

namespace addps {

LinearGaussianProblem LinearGaussianProblem::make(Matrix a, double sigma_x2, double sigma_n2) {
  if (sigma_x2 <= 0.0) raise(Errc::ValidationError, "sigma_x2 must be positive");
  if (sigma_n2 < 0.0) raise(Errc::ValidationError, "sigma_n2 must be nonnegative");
  if (a.rows() == 0 || a.rows() > a.cols()) {
    raise(Errc::ValidationError, "observation matrix must have 1 <= rows <= cols");
  }
  const Vec sv = singular_values(a);
  if (sv.size() < a.rows() || sv[a.rows() - 1] <= 1e-8) {
    raise(Errc::ValidationError, "observation matrix is row-rank deficient");
  }
  return {std::move(a), sigma_x2, sigma_n2};
}

double scalar_map(double z_hat, double sigma_x2, double sigma_n2) {
  if (sigma_x2 <= 0.0) raise(Errc::ValidationError, "sigma_x2 must be positive");
  if (sigma_n2 < 0.0) raise(Errc::ValidationError, "sigma_n2 must be nonnegative");
  return sigma_x2 / (sigma_x2 + sigma_n2) * z_hat;
}

namespace {

void check_obs(const LinearGaussianProblem& p, const Vec& z_hat) {
  if (z_hat.size() != p.obs_dim()) {
    raise(Errc::DimensionMismatch, "observation length " + std::to_string(z_hat.size()) +
                                       ", expected " + std::to_string(p.obs_dim()));
  }
}

void require_noise(const LinearGaussianProblem& p, const char* what) {
  if (p.sigma_n2 <= 0.0) {
    raise(Errc::SingularSystem, std::string(what) + " needs sigma_n2 > 0");
  }
}

// Sigma_z = sigma_x2 A A^T + sigma_n2 I (SPD for full-row-rank A).
Matrix observation_covariance(const LinearGaussianProblem& p) {
  Matrix m = mat_scale(matmul(p.a, p.a.transposed()), p.sigma_x2);
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += p.sigma_n2;
  return m;
}

}  // namespace

Vec linear_map_primal(const LinearGaussianProblem& p, const Vec& z_hat) {
  check_obs(p, z_hat);
  require_noise(p, "linear_map_primal");
  Matrix m = matmul(p.a.transposed(), p.a);
  const double ridge = p.sigma_n2 / p.sigma_x2;
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += ridge;
  return solve_spd(m, matvec_transposed(p.a, z_hat));
}

Vec linear_map_dual(const LinearGaussianProblem& p, const Vec& z_hat) {
  check_obs(p, z_hat);
  require_noise(p, "linear_map_dual");
  return vec_scale(matvec_transposed(p.a, solve_spd(observation_covariance(p), z_hat)),
                   p.sigma_x2);
}

GaussianModel map_output_covariance(const LinearGaussianProblem& p) {
  // sigma_x2^2 A^T Sigma_z^-1 A, PSD with rank <= obs_dim.
  const Matrix inv_sz = spd_inverse(observation_covariance(p));
  Matrix cov = mat_scale(matmul(p.a.transposed(), matmul(inv_sz, p.a)), p.sigma_x2 * p.sigma_x2);
  // symmetrize round-off
  for (std::size_t i = 0; i < cov.rows(); ++i) {
    for (std::size_t j = i + 1; j < cov.cols(); ++j) {
      const double s = 0.5 * (cov(i, j) + cov(j, i));
      cov(i, j) = s;
      cov(j, i) = s;
    }
  }
  return {Vec(p.source_dim(), 0.0), std::move(cov)};
}

PosteriorKernel posterior_kernel(const LinearGaussianProblem& p) {
  if (p.sigma_n2 > 0.0) {
    Matrix prec = matmul(p.a.transposed(), p.a);
    for (std::size_t i = 0; i < prec.rows(); ++i) {
      for (std::size_t j = 0; j < prec.cols(); ++j) prec(i, j) /= p.sigma_n2;
      prec(i, i) += 1.0 / p.sigma_x2;
    }
    Matrix cov = spd_inverse(prec);
    return {mat_scale(matmul(cov, p.a.transposed()), 1.0 / p.sigma_n2), std::move(cov)};
  }
  // Conditioning on the exact constraint A x = z_hat: mean is the min-norm
  // solution A^T (A A^T)^-1 z_hat, covariance sigma_x2 (I - A^T (A A^T)^-1 A).
  const Matrix ginv = spd_inverse(matmul(p.a, p.a.transposed()));
  const Matrix proj = matmul(p.a.transposed(), matmul(ginv, p.a));
  Matrix cov(p.source_dim(), p.source_dim());
  for (std::size_t i = 0; i < cov.rows(); ++i) {
    for (std::size_t j = 0; j < cov.cols(); ++j) {
      cov(i, j) = p.sigma_x2 * ((i == j ? 1.0 : 0.0) - proj(i, j));
    }
  }
  return {matmul(p.a.transposed(), ginv), std::move(cov)};
}

GaussianModel exact_posterior(const LinearGaussianProblem& p, const Vec& z_hat) {
  check_obs(p, z_hat);
  require_noise(p, "exact_posterior");
  PosteriorKernel kernel = posterior_kernel(p);
  return {matvec(kernel.mean_map, z_hat), std::move(kernel.cov)};
}

double posterior_sampling_marginal_check(const LinearGaussianProblem& p, std::size_t n,
                                         SeededRng& rng, MarginalEstimator estimator) {
  const std::size_t d = p.source_dim();
  if (n < d + 2) raise(Errc::TooFewSamples, "marginal check needs at least dim + 2 trials");

  // The posterior covariance (and its factor) and the linear map z_hat ->
  // posterior mean are independent of z_hat; hoist them out of the loop.
  const PosteriorKernel kernel = posterior_kernel(p);
  const Matrix factor = gaussian_factor({Vec(d, 0.0), kernel.cov});
  const double noise_sd = std::sqrt(p.sigma_n2);
  const double prior_sd = std::sqrt(p.sigma_x2);

  std::vector<Vec> estimates;
  estimates.reserve(n);
  Vec x(d), z_hat(p.obs_dim());
  for (std::size_t trial = 0; trial < n; ++trial) {
    for (double& v : x) v = prior_sd * rng.normal();
    const Vec z = matvec(p.a, x);
    for (std::size_t i = 0; i < z_hat.size(); ++i) z_hat[i] = z[i] + noise_sd * rng.normal();
    Vec mean = matvec(kernel.mean_map, z_hat);
    if (estimator == MarginalEstimator::PosteriorDraw) {
      estimates.push_back(gaussian_draw(mean, factor, rng));
    } else {
      estimates.push_back(std::move(mean));
    }
  }
  return w2_gaussian(fit_gaussian(estimates), GaussianModel::isotropic(d, p.sigma_x2));
}

}  // namespace addps
