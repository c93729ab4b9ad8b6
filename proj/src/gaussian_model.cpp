#include "addps/gaussian_model.hpp"

#include <cmath>
#include <string>

#include "addps/errors.hpp"

namespace addps {

GaussianModel GaussianModel::make(Vec mean, Matrix cov) {
  if (!cov.square() || cov.rows() != mean.size()) {
    raise(Errc::DimensionMismatch, "gaussian: covariance must be square and match the mean");
  }
  double max_abs = 0.0;
  for (double v : cov.entries()) max_abs = std::max(max_abs, std::abs(v));
  for (std::size_t i = 0; i < cov.rows(); ++i) {
    for (std::size_t j = i + 1; j < cov.cols(); ++j) {
      if (std::abs(cov(i, j) - cov(j, i)) > 1e-9 * std::max(1.0, max_abs)) {
        raise(Errc::ValidationError, "gaussian covariance is not symmetric");
      }
    }
  }
  const SymEig eig = sym_eig(cov);
  if (!eig.values.empty() && eig.values.back() < -1e-10) {
    raise(Errc::NotSPD,
          "gaussian covariance has eigenvalue " + std::to_string(eig.values.back()));
  }
  return {std::move(mean), std::move(cov)};
}

Matrix gaussian_factor(const GaussianModel& g) {
  try {
    return cholesky(g.cov);
  } catch (const Error&) {
    return psd_sqrt(g.cov);  // singular but PSD
  }
}

Vec gaussian_sample(const GaussianModel& g, const Matrix& factor, SeededRng& rng) {
  return gaussian_draw(g.mean, factor, rng);
}

GaussianModel fit_gaussian(const std::vector<Vec>& samples) {
  if (samples.size() < 2) raise(Errc::TooFewSamples, "fit_gaussian needs at least 2 samples");
  const std::size_t n = samples.size();
  const std::size_t d = samples.front().size();
  Vec mean(d, 0.0);
  for (const Vec& s : samples) {
    if (s.size() != d) raise(Errc::DimensionMismatch, "fit_gaussian: ragged sample set");
    for (std::size_t j = 0; j < d; ++j) mean[j] += s[j];
  }
  for (double& v : mean) v /= static_cast<double>(n);
  Matrix cov(d, d);
  Vec centered(d);
  for (const Vec& s : samples) {
    for (std::size_t j = 0; j < d; ++j) centered[j] = s[j] - mean[j];
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) cov(i, j) += centered[i] * centered[j];
    }
  }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov(i, j) /= denom;
      cov(j, i) = cov(i, j);
    }
  }
  return {std::move(mean), std::move(cov)};
}

}  // namespace addps
