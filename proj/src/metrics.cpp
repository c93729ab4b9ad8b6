#include "addps/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "addps/errors.hpp"

namespace addps {

SampleSet SampleSet::from(std::vector<Vec> samples) {
  if (samples.empty()) raise(Errc::TooFewSamples, "sample set is empty");
  const std::size_t d = samples.front().size();
  if (d == 0) raise(Errc::DimensionMismatch, "sample set holds zero-length vectors");
  for (const Vec& s : samples) {
    if (s.size() != d) raise(Errc::DimensionMismatch, "sample set has mixed dimensions");
  }
  return {std::move(samples), d};
}

double w2_gaussian(const GaussianModel& a, const GaussianModel& b) {
  if (a.dim() != b.dim()) raise(Errc::DimensionMismatch, "w2_gaussian: dimension mismatch");
  const Vec dm = vec_sub(a.mean, b.mean);
  const Matrix rb = psd_sqrt(b.cov);
  const Matrix cross = psd_sqrt(matmul(matmul(rb, a.cov), rb));
  double tr = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    tr += a.cov(i, i) + b.cov(i, i) - 2.0 * cross(i, i);
  }
  return std::max(0.0, vec_squared_norm(dm) + tr);
}

double frechet_distance(const SampleSet& a, const SampleSet& b) {
  if (a.size() < a.dim + 1 || b.size() < b.dim + 1) {
    raise(Errc::TooFewSamples, "frechet_distance needs at least dim + 1 samples per set");
  }
  return w2_gaussian(fit_gaussian(a.samples), fit_gaussian(b.samples));
}

double frechet_distance(const SampleSet& a, const GaussianModel& b) {
  if (a.size() < a.dim + 1) {
    raise(Errc::TooFewSamples, "frechet_distance needs at least dim + 1 samples");
  }
  return w2_gaussian(fit_gaussian(a.samples), b);
}

namespace {

// Exact 1-D squared-W2 between empirical distributions: transport between
// sorted atoms of mass 1/na and 1/nb.
double w2_sq_1d(Vec a, Vec b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double ma = 1.0 / static_cast<double>(a.size());
  const double mb = 1.0 / static_cast<double>(b.size());
  double rema = ma, remb = mb, total = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double m = std::min(rema, remb);
    const double d = a[i] - b[j];
    total += m * d * d;
    rema -= m;
    remb -= m;
    if (rema <= 0.0) { ++i; rema = ma; }
    if (remb <= 0.0) { ++j; remb = mb; }
  }
  return total;
}

}  // namespace

double sliced_wasserstein(const SampleSet& a, const SampleSet& b, std::size_t n_proj,
                          SeededRng& rng) {
  if (a.dim != b.dim) raise(Errc::DimensionMismatch, "sliced_wasserstein: dimension mismatch");
  if (n_proj == 0) raise(Errc::ValidationError, "sliced_wasserstein needs n_proj >= 1");
  double total = 0.0;
  Vec dir(a.dim);
  for (std::size_t p = 0; p < n_proj; ++p) {
    double norm = 0.0;
    do {
      for (double& v : dir) v = rng.normal();
      norm = vec_norm(dir);
    } while (norm < 1e-12);
    for (double& v : dir) v /= norm;
    Vec pa(a.size()), pb(b.size());
    for (std::size_t s = 0; s < a.size(); ++s) pa[s] = vec_dot(a.samples[s], dir);
    for (std::size_t s = 0; s < b.size(); ++s) pb[s] = vec_dot(b.samples[s], dir);
    total += w2_sq_1d(std::move(pa), std::move(pb));
  }
  return total / static_cast<double>(n_proj);
}

MsePsnr mse_psnr(const Vec& x, const Vec& x_hat, double peak) {
  if (x.size() != x_hat.size()) raise(Errc::DimensionMismatch, "mse_psnr: length mismatch");
  if (x.empty()) raise(Errc::DimensionMismatch, "mse_psnr: empty vectors");
  if (peak <= 0.0) raise(Errc::ValidationError, "mse_psnr: peak must be positive");
  const double mse = vec_squared_norm(vec_sub(x, x_hat)) / static_cast<double>(x.size());
  const double psnr = mse == 0.0 ? std::numeric_limits<double>::infinity()
                                 : 10.0 * std::log10(peak * peak / mse);
  return {mse, psnr};
}

}  // namespace addps
