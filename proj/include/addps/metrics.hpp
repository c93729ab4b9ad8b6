#pragma once

#include <utility>
#include <vector>

#include "addps/gaussian_model.hpp"
#include "addps/numerics.hpp"
#include "addps/rng.hpp"

namespace addps {

/// Nonempty list of equal-length vectors.
struct SampleSet {
  std::vector<Vec> samples;
  std::size_t dim = 0;

  static SampleSet from(std::vector<Vec> samples);
  std::size_t size() const { return samples.size(); }
};

/// Squared 2-Wasserstein distance between Gaussians:
/// ||mu_a - mu_b||^2 + tr(Sa + Sb - 2 (Sb^1/2 Sa Sb^1/2)^1/2).
/// Matrix roots use the eigendecomposition with negatives clamped to zero;
/// tiny negative totals from round-off clamp to 0.
double w2_gaussian(const GaussianModel& a, const GaussianModel& b);

/// Gaussian-fit Frechet distance between two sample sets (raw coordinates,
/// no feature extractor). Each set needs at least dim + 1 samples.
double frechet_distance(const SampleSet& a, const SampleSet& b);
double frechet_distance(const SampleSet& a, const GaussianModel& b);

/// Squared-W2 convention: average over random unit projections of the exact
/// 1-D squared 2-Wasserstein distance between the empirical distributions.
double sliced_wasserstein(const SampleSet& a, const SampleSet& b, std::size_t n_proj,
                          SeededRng& rng);

struct MsePsnr {
  double mse = 0.0;
  double psnr_db = 0.0;  // +infinity when mse == 0
};
MsePsnr mse_psnr(const Vec& x, const Vec& x_hat, double peak);

}  // namespace addps
