#pragma once

#include <vector>

#include "addps/checkpoint.hpp"
#include "addps/gaussian_model.hpp"
#include "addps/mlp.hpp"
#include "addps/numerics.hpp"
#include "addps/rng.hpp"
#include "addps/train.hpp"

namespace addps {

/// Discrete variance-preserving schedule. Steps are 1-based: arrays hold
/// step i at index i-1, with alpha_i = 1 - beta_i and alpha_bar_i the
/// running product.
struct NoiseSchedule {
  std::size_t T = 0;
  Vec beta;
  Vec alpha;
  Vec alpha_bar;

  double beta_at(std::size_t i) const;
  double alpha_at(std::size_t i) const;
  double alpha_bar_at(std::size_t i) const;
};

/// beta_i linear from beta_min to beta_max. Requires
/// 0 < beta_min <= beta_max < 1 and a near-pure-noise terminal
/// (alpha_bar_T < 0.01, otherwise TerminalNotNoisy).
NoiseSchedule make_linear_schedule(std::size_t T, double beta_min, double beta_max);

/// sqrt(alpha_bar_i) x0 + sqrt(1 - alpha_bar_i) eps.
Vec forward_sample(const Vec& x0, std::size_t i, const Vec& eps, const NoiseSchedule& s);

/// Mixture of Gaussians with positive weights summing to 1 and SPD
/// component covariances (factors cached for sampling).
struct GmmPrior {
  std::vector<Vec> means;
  std::vector<Matrix> covs;
  Vec weights;
  std::vector<Matrix> factors;

  static GmmPrior make(std::vector<Vec> means, std::vector<Matrix> covs, Vec weights);

  std::size_t dim() const { return means.front().size(); }
  std::size_t components() const { return means.size(); }

  Vec sample(SeededRng& rng) const;

  /// Overall mean and covariance of the mixture.
  GaussianModel moments() const;
};

/// Exact score of the noised marginal p_i. For a Gaussian prior the marginal
/// is N(sqrt(abar) mu, abar Sigma + (1-abar) I); the GMM version combines
/// component scores by responsibilities with log-sum-exp stabilization.
Vec analytic_score(const GaussianModel& prior, const Vec& x_t, std::size_t i,
                   const NoiseSchedule& s);
Vec analytic_score(const GmmPrior& prior, const Vec& x_t, std::size_t i, const NoiseSchedule& s);

/// Score oracle/model interface: the score itself plus its input-space VJP
/// (cotangent^T d score / d x_t), which guidance needs to differentiate
/// through the posterior-mean estimate.
class ScoreFunction {
 public:
  virtual ~ScoreFunction() = default;
  virtual std::size_t dim() const = 0;
  virtual Vec score(const Vec& x_t, std::size_t i, const NoiseSchedule& s) const = 0;
  virtual Vec score_vjp(const Vec& x_t, std::size_t i, const NoiseSchedule& s,
                        const Vec& cotangent) const = 0;
};

class GaussianScore final : public ScoreFunction {
 public:
  explicit GaussianScore(GaussianModel prior) : prior_(std::move(prior)) {}

  std::size_t dim() const override { return prior_.dim(); }
  Vec score(const Vec& x_t, std::size_t i, const NoiseSchedule& s) const override;
  Vec score_vjp(const Vec& x_t, std::size_t i, const NoiseSchedule& s,
                const Vec& cotangent) const override;

  const GaussianModel& prior() const { return prior_; }

 private:
  GaussianModel prior_;
};

class GmmScore final : public ScoreFunction {
 public:
  explicit GmmScore(GmmPrior prior) : prior_(std::move(prior)) {}

  std::size_t dim() const override { return prior_.dim(); }
  Vec score(const Vec& x_t, std::size_t i, const NoiseSchedule& s) const override;
  Vec score_vjp(const Vec& x_t, std::size_t i, const NoiseSchedule& s,
                const Vec& cotangent) const override;

  const GmmPrior& prior() const { return prior_; }

 private:
  GmmPrior prior_;
};

/// Noise-predicting MLP: the net maps [x_t, sinusoidal embedding of i/T]
/// (8 frequencies, 16 features) to an epsilon estimate, and the score is
/// -eps_hat / sqrt(1 - alpha_bar_i). Hidden widths 64, 64.
class MlpScore final : public ScoreFunction {
 public:
  MlpScore(MlpNet net, std::size_t dim);

  static MlpScore make_untrained(std::size_t dim, SeededRng& rng);

  std::size_t dim() const override { return dim_; }
  Vec score(const Vec& x_t, std::size_t i, const NoiseSchedule& s) const override;
  Vec score_vjp(const Vec& x_t, std::size_t i, const NoiseSchedule& s,
                const Vec& cotangent) const override;

  const MlpNet& net() const { return net_; }
  MlpNet& net() { return net_; }

  /// [x, sin/cos features of u = i/T]; exposed for the trainer and tests.
  static Vec embed(const Vec& x, std::size_t i, const NoiseSchedule& s);
  static constexpr std::size_t kEmbedDim = 16;

 private:
  MlpNet net_;
  std::size_t dim_;
};

/// Posterior-mean estimate (1/sqrt(abar_i)) (x_t + (1 - abar_i) score).
Vec tweedie(const Vec& x_t, std::size_t i, const ScoreFunction& sf, const NoiseSchedule& s);

/// One reverse step (1/sqrt(alpha_i)) (x_i + beta_i score) + sigma_i eps with
/// sigma_i^2 = beta_i for i > 1 and sigma_1 = 0 (deterministic final step).
Vec ancestral_step(const Vec& x_i, std::size_t i, const ScoreFunction& sf,
                   const NoiseSchedule& s, SeededRng& rng);

/// Full reverse chain from step T down to 1 starting at x.
Vec ancestral_chain(Vec x, const ScoreFunction& sf, const NoiseSchedule& s, SeededRng& rng);

/// n independent chains from x_T ~ N(0, I), each on its own RNG substream.
std::vector<Vec> sample_unconditional(const ScoreFunction& sf, const NoiseSchedule& s,
                                      std::size_t n, SeededRng& rng);

/// Denoising score matching in the noise-prediction form: minimizes
/// ||eps_hat - eps||^2 / dim over uniformly drawn steps, which is the
/// (1 - abar_i)-weighted DSM objective. Optional out-params report the
/// per-epoch mean losses.
MlpScore train_score(const std::vector<Vec>& dataset, const NoiseSchedule& s,
                     const TrainConfig& tc, std::vector<double>* epoch_losses = nullptr);

std::vector<NamedArray> score_to_arrays(const MlpScore& sf);
MlpScore score_from_arrays(const std::vector<NamedArray>& arrays);
void save_score(const std::string& path, const MlpScore& sf);
MlpScore load_score(const std::string& path);

}  // namespace addps
