#include "addps/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "addps/errors.hpp"

namespace addps {
namespace {

constexpr double kTerminalAlphaBar = 0.01;
constexpr double kTwoPi = 6.283185307179586476925287;

void check_step(std::size_t i, std::size_t T) {
  if (i < 1 || i > T) {
    raise(Errc::StepOutOfRange,
          "step " + std::to_string(i) + " outside 1.." + std::to_string(T));
  }
}

}  // namespace

double NoiseSchedule::beta_at(std::size_t i) const {
  check_step(i, T);
  return beta[i - 1];
}

double NoiseSchedule::alpha_at(std::size_t i) const {
  check_step(i, T);
  return alpha[i - 1];
}

double NoiseSchedule::alpha_bar_at(std::size_t i) const {
  check_step(i, T);
  return alpha_bar[i - 1];
}

NoiseSchedule make_linear_schedule(std::size_t T, double beta_min, double beta_max) {
  if (T == 0) raise(Errc::ValidationError, "schedule needs T >= 1");
  if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0)) {
    raise(Errc::ValidationError, "schedule needs 0 < beta_min <= beta_max < 1");
  }
  NoiseSchedule s;
  s.T = T;
  s.beta.resize(T);
  s.alpha.resize(T);
  s.alpha_bar.resize(T);
  double prod = 1.0;
  for (std::size_t j = 0; j < T; ++j) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(T - 1);
    s.beta[j] = beta_min + (beta_max - beta_min) * frac;
    s.alpha[j] = 1.0 - s.beta[j];
    prod *= s.alpha[j];
    s.alpha_bar[j] = prod;
  }
  if (s.alpha_bar.back() >= kTerminalAlphaBar) {
    raise(Errc::TerminalNotNoisy, "alpha_bar_T = " + std::to_string(s.alpha_bar.back()) +
                                      " >= 0.01; increase T or the beta range");
  }
  return s;
}

Vec forward_sample(const Vec& x0, std::size_t i, const Vec& eps, const NoiseSchedule& s) {
  const double abar = s.alpha_bar_at(i);
  if (x0.size() != eps.size()) raise(Errc::DimensionMismatch, "forward_sample: x0/eps mismatch");
  Vec out(x0.size());
  const double a = std::sqrt(abar), b = std::sqrt(1.0 - abar);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = a * x0[j] + b * eps[j];
  return out;
}

GmmPrior GmmPrior::make(std::vector<Vec> means, std::vector<Matrix> covs, Vec weights) {
  if (means.empty() || means.size() != covs.size() || means.size() != weights.size()) {
    raise(Errc::ValidationError, "gmm needs matching nonempty means/covs/weights");
  }
  const std::size_t d = means.front().size();
  double total = 0.0;
  std::vector<Matrix> factors;
  factors.reserve(covs.size());
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (means[k].size() != d || covs[k].rows() != d || covs[k].cols() != d) {
      raise(Errc::DimensionMismatch, "gmm component dimensions disagree");
    }
    if (weights[k] <= 0.0) raise(Errc::ValidationError, "gmm weights must be positive");
    total += weights[k];
    factors.push_back(cholesky(covs[k]));  // SPD required
  }
  if (std::abs(total - 1.0) > 1e-12) {
    raise(Errc::ValidationError, "gmm weights sum to " + std::to_string(total) + ", expected 1");
  }
  GmmPrior g;
  g.means = std::move(means);
  g.covs = std::move(covs);
  g.weights = std::move(weights);
  g.factors = std::move(factors);
  return g;
}

Vec GmmPrior::sample(SeededRng& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t pick = components() - 1;
  for (std::size_t k = 0; k < components(); ++k) {
    acc += weights[k];
    if (u < acc) {
      pick = k;
      break;
    }
  }
  return gaussian_draw(means[pick], factors[pick], rng);
}

GaussianModel GmmPrior::moments() const {
  const std::size_t d = dim();
  Vec mean(d, 0.0);
  for (std::size_t k = 0; k < components(); ++k) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += weights[k] * means[k][j];
  }
  Matrix cov(d, d);
  for (std::size_t k = 0; k < components(); ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        cov(i, j) += weights[k] * (covs[k](i, j) + means[k][i] * means[k][j]);
      }
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) cov(i, j) -= mean[i] * mean[j];
  }
  return {std::move(mean), std::move(cov)};
}

namespace {

// Marginal covariance of the noised component: abar Sigma + (1-abar) I.
Matrix noised_cov(const Matrix& cov, double abar) {
  Matrix m = mat_scale(cov, abar);
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += 1.0 - abar;
  return m;
}

}  // namespace

Vec analytic_score(const GaussianModel& prior, const Vec& x_t, std::size_t i,
                   const NoiseSchedule& s) {
  const double abar = s.alpha_bar_at(i);
  if (x_t.size() != prior.dim()) raise(Errc::DimensionMismatch, "analytic_score: dim mismatch");
  const double root = std::sqrt(abar);
  Vec d(x_t.size());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = x_t[j] - root * prior.mean[j];
  return vec_scale(solve_spd(noised_cov(prior.cov, abar), d), -1.0);
}

namespace {

struct GmmScoreParts {
  Vec score;
  std::vector<double> resp;        // responsibilities r_k
  std::vector<Vec> comp_scores;    // s_k = -P_k^-1 (x - m_k)
  std::vector<Matrix> comp_chol;   // factor of P_k
};

GmmScoreParts gmm_score_parts(const GmmPrior& prior, const Vec& x_t, double abar) {
  if (x_t.size() != prior.dim()) raise(Errc::DimensionMismatch, "analytic_score: dim mismatch");
  const std::size_t kc = prior.components();
  const std::size_t d = prior.dim();
  const double root = std::sqrt(abar);

  GmmScoreParts parts;
  parts.resp.resize(kc);
  parts.comp_scores.resize(kc);
  parts.comp_chol.reserve(kc);
  Vec logp(kc);
  Vec diff(d);
  for (std::size_t k = 0; k < kc; ++k) {
    parts.comp_chol.push_back(cholesky(noised_cov(prior.covs[k], abar)));
    const Matrix& l = parts.comp_chol.back();
    for (std::size_t j = 0; j < d; ++j) diff[j] = x_t[j] - root * prior.means[k][j];
    const Vec y = solve_lower_triangular(l, diff);
    double log_det = 0.0;
    for (std::size_t j = 0; j < d; ++j) log_det += std::log(l(j, j));
    logp[k] = std::log(prior.weights[k]) - 0.5 * vec_squared_norm(y) - log_det -
              0.5 * static_cast<double>(d) * std::log(kTwoPi);
    parts.comp_scores[k] = vec_scale(solve_upper_from_lower(l, y), -1.0);
  }
  const double m = *std::max_element(logp.begin(), logp.end());
  double z = 0.0;
  for (double lp : logp) z += std::exp(lp - m);
  parts.score.assign(d, 0.0);
  for (std::size_t k = 0; k < kc; ++k) {
    parts.resp[k] = std::exp(logp[k] - m) / z;
    for (std::size_t j = 0; j < d; ++j) parts.score[j] += parts.resp[k] * parts.comp_scores[k][j];
  }
  return parts;
}

}  // namespace

Vec analytic_score(const GmmPrior& prior, const Vec& x_t, std::size_t i, const NoiseSchedule& s) {
  return gmm_score_parts(prior, x_t, s.alpha_bar_at(i)).score;
}

Vec GaussianScore::score(const Vec& x_t, std::size_t i, const NoiseSchedule& s) const {
  return analytic_score(prior_, x_t, i, s);
}

Vec GaussianScore::score_vjp(const Vec& x_t, std::size_t i, const NoiseSchedule& s,
                             const Vec& cotangent) const {
  (void)x_t;  // the Jacobian -P^-1 is constant in x
  const double abar = s.alpha_bar_at(i);
  return vec_scale(solve_spd(noised_cov(prior_.cov, abar), cotangent), -1.0);
}

Vec GmmScore::score(const Vec& x_t, std::size_t i, const NoiseSchedule& s) const {
  return analytic_score(prior_, x_t, i, s);
}

Vec GmmScore::score_vjp(const Vec& x_t, std::size_t i, const NoiseSchedule& s,
                        const Vec& cotangent) const {
  // Hessian of log p: sum_k r_k (-P_k^-1 + s_k s_k^T) - s s^T (symmetric),
  // so the VJP is a plain matrix-vector product with it.
  const GmmScoreParts parts = gmm_score_parts(prior_, x_t, s.alpha_bar_at(i));
  const std::size_t d = x_t.size();
  if (cotangent.size() != d) raise(Errc::DimensionMismatch, "score_vjp: cotangent dim mismatch");
  Vec out(d, 0.0);
  for (std::size_t k = 0; k < parts.resp.size(); ++k) {
    const Vec pinv_cot =
        solve_upper_from_lower(parts.comp_chol[k], solve_lower_triangular(parts.comp_chol[k], cotangent));
    const double sk_dot = vec_dot(parts.comp_scores[k], cotangent);
    for (std::size_t j = 0; j < d; ++j) {
      out[j] += parts.resp[k] * (-pinv_cot[j] + parts.comp_scores[k][j] * sk_dot);
    }
  }
  const double s_dot = vec_dot(parts.score, cotangent);
  for (std::size_t j = 0; j < d; ++j) out[j] -= parts.score[j] * s_dot;
  return out;
}

MlpScore::MlpScore(MlpNet net, std::size_t dim) : net_(std::move(net)), dim_(dim) {
  if (net_.in_dim() != dim + kEmbedDim || net_.out_dim() != dim) {
    raise(Errc::DimensionMismatch, "score net must map dim+16 -> dim");
  }
}

MlpScore MlpScore::make_untrained(std::size_t dim, SeededRng& rng) {
  return MlpScore(MlpNet::make({dim + kEmbedDim, 64, 64, dim}, rng), dim);
}

Vec MlpScore::embed(const Vec& x, std::size_t i, const NoiseSchedule& s) {
  check_step(i, s.T);
  const double u = static_cast<double>(i) / static_cast<double>(s.T);
  Vec in(x.size() + kEmbedDim);
  std::copy(x.begin(), x.end(), in.begin());
  double freq = 1.0;
  for (std::size_t j = 0; j < kEmbedDim / 2; ++j) {
    in[x.size() + 2 * j] = std::sin(kTwoPi * freq * u);
    in[x.size() + 2 * j + 1] = std::cos(kTwoPi * freq * u);
    freq *= 2.0;
  }
  return in;
}

Vec MlpScore::score(const Vec& x_t, std::size_t i, const NoiseSchedule& s) const {
  if (x_t.size() != dim_) raise(Errc::DimensionMismatch, "score: input dim mismatch");
  const double scale = -1.0 / std::sqrt(1.0 - s.alpha_bar_at(i));
  return vec_scale(net_.forward(embed(x_t, i, s)), scale);
}

Vec MlpScore::score_vjp(const Vec& x_t, std::size_t i, const NoiseSchedule& s,
                        const Vec& cotangent) const {
  const double scale = -1.0 / std::sqrt(1.0 - s.alpha_bar_at(i));
  const Vec full = net_.pullback(embed(x_t, i, s), cotangent);
  Vec out(dim_);
  for (std::size_t j = 0; j < dim_; ++j) out[j] = scale * full[j];
  return out;
}

Vec tweedie(const Vec& x_t, std::size_t i, const ScoreFunction& sf, const NoiseSchedule& s) {
  const double abar = s.alpha_bar_at(i);
  const Vec sc = sf.score(x_t, i, s);
  Vec out(x_t.size());
  const double inv_root = 1.0 / std::sqrt(abar);
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = inv_root * (x_t[j] + (1.0 - abar) * sc[j]);
  }
  return out;
}

Vec ancestral_step(const Vec& x_i, std::size_t i, const ScoreFunction& sf,
                   const NoiseSchedule& s, SeededRng& rng) {
  const double beta = s.beta_at(i);
  const double inv_root_alpha = 1.0 / std::sqrt(s.alpha_at(i));
  const Vec sc = sf.score(x_i, i, s);
  Vec out(x_i.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = inv_root_alpha * (x_i[j] + beta * sc[j]);
  }
  if (i > 1) {
    const double sigma = std::sqrt(beta);
    for (double& v : out) v += sigma * rng.normal();
  }
  return out;
}

Vec ancestral_chain(Vec x, const ScoreFunction& sf, const NoiseSchedule& s, SeededRng& rng) {
  for (std::size_t i = s.T; i >= 1; --i) x = ancestral_step(x, i, sf, s, rng);
  return x;
}

std::vector<Vec> sample_unconditional(const ScoreFunction& sf, const NoiseSchedule& s,
                                      std::size_t n, SeededRng& rng) {
  std::vector<Vec> out;
  out.reserve(n);
  for (std::size_t c = 0; c < n; ++c) {
    SeededRng chain_rng = rng.split(c);
    out.push_back(ancestral_chain(normal_vector(chain_rng, sf.dim()), sf, s, chain_rng));
  }
  return out;
}

MlpScore train_score(const std::vector<Vec>& dataset, const NoiseSchedule& s,
                     const TrainConfig& tc, std::vector<double>* epoch_losses) {
  if (dataset.empty()) raise(Errc::ValidationError, "train_score: empty dataset");
  const std::size_t d = dataset.front().size();
  for (const Vec& x : dataset) {
    if (x.size() != d) raise(Errc::DimensionMismatch, "train_score: ragged dataset");
  }

  SeededRng rng(tc.seed, /*stream=*/0x73636f7265ULL);
  MlpScore sf = MlpScore::make_untrained(d, rng);
  std::vector<Vec*> params = sf.net().param_arrays();
  OptimizerState opt;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  const double inv_d = 1.0 / static_cast<double>(d);

  Tape t;
  std::vector<NodeId> param_nodes;
  Vec eps(d);
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform() * static_cast<double>(i))]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t stop = std::min(order.size(), start + tc.batch_size);
      std::vector<Vec> grads(params.size());
      for (std::size_t p = 0; p < params.size(); ++p) grads[p].assign(params[p]->size(), 0.0);
      for (std::size_t idx = start; idx < stop; ++idx) {
        const Vec& x0 = dataset[order[idx]];
        const std::size_t i = std::min(
            s.T, 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(s.T)));
        for (double& v : eps) v = rng.normal();
        const Vec x_t = forward_sample(x0, i, eps, s);
        t.reset();
        param_nodes.clear();
        const NodeId in = t.constant(MlpScore::embed(x_t, i, s));
        const NodeId pred = sf.net().record_trainable(t, in, param_nodes);
        const NodeId loss = t.scale(t.squared_norm(t.sub(pred, t.constant(eps))), inv_d);
        const double loss_value = t.scalar_value(loss);
        if (!std::isfinite(loss_value)) {
          raise(Errc::NonFiniteLoss, "train_score diverged at epoch " + std::to_string(epoch));
        }
        epoch_loss += loss_value;
        t.backward(loss);
        for (std::size_t p = 0; p < params.size(); ++p) {
          const Vec& g = t.adjoint(param_nodes[p]);
          for (std::size_t j = 0; j < g.size(); ++j) grads[p][j] += g[j];
        }
      }
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      for (Vec& g : grads)
        for (double& v : g) v *= inv_batch;
      opt.step(params, grads, tc);
    }
    if (epoch_losses) epoch_losses->push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return sf;
}

std::vector<NamedArray> score_to_arrays(const MlpScore& sf) {
  std::vector<NamedArray> arrays;
  arrays.push_back({"score_meta", {1}, {static_cast<double>(sf.dim())}});
  for (std::size_t l = 0; l < sf.net().layers.size(); ++l) {
    const MlpNet::Layer& layer = sf.net().layers[l];
    arrays.push_back({"score.w" + std::to_string(l),
                      {layer.w.rows(), layer.w.cols()},
                      layer.w.entries()});
    arrays.push_back({"score.b" + std::to_string(l), {layer.b.size()}, layer.b});
  }
  return arrays;
}

MlpScore score_from_arrays(const std::vector<NamedArray>& arrays) {
  const NamedArray& meta = find_array(arrays, "score_meta");
  if (meta.data.size() != 1) raise(Errc::ParseError, "score_meta must hold one value");
  const auto dim = static_cast<std::size_t>(meta.data[0]);
  MlpNet net;
  for (std::size_t l = 0;; ++l) {
    const std::string wn = "score.w" + std::to_string(l);
    bool present = false;
    for (const NamedArray& a : arrays) present = present || a.name == wn;
    if (!present) break;
    const NamedArray& w = find_array(arrays, wn);
    const NamedArray& b = find_array(arrays, "score.b" + std::to_string(l));
    if (w.shape.size() != 2 || b.shape.size() != 1 || b.data.size() != w.shape[0]) {
      raise(Errc::ParseError, "score checkpoint layer '" + wn + "' has inconsistent shapes");
    }
    net.layers.push_back({Matrix(w.shape[0], w.shape[1], w.data), b.data});
  }
  if (net.layers.empty()) raise(Errc::ParseError, "score checkpoint holds no layers");
  return MlpScore(std::move(net), dim);
}

void save_score(const std::string& path, const MlpScore& sf) {
  save_checkpoint(path, score_to_arrays(sf));
}

MlpScore load_score(const std::string& path) { return score_from_arrays(load_checkpoint(path)); }

}  // namespace addps
