#include "addps/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "addps/channel.hpp"
#include "addps/errors.hpp"
#include "addps/gaussian_oracle.hpp"
#include "addps/guidance.hpp"
#include "addps/metrics.hpp"

namespace addps {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kPeak = 1.0;  // PSNR reference amplitude for unit-power sources

// Stream tags: the trial index enters through the seed (cfg.seed + trial),
// so streams only need to separate roles and (mode, snr) coordinates.
std::uint64_t stream_id(std::uint64_t tag, std::size_t mode_idx, std::size_t snr_idx) {
  return (tag << 32) | (static_cast<std::uint64_t>(mode_idx) << 16) |
         static_cast<std::uint64_t>(snr_idx);
}
constexpr std::uint64_t kTagData = 1;        // eval draws shared across modes
constexpr std::uint64_t kTagChain = 2;       // per-mode sampler streams
constexpr std::uint64_t kTagOracle = 3;
constexpr std::uint64_t kTagUncond = 4;
constexpr std::uint64_t kTagCodecInit = 5;
constexpr std::uint64_t kTagCodecData = 6;
constexpr std::uint64_t kTagScoreData = 7;
constexpr std::uint64_t kTagSliced = 8;

bool wants_metric(const ExperimentConfig& cfg, const char* name) {
  for (const std::string& m : cfg.eval.metrics) {
    if (m == name || (m == "psnr" && std::string(name) == "psnr_db")) return true;
  }
  return false;
}

GmmPrior gmm_from_spec(const SourceSpec& src) {
  std::vector<Matrix> covs(src.means.size(),
                           Matrix::scaled_identity(src.dim, src.component_var));
  return GmmPrior::make(src.means, std::move(covs), src.weights);
}

std::vector<Vec> draw_dataset(const ExperimentConfig& cfg, const ScenarioModels& m,
                              std::size_t count, SeededRng& rng) {
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(draw_source(cfg, m, rng));
  return out;
}

struct Cell {
  std::size_t mode_idx, snr_idx, trial;
};

}  // namespace

Vec draw_source(const ExperimentConfig& cfg, const ScenarioModels& m, SeededRng& rng) {
  if (cfg.source.kind == SourceSpec::Kind::Gmm) return m.gmm->sample(rng);
  Vec x = normal_vector(rng, cfg.source.dim);
  const double sd = std::sqrt(cfg.source.sigma_x2);
  for (double& v : x) v *= sd;
  return x;
}

CodecModel train_codec_from_config(const ExperimentConfig& cfg) {
  if (cfg.codec.kind != CodecKind::Mlp) {
    raise(Errc::ValidationError, "codec.kind: only the mlp codec is trainable");
  }
  ScenarioModels m;
  if (cfg.source.kind == SourceSpec::Kind::Gmm) {
    m.gmm = std::make_shared<GmmPrior>(gmm_from_spec(cfg.source));
  }
  SeededRng data_rng(cfg.seed, stream_id(kTagCodecData, 0, 0));
  const std::vector<Vec> dataset = draw_dataset(cfg, m, cfg.codec.train_samples, data_rng);
  SeededRng init_rng(cfg.seed, stream_id(kTagCodecInit, 0, 0));
  CodecModel init = CodecModel::mlp(cfg.codec.n, cfg.codec.k, init_rng, cfg.channel.power);
  TrainConfig tc = cfg.codec.train;
  tc.seed = cfg.seed;
  return train_deepjscc(init, dataset, {cfg.codec.train_snr_db, cfg.channel.power}, tc);
}

MlpScore train_score_from_config(const ExperimentConfig& cfg) {
  ScenarioModels m;
  if (cfg.source.kind == SourceSpec::Kind::Gmm) {
    m.gmm = std::make_shared<GmmPrior>(gmm_from_spec(cfg.source));
  }
  const NoiseSchedule s =
      make_linear_schedule(cfg.diffusion.T, cfg.diffusion.beta_min, cfg.diffusion.beta_max);
  SeededRng data_rng(cfg.seed, stream_id(kTagScoreData, 0, 0));
  const std::vector<Vec> dataset = draw_dataset(cfg, m, cfg.diffusion.train_samples, data_rng);
  TrainConfig tc = cfg.diffusion.train;
  tc.seed = cfg.seed;
  return train_score(dataset, s, tc);
}

ScenarioModels build_models(const ExperimentConfig& cfg) {
  ScenarioModels m;
  if (cfg.source.kind == SourceSpec::Kind::Gmm) {
    m.gmm = std::make_shared<GmmPrior>(gmm_from_spec(cfg.source));
    m.source_moments = m.gmm->moments();
  } else {
    m.source_moments = GaussianModel::isotropic(cfg.source.dim, cfg.source.sigma_x2);
  }
  if (cfg.kind == ScenarioKind::Oracle) return m;

  m.schedule =
      make_linear_schedule(cfg.diffusion.T, cfg.diffusion.beta_min, cfg.diffusion.beta_max);

  if (cfg.diffusion.score == DiffusionSpec::Score::AnalyticSource) {
    if (cfg.source.kind == SourceSpec::Kind::Gmm) {
      m.score = std::make_shared<GmmScore>(*m.gmm);
    } else {
      m.score = std::make_shared<GaussianScore>(
          GaussianModel::isotropic(cfg.source.dim, cfg.source.sigma_x2));
    }
  } else if (!cfg.diffusion.checkpoint.empty() && !cfg.diffusion.train_inline) {
    MlpScore sf = load_score(cfg.diffusion.checkpoint);
    if (sf.dim() != cfg.source.dim) {
      raise(Errc::ValidationError, "diffusion.checkpoint: score dim " +
                                       std::to_string(sf.dim()) + " does not match source dim");
    }
    m.score = std::make_shared<MlpScore>(std::move(sf));
  } else {
    m.score = std::make_shared<MlpScore>(train_score_from_config(cfg));
  }

  if (cfg.kind != ScenarioKind::Addps) return m;

  switch (cfg.codec.kind) {
    case CodecKind::Identity:
      m.codec = CodecModel::identity(cfg.codec.n, cfg.channel.power);
      break;
    case CodecKind::Linear: {
      // seeded random full-row-rank matrix; retry on the measure-zero failure
      for (std::uint64_t attempt = 0;; ++attempt) {
        SeededRng mat_rng(cfg.seed, stream_id(kTagCodecInit, 0, 0) + attempt);
        Matrix a(2 * cfg.codec.k, cfg.codec.n);
        const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.codec.n));
        for (double& v : a.mutable_entries()) v = scale * mat_rng.normal();
        try {
          m.codec = CodecModel::linear(std::move(a), cfg.channel.power);
          break;
        } catch (const Error&) {
          if (attempt >= 8) throw;
        }
      }
      break;
    }
    case CodecKind::Mlp: {
      if (!cfg.codec.checkpoint.empty() && !cfg.codec.train_inline) {
        m.codec = load_codec(cfg.codec.checkpoint);
        if (m.codec.n_source != cfg.codec.n || m.codec.k_channel != cfg.codec.k) {
          raise(Errc::ValidationError, "codec.checkpoint: dims do not match the scenario");
        }
      } else {
        m.codec = train_codec_from_config(cfg);
      }
      break;
    }
  }
  return m;
}

std::vector<std::string> report_header_lines(const ExperimentConfig& cfg) {
  std::vector<std::string> lines;
  lines.push_back(std::string("addps ") + kVersion);
  std::istringstream is(resolved_config_text(cfg));
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  return lines;
}

namespace {

void fill_distribution_metrics(const ExperimentConfig& cfg, const ScenarioModels& m,
                               const std::vector<Vec>& produced, const std::vector<Vec>& reference,
                               SeededRng sliced_rng, ReportRow& row) {
  row.frechet = kNan;
  row.sliced_w = kNan;
  if (wants_metric(cfg, "frechet")) {
    row.frechet = frechet_distance(SampleSet::from(produced), m.source_moments);
  }
  if (wants_metric(cfg, "sliced_w")) {
    row.sliced_w = sliced_wasserstein(SampleSet::from(produced), SampleSet::from(reference),
                                      cfg.eval.sw_projections, sliced_rng);
  }
}

ReportRow run_oracle_cell(const ExperimentConfig& cfg, const ScenarioModels& m,
                          const std::string& estimator, std::size_t est_idx, double snr_db,
                          std::size_t snr_idx, std::uint64_t seed) {
  const std::size_t d = cfg.source.dim;
  const double sigma_n2 = snr_to_noise_variance({snr_db, cfg.channel.power});
  const LinearGaussianProblem p =
      LinearGaussianProblem::make(Matrix::identity(d), cfg.source.sigma_x2, sigma_n2);
  const PosteriorKernel kernel = posterior_kernel(p);
  const Matrix factor = gaussian_factor({Vec(d, 0.0), kernel.cov});
  const bool draw = estimator == "posterior";
  const double noise_sd = std::sqrt(sigma_n2);
  const double prior_sd = std::sqrt(cfg.source.sigma_x2);

  SeededRng rng(seed, stream_id(kTagOracle, est_idx, snr_idx));
  std::vector<Vec> truths, estimates;
  truths.reserve(cfg.eval.n_eval);
  estimates.reserve(cfg.eval.n_eval);
  double mse_sum = 0.0;
  Vec x(d), z_hat(d);
  for (std::size_t i = 0; i < cfg.eval.n_eval; ++i) {
    for (double& v : x) v = prior_sd * rng.normal();
    const Vec z = matvec(p.a, x);
    for (std::size_t j = 0; j < d; ++j) z_hat[j] = z[j] + noise_sd * rng.normal();
    Vec est = matvec(kernel.mean_map, z_hat);
    if (draw) est = gaussian_draw(est, factor, rng);
    mse_sum += vec_squared_norm(vec_sub(est, x)) / static_cast<double>(d);
    truths.push_back(x);
    estimates.push_back(std::move(est));
  }

  ReportRow row;
  row.scenario = cfg.scenario;
  row.mode = estimator;
  row.snr_db = snr_db;
  row.T = 0;
  row.seed = seed;
  fill_distribution_metrics(cfg, m, estimates, truths,
                            SeededRng(seed, stream_id(kTagSliced, est_idx, snr_idx)), row);
  const double mse = mse_sum / static_cast<double>(cfg.eval.n_eval);
  row.mse = wants_metric(cfg, "mse") ? mse : kNan;
  row.psnr_db = wants_metric(cfg, "psnr_db") || wants_metric(cfg, "psnr")
                    ? (mse == 0.0 ? std::numeric_limits<double>::infinity()
                                  : 10.0 * std::log10(kPeak * kPeak / mse))
                    : kNan;
  return row;
}

ReportRow run_unconditional_cell(const ExperimentConfig& cfg, const ScenarioModels& m,
                                 std::uint64_t seed) {
  SeededRng rng(seed, stream_id(kTagUncond, 0, 0));
  const std::vector<Vec> samples =
      sample_unconditional(*m.score, m.schedule, cfg.eval.n_eval, rng);
  SeededRng ref_rng = rng.split(cfg.eval.n_eval + 1);
  std::vector<Vec> reference;
  reference.reserve(cfg.eval.n_eval);
  for (std::size_t i = 0; i < cfg.eval.n_eval; ++i) {
    Vec x = draw_source(cfg, m, ref_rng);
    reference.push_back(std::move(x));
  }

  ReportRow row;
  row.scenario = cfg.scenario;
  row.mode = "unconditional";
  row.snr_db = kNan;
  row.T = m.schedule.T;
  row.seed = seed;
  fill_distribution_metrics(cfg, m, samples, reference,
                            SeededRng(seed, stream_id(kTagSliced, 0, 0)), row);
  row.mse = kNan;
  row.psnr_db = kNan;
  return row;
}

ReportRow run_addps_cell(const ExperimentConfig& cfg, const ScenarioModels& m,
                         GuidanceMode mode, std::size_t mode_idx, double snr_db,
                         std::size_t snr_idx, std::uint64_t seed, const RunOptions& opts,
                         bool is_first_cell) {
  const ChannelConfig channel{snr_db, cfg.channel.power};
  GuidanceConfig gcfg;
  gcfg.mode = mode;
  gcfg.zeta = cfg.guidance.zeta;
  gcfg.step_rule = cfg.guidance.step_rule;
  gcfg.parity = cfg.guidance.parity;
  gcfg.rho_z = cfg.guidance.rho_z;
  gcfg.rho_x = cfg.guidance.rho_x;
  gcfg.jacobian = cfg.guidance.jacobian;
  gcfg.max_step = cfg.guidance.max_step;

  // Eval draws come from a mode-independent stream so the four modes see the
  // same (x, z_hat) pairs — the ablation compares them pairwise per seed.
  SeededRng data_rng(seed, stream_id(kTagData, 0, snr_idx));
  SeededRng chain_rng(seed, stream_id(kTagChain, mode_idx, snr_idx));

  std::vector<Vec> truths, recons;
  truths.reserve(cfg.eval.n_eval);
  recons.reserve(cfg.eval.n_eval);
  double mse_sum = 0.0;
  for (std::size_t j = 0; j < cfg.eval.n_eval; ++j) {
    const Vec x = draw_source(cfg, m, data_rng);
    const ChannelSignal z_hat = transmit(encode(m.codec, x), channel, data_rng);
    SeededRng sampler = chain_rng.split(j);
    AddpsResult result = addps_sample(z_hat, m.codec, *m.score, m.schedule, gcfg, sampler);
    if (is_first_cell && j == 0 && !opts.trace_path.empty()) {
      write_trace_jsonl(result.trace, opts.trace_path);
    }
    mse_sum += vec_squared_norm(vec_sub(result.x_hat, x)) / static_cast<double>(x.size());
    truths.push_back(x);
    recons.push_back(std::move(result.x_hat));
  }

  ReportRow row;
  row.scenario = cfg.scenario;
  row.mode = mode_name(mode);
  row.snr_db = snr_db;
  row.T = m.schedule.T;
  row.seed = seed;
  fill_distribution_metrics(cfg, m, recons, truths,
                            SeededRng(seed, stream_id(kTagSliced, mode_idx, snr_idx)), row);
  const double mse = mse_sum / static_cast<double>(cfg.eval.n_eval);
  row.mse = wants_metric(cfg, "mse") ? mse : kNan;
  row.psnr_db = wants_metric(cfg, "psnr_db") || wants_metric(cfg, "psnr")
                    ? (mse == 0.0 ? std::numeric_limits<double>::infinity()
                                  : 10.0 * std::log10(kPeak * kPeak / mse))
                    : kNan;
  return row;
}

}  // namespace

std::vector<ReportRow> run_scenario(const ExperimentConfig& cfg, const RunOptions& opts) {
  const ScenarioModels models = build_models(cfg);

  std::vector<std::string> modes;
  switch (cfg.kind) {
    case ScenarioKind::Oracle:
      modes = cfg.oracle.estimators;
      break;
    case ScenarioKind::Unconditional:
      modes = {"unconditional"};
      break;
    case ScenarioKind::Addps:
      for (GuidanceMode gm : cfg.guidance.modes) modes.emplace_back(mode_name(gm));
      break;
  }
  const std::size_t n_snr = cfg.kind == ScenarioKind::Unconditional ? 1 : cfg.channel.snr_db.size();

  std::vector<Cell> cells;
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    for (std::size_t si = 0; si < n_snr; ++si) {
      for (std::size_t t = 0; t < cfg.eval.n_seeds; ++t) cells.push_back({mi, si, t});
    }
  }

  std::vector<ReportRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  Errc first_error_code = Errc::NonFiniteState;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= cells.size() || failed.load()) return;
      const Cell& c = cells[idx];
      const std::uint64_t seed = cfg.seed + c.trial;
      const auto start = std::chrono::steady_clock::now();
      try {
        switch (cfg.kind) {
          case ScenarioKind::Oracle:
            rows[idx] = run_oracle_cell(cfg, models, modes[c.mode_idx], c.mode_idx,
                                        cfg.channel.snr_db[c.snr_idx], c.snr_idx, seed);
            break;
          case ScenarioKind::Unconditional:
            rows[idx] = run_unconditional_cell(cfg, models, seed);
            break;
          case ScenarioKind::Addps:
            rows[idx] = run_addps_cell(cfg, models, cfg.guidance.modes[c.mode_idx], c.mode_idx,
                                       cfg.channel.snr_db[c.snr_idx], c.snr_idx, seed, opts,
                                       idx == 0);
            break;
        }
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) {
          first_error = std::string(e.what()) + " [mode=" + modes[c.mode_idx] +
                        " snr=" + format_metric(cfg.kind == ScenarioKind::Unconditional
                                                    ? std::numeric_limits<double>::quiet_NaN()
                                                    : cfg.channel.snr_db[c.snr_idx]) +
                        " seed=" + std::to_string(seed) + "]";
          first_error_code = e.code();
        }
        return;
      }
      if (opts.timings) {
        rows[idx].wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();
      }
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, cells.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::size_t i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failed.load()) raise(first_error_code, first_error);
  return rows;
}

}  // namespace addps
