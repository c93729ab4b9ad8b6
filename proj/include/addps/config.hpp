#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "addps/codec.hpp"
#include "addps/guidance.hpp"
#include "addps/numerics.hpp"
#include "addps/train.hpp"

namespace addps {

inline constexpr const char* kVersion = "0.1.0";

/// What the scenario measures: closed-form estimator marginals, unguided
/// reverse sampling, or the full guided receiver.
enum class ScenarioKind { Oracle, Unconditional, Addps };

struct SourceSpec {
  enum class Kind { Gaussian, Gmm } kind = Kind::Gaussian;
  std::size_t dim = 2;
  double sigma_x2 = 1.0;      // gaussian
  std::vector<Vec> means;     // gmm
  Vec weights;                // gmm; defaults to uniform
  double component_var = 0.3; // gmm isotropic component variance
};

struct CodecSpec {
  CodecKind kind = CodecKind::Identity;
  std::size_t n = 2;
  std::size_t k = 1;
  std::string checkpoint;  // load path (must exist); empty = construct/train
  bool train_inline = false;
  TrainConfig train;
  std::size_t train_samples = 512;
  double train_snr_db = 0.0;
  bool train_snr_set = false;  // defaults to the first channel SNR
};

struct ChannelSpec {
  std::vector<double> snr_db{0.0};
  double power = 1.0;
};

struct DiffusionSpec {
  std::size_t T = 1000;
  double beta_min = 1e-4;
  double beta_max = 0.02;
  enum class Score { AnalyticSource, TrainedMlp } score = Score::AnalyticSource;
  std::string checkpoint;
  bool train_inline = false;
  TrainConfig train;
  std::size_t train_samples = 2048;
};

struct GuidanceSpec {
  std::vector<GuidanceMode> modes{GuidanceMode::Alternating};
  double zeta = 1.0;
  StepRule step_rule = StepRule::ResidualNormalized;
  Parity parity = Parity::EvenZ;
  double rho_z = 1.0;
  double rho_x = 1.0;
  ScoreJacobian jacobian = ScoreJacobian::FullChain;
  double max_step = 0.5;  // per-step guided-move cap; 0 disables
};

struct EvalSpec {
  std::size_t n_eval = 128;
  std::size_t n_seeds = 1;
  std::size_t sw_projections = 64;
  std::vector<std::string> metrics{"frechet", "sliced_w", "mse", "psnr"};
};

struct OracleSpec {
  // row labels; each runs the estimator pipeline over the eval draws
  std::vector<std::string> estimators{"posterior", "map"};
};

struct ExperimentConfig {
  std::string scenario;
  ScenarioKind kind = ScenarioKind::Addps;
  std::uint64_t seed = 0;
  SourceSpec source;
  CodecSpec codec;
  ChannelSpec channel;
  DiffusionSpec diffusion;
  GuidanceSpec guidance;
  EvalSpec eval;
  OracleSpec oracle;
};

/// Parses and validates a scenario file. The seed is overridden by the
/// ADDPS_SEED environment variable when set.
ExperimentConfig load_config(const std::string& path);

/// Same, from in-memory text; `origin` names the source in errors.
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

/// Canonical rendering with every default filled in; embedded in report
/// headers so a report pins its full configuration.
std::string resolved_config_text(const ExperimentConfig& cfg);

/// Text of a shipped scenario (prop1, prop2, unconditional-sanity, ablation,
/// snr-sweep); ValidationError for unknown names.
std::string builtin_scenario_text(const std::string& name);
std::vector<std::string> builtin_scenario_names();

/// Loads `name_or_path` as a file if it exists, else as a builtin name.
ExperimentConfig resolve_config(const std::string& name_or_path);

}  // namespace addps
