#pragma once

#include <memory>
#include <string>
#include <vector>

#include "addps/codec.hpp"
#include "addps/config.hpp"
#include "addps/diffusion.hpp"
#include "addps/gaussian_model.hpp"
#include "addps/report.hpp"
#include "addps/rng.hpp"

namespace addps {

struct RunOptions {
  std::size_t jobs = 1;
  bool timings = false;         // leave wall_ms at 0 unless requested
  std::string trace_path;       // first chain of the first cell writes here
};

/// Immutable per-scenario state shared by all cells.
struct ScenarioModels {
  NoiseSchedule schedule;                      // non-oracle kinds
  std::shared_ptr<const ScoreFunction> score;  // non-oracle kinds
  CodecModel codec;                            // addps kind
  GaussianModel source_moments;
  std::shared_ptr<const GmmPrior> gmm;         // set for gmm sources
};

ScenarioModels build_models(const ExperimentConfig& cfg);

Vec draw_source(const ExperimentConfig& cfg, const ScenarioModels& m, SeededRng& rng);

/// Runs every (mode, snr, trial) cell and returns rows in deterministic
/// order (modes in config order, then SNRs, then trials). Identical config
/// and seed give identical rows regardless of the job count.
std::vector<ReportRow> run_scenario(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// `# `-prefix-ready header: version string plus the resolved config echo.
std::vector<std::string> report_header_lines(const ExperimentConfig& cfg);

/// Standalone trainers behind the train-codec / train-score verbs.
CodecModel train_codec_from_config(const ExperimentConfig& cfg);
MlpScore train_score_from_config(const ExperimentConfig& cfg);

}  // namespace addps
