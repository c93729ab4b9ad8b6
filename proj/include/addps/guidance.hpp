#pragma once

#include <string>
#include <vector>

#include "addps/channel.hpp"
#include "addps/codec.hpp"
#include "addps/diffusion.hpp"
#include "addps/numerics.hpp"
#include "addps/rng.hpp"

namespace addps {

enum class GuidanceMode { ZOnly, XOnly, Simultaneous, Alternating };

/// Residual-normalized: zeta_t = zeta / (residual + 1e-8); Constant: zeta.
enum class StepRule { Constant, ResidualNormalized };

/// Which step parity receives Z-domain guidance in Alternating mode.
enum class Parity { EvenZ, OddZ };

/// FullChain differentiates through the score function inside the
/// posterior-mean estimate; Decoupled freezes the score (treats
/// d x0_hat / d x_t as (1/sqrt(abar)) I) for speed comparisons.
enum class ScoreJacobian { FullChain, Decoupled };

enum class Domain { Z, X, Both };

struct GuidanceConfig {
  GuidanceMode mode = GuidanceMode::Alternating;
  double zeta = 1.0;
  StepRule step_rule = StepRule::ResidualNormalized;
  double rho_z = 1.0;  // Simultaneous weights
  double rho_x = 1.0;
  double sigma_x2 = 0.0;  // effective image-domain noise scale; informational
  Parity parity = Parity::EvenZ;
  ScoreJacobian jacobian = ScoreJacobian::FullChain;
  // Trust region: the applied guided move |zeta_t * g| is capped at max_step
  // (0 disables). The encoder's power normalization has a Jacobian singularity
  // where the pre-normalization output crosses zero; at toy dimensions guided
  // states do wander through it, and one uncapped step can fling a chain far
  // off scale. Typical moves are two orders of magnitude below the default.
  double max_step = 0.5;
};

struct GuidanceGrad {
  Vec gradient;
  double residual = 0.0;
};

/// d/d x_t of ||z_hat - E(x0_hat)||^2 with x0_hat the posterior-mean estimate
/// at step i; residual is the unsquared norm. Reverse-mode through the score
/// (per `jacobian`) and the encoder including its normalization layer.
GuidanceGrad z_guidance_grad(const Vec& x_t, std::size_t i, const ChannelSignal& z_hat,
                             const CodecModel& codec, const ScoreFunction& sf,
                             const NoiseSchedule& s,
                             ScoreJacobian jacobian = ScoreJacobian::FullChain);

/// d/d x_t of ||x_tilde - D(E(x0_hat))||^2, analogous.
GuidanceGrad x_guidance_grad(const Vec& x_t, std::size_t i, const Vec& x_tilde,
                             const CodecModel& codec, const ScoreFunction& sf,
                             const NoiseSchedule& s,
                             ScoreJacobian jacobian = ScoreJacobian::FullChain);

/// Alternating with default parity: even i -> Z, odd i -> X.
Domain select_domain(std::size_t i, const GuidanceConfig& cfg);

/// rho_z * g_Z + rho_x * g_X at the same x_t.
Vec simultaneous_grad(const Vec& x_t, std::size_t i, const ChannelSignal& z_hat,
                      const Vec& x_tilde, const CodecModel& codec, const ScoreFunction& sf,
                      const NoiseSchedule& s, const GuidanceConfig& cfg);

struct GuidanceTrace {
  struct Record {
    std::size_t step = 0;
    Domain domain = Domain::Z;
    double residual = 0.0;
    double grad_norm = 0.0;
  };
  std::vector<Record> records;
};

struct AddpsResult {
  Vec x_hat;
  GuidanceTrace trace;
};

/// Posterior sampler: decodes x_tilde = D(z_hat) once, initializes
/// x_T ~ N(sqrt(abar_T) x_tilde, (1-abar_T) I), then per step takes the
/// unguided ancestral proposal and subtracts zeta_t times the gradient of
/// the domain chosen by select_domain (ZOnly/XOnly force one domain;
/// Simultaneous applies the weighted sum and records both domains).
AddpsResult addps_sample(const ChannelSignal& z_hat, const CodecModel& codec,
                         const ScoreFunction& sf, const NoiseSchedule& s,
                         const GuidanceConfig& cfg, SeededRng& rng);

const char* domain_name(Domain d);
const char* mode_name(GuidanceMode m);

/// One JSON object per step record.
void write_trace_jsonl(const GuidanceTrace& trace, const std::string& path);
GuidanceTrace load_trace_jsonl(const std::string& path);

}  // namespace addps
