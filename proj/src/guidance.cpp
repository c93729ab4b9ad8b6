#include "addps/guidance.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "addps/autodiff.hpp"
#include "addps/errors.hpp"

namespace addps {
namespace {

constexpr double kResidualFloor = 1e-8;

// Tape primitive for the score at a fixed step.
class ScoreHook final : public CustomVjp {
 public:
  ScoreHook(const ScoreFunction& sf, std::size_t i, const NoiseSchedule& s)
      : sf_(sf), i_(i), s_(s) {}

  Vec forward(const Vec& x) const override { return sf_.score(x, i_, s_); }
  Vec vjp(const Vec& x, const Vec& cotangent) const override {
    return sf_.score_vjp(x, i_, s_, cotangent);
  }

 private:
  const ScoreFunction& sf_;
  std::size_t i_;
  const NoiseSchedule& s_;
};

void check_dims(const Vec& x_t, const CodecModel& codec, const ScoreFunction& sf) {
  if (x_t.size() != codec.n_source) {
    raise(Errc::DimensionMismatch, "guidance: x_t length " + std::to_string(x_t.size()) +
                                       " does not match codec source dim " +
                                       std::to_string(codec.n_source));
  }
  if (sf.dim() != codec.n_source) {
    raise(Errc::DimensionMismatch, "guidance: score dim does not match codec source dim");
  }
}

// Records the posterior-mean estimate on the tape and returns its node.
NodeId record_tweedie(Tape& t, NodeId x, const ScoreHook& hook, const Vec& x_t, std::size_t i,
                      const ScoreFunction& sf, const NoiseSchedule& s, ScoreJacobian jacobian) {
  const double abar = s.alpha_bar_at(i);
  const NodeId score_node = jacobian == ScoreJacobian::FullChain
                                ? t.custom(hook, x)
                                : t.constant(sf.score(x_t, i, s));
  return t.scale(t.add(x, t.scale(score_node, 1.0 - abar)), 1.0 / std::sqrt(abar));
}

GuidanceGrad finish(Tape& t, NodeId x, NodeId loss, const char* what) {
  const double loss_value = t.scalar_value(loss);
  t.backward(loss);
  Vec g = t.adjoint(x);
  if (!vec_all_finite(g)) {
    raise(Errc::NonFiniteGradient, std::string(what) + " produced a non-finite gradient");
  }
  return {std::move(g), std::sqrt(std::max(0.0, loss_value))};
}

}  // namespace

GuidanceGrad z_guidance_grad(const Vec& x_t, std::size_t i, const ChannelSignal& z_hat,
                             const CodecModel& codec, const ScoreFunction& sf,
                             const NoiseSchedule& s, ScoreJacobian jacobian) {
  check_dims(x_t, codec, sf);
  if (z_hat.values.size() != 2 * codec.k_channel) {
    raise(Errc::DimensionMismatch, "z_guidance_grad: z_hat length mismatch");
  }
  const ScoreHook hook(sf, i, s);
  Tape t;
  const NodeId x = t.input(x_t);
  const NodeId x0 = record_tweedie(t, x, hook, x_t, i, sf, s, jacobian);
  const NodeId z = record_encode(codec, t, x0);
  const NodeId loss = t.squared_norm(t.sub(t.constant(z_hat.values), z));
  return finish(t, x, loss, "z_guidance_grad");
}

GuidanceGrad x_guidance_grad(const Vec& x_t, std::size_t i, const Vec& x_tilde,
                             const CodecModel& codec, const ScoreFunction& sf,
                             const NoiseSchedule& s, ScoreJacobian jacobian) {
  check_dims(x_t, codec, sf);
  if (x_tilde.size() != codec.n_source) {
    raise(Errc::DimensionMismatch, "x_guidance_grad: x_tilde length mismatch");
  }
  const ScoreHook hook(sf, i, s);
  Tape t;
  const NodeId x = t.input(x_t);
  const NodeId x0 = record_tweedie(t, x, hook, x_t, i, sf, s, jacobian);
  const NodeId xr = record_decode(codec, t, record_encode(codec, t, x0));
  const NodeId loss = t.squared_norm(t.sub(t.constant(x_tilde), xr));
  return finish(t, x, loss, "x_guidance_grad");
}

Domain select_domain(std::size_t i, const GuidanceConfig& cfg) {
  switch (cfg.mode) {
    case GuidanceMode::ZOnly:
      return Domain::Z;
    case GuidanceMode::XOnly:
      return Domain::X;
    case GuidanceMode::Simultaneous:
      return Domain::Both;
    case GuidanceMode::Alternating: {
      const bool even = i % 2 == 0;
      return even == (cfg.parity == Parity::EvenZ) ? Domain::Z : Domain::X;
    }
  }
  raise(Errc::ValidationError, "unknown guidance mode");
}

Vec simultaneous_grad(const Vec& x_t, std::size_t i, const ChannelSignal& z_hat,
                      const Vec& x_tilde, const CodecModel& codec, const ScoreFunction& sf,
                      const NoiseSchedule& s, const GuidanceConfig& cfg) {
  const GuidanceGrad gz = z_guidance_grad(x_t, i, z_hat, codec, sf, s, cfg.jacobian);
  const GuidanceGrad gx = x_guidance_grad(x_t, i, x_tilde, codec, sf, s, cfg.jacobian);
  Vec out(x_t.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = cfg.rho_z * gz.gradient[j] + cfg.rho_x * gx.gradient[j];
  }
  return out;
}

AddpsResult addps_sample(const ChannelSignal& z_hat, const CodecModel& codec,
                         const ScoreFunction& sf, const NoiseSchedule& s,
                         const GuidanceConfig& cfg, SeededRng& rng) {
  if (s.T == 0 || s.alpha_bar.empty() || s.alpha_bar.back() >= 0.01) {
    raise(Errc::TerminalNotNoisy, "addps_sample needs a near-pure-noise terminal step");
  }
  if (cfg.zeta < 0.0 || cfg.rho_z < 0.0 || cfg.rho_x < 0.0 || cfg.max_step < 0.0) {
    raise(Errc::ValidationError, "guidance strengths must be nonnegative");
  }
  if (sf.dim() != codec.n_source) {
    raise(Errc::DimensionMismatch, "addps_sample: score dim does not match codec");
  }

  const Vec x_tilde = decode(codec, z_hat);
  const double abar_t = s.alpha_bar.back();
  const double init_sd = std::sqrt(1.0 - abar_t);
  const double init_scale = std::sqrt(abar_t);
  Vec x(x_tilde.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    x[j] = init_scale * x_tilde[j] + init_sd * rng.normal();
  }

  AddpsResult result;
  result.trace.records.reserve(cfg.mode == GuidanceMode::Simultaneous ? 2 * s.T : s.T);
  for (std::size_t i = s.T; i >= 1; --i) {
    const Vec proposal = ancestral_step(x, i, sf, s, rng);
    Vec g;
    double residual = 0.0;
    const Domain dom = select_domain(i, cfg);
    if (dom == Domain::Both) {
      const GuidanceGrad gz = z_guidance_grad(x, i, z_hat, codec, sf, s, cfg.jacobian);
      const GuidanceGrad gx = x_guidance_grad(x, i, x_tilde, codec, sf, s, cfg.jacobian);
      g.resize(x.size());
      for (std::size_t j = 0; j < g.size(); ++j) {
        g[j] = cfg.rho_z * gz.gradient[j] + cfg.rho_x * gx.gradient[j];
      }
      residual = gz.residual + gx.residual;
      result.trace.records.push_back({i, Domain::Z, gz.residual, vec_norm(gz.gradient)});
      result.trace.records.push_back({i, Domain::X, gx.residual, vec_norm(gx.gradient)});
    } else {
      GuidanceGrad gg = dom == Domain::Z
                            ? z_guidance_grad(x, i, z_hat, codec, sf, s, cfg.jacobian)
                            : x_guidance_grad(x, i, x_tilde, codec, sf, s, cfg.jacobian);
      residual = gg.residual;
      result.trace.records.push_back({i, dom, gg.residual, vec_norm(gg.gradient)});
      g = std::move(gg.gradient);
    }
    double zeta_t = cfg.step_rule == StepRule::ResidualNormalized
                        ? cfg.zeta / (residual + kResidualFloor)
                        : cfg.zeta;
    if (cfg.max_step > 0.0) {
      const double move = zeta_t * vec_norm(g);
      if (move > cfg.max_step) zeta_t *= cfg.max_step / move;
    }
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = proposal[j] - zeta_t * g[j];
    if (!vec_all_finite(x)) {
      raise(Errc::NonFiniteState, "addps_sample state became non-finite at step " +
                                      std::to_string(i) + "; reduce zeta");
    }
  }
  result.x_hat = std::move(x);
  return result;
}

const char* domain_name(Domain d) {
  switch (d) {
    case Domain::Z: return "Z";
    case Domain::X: return "X";
    case Domain::Both: return "Both";
  }
  return "?";
}

const char* mode_name(GuidanceMode m) {
  switch (m) {
    case GuidanceMode::ZOnly: return "ZOnly";
    case GuidanceMode::XOnly: return "XOnly";
    case GuidanceMode::Simultaneous: return "Simultaneous";
    case GuidanceMode::Alternating: return "Alternating";
  }
  return "?";
}

void write_trace_jsonl(const GuidanceTrace& trace, const std::string& path) {
  std::ofstream os(path);
  if (!os) raise(Errc::IoError, "cannot open trace for writing: " + path);
  for (const GuidanceTrace::Record& r : trace.records) {
    nlohmann::json j{{"step", r.step},
                     {"domain", domain_name(r.domain)},
                     {"residual", r.residual},
                     {"grad_norm", r.grad_norm}};
    os << j.dump() << '\n';
  }
  if (!os) raise(Errc::IoError, "write failed for trace: " + path);
}

GuidanceTrace load_trace_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) raise(Errc::IoError, "cannot open trace: " + path);
  GuidanceTrace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      raise(Errc::ParseError, path + ":" + std::to_string(lineno) + ": invalid trace record");
    }
    GuidanceTrace::Record r;
    r.step = j.at("step").get<std::size_t>();
    const std::string dom = j.at("domain").get<std::string>();
    if (dom == "Z") {
      r.domain = Domain::Z;
    } else if (dom == "X") {
      r.domain = Domain::X;
    } else {
      raise(Errc::ParseError, path + ":" + std::to_string(lineno) + ": unknown domain " + dom);
    }
    r.residual = j.at("residual").get<double>();
    r.grad_norm = j.at("grad_norm").get<double>();
    trace.records.push_back(r);
  }
  return trace;
}

}  // namespace addps
