#include "addps/channel.hpp"

#include <cmath>
#include <string>

namespace addps {

ChannelSignal power_normalize(const Vec& z, std::size_t k, double power) {
  if (k == 0 || z.size() != 2 * k)
    raise(Errc::DimensionMismatch,
          "power_normalize: expected 2k = " + std::to_string(2 * k) + " values, got " +
              std::to_string(z.size()));
  if (power <= 0.0) raise(Errc::ValidationError, "power must be positive");
  const double sq = vec_squared_norm(z);
  if (sq == 0.0) raise(Errc::ZeroSignal, "all-zero signal has no valid normalization");
  const double gain = std::sqrt(static_cast<double>(k) * power / sq);
  return ChannelSignal{vec_scale(z, gain), k, power};
}

double snr_to_noise_variance(const ChannelConfig& cfg) {
  if (cfg.is_noiseless()) return 0.0;
  return cfg.power * std::pow(10.0, -cfg.snr_db / 10.0);
}

ChannelSignal transmit(const ChannelSignal& z, const ChannelConfig& cfg, SeededRng& rng) {
  if (z.k == 0 || z.values.size() != 2 * z.k)
    raise(Errc::DimensionMismatch, "transmit: malformed channel signal");
  if (std::abs(z.per_symbol_power() - cfg.power) > 1e-6)
    raise(Errc::NotNormalized, "signal power " + std::to_string(z.per_symbol_power()) +
                                   " deviates from P = " + std::to_string(cfg.power));
  const double var = snr_to_noise_variance(cfg);
  if (var == 0.0) return z;
  const double sigma_per_component = std::sqrt(var / 2.0);
  ChannelSignal out = z;
  for (auto& v : out.values) v += sigma_per_component * rng.normal();
  return out;
}

}  // namespace addps
