#pragma once

#include <limits>

#include "addps/numerics.hpp"
#include "addps/rng.hpp"

namespace addps {

/// AWGN channel configuration. snr_db = +infinity is the noiseless sentinel.
struct ChannelConfig {
  double snr_db = 0.0;
  double power = 1.0;  // average power P per complex symbol

  static ChannelConfig noiseless(double power = 1.0) {
    return {std::numeric_limits<double>::infinity(), power};
  }
  bool is_noiseless() const { return snr_db == std::numeric_limits<double>::infinity(); }
};

/// k complex channel symbols stored as 2k interleaved real components.
struct ChannelSignal {
  Vec values;
  std::size_t k = 0;
  double power = 1.0;  // power target the signal was normalized to

  double per_symbol_power() const {
    return k == 0 ? 0.0 : vec_squared_norm(values) / static_cast<double>(k);
  }
};

/// Scales z so that (1/k)*||out||^2 == power. All-zero input raises ZeroSignal.
ChannelSignal power_normalize(const Vec& z, std::size_t k, double power = 1.0);

/// sigma_ch^2 = P * 10^(-snr_db/10); zero for the noiseless sentinel.
double snr_to_noise_variance(const ChannelConfig& cfg);

/// y = z + n with i.i.d. N(0, sigma_ch^2/2) per real component, so each
/// complex symbol sees noise variance sigma_ch^2. Requires z normalized to
/// cfg.power within 1e-6.
ChannelSignal transmit(const ChannelSignal& z, const ChannelConfig& cfg, SeededRng& rng);

}  // namespace addps
