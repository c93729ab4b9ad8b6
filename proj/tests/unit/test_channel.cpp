#include <cmath>
#include <vector>

#include <doctest.h>

#include "addps/channel.hpp"
#include "helpers.hpp"

using namespace addps;
using namespace addps::testing;

TEST_SUITE("channel") {

TEST_CASE("power_normalize scales a 3-4-5 vector to unit power") {
  const ChannelSignal s = power_normalize({3.0, 4.0}, 1, 1.0);
  CHECK(s.values[0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(s.values[1] == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(s.k == 1);
}

TEST_CASE("power_normalize is idempotent on already-normalized input") {
  const ChannelSignal once = power_normalize({0.3, -1.1, 0.7, 0.2}, 2, 1.0);
  const ChannelSignal twice = power_normalize(once.values, 2, 1.0);
  for (std::size_t i = 0; i < once.values.size(); ++i)
    CHECK(std::abs(twice.values[i] - once.values[i]) < 1e-12);
}

TEST_CASE("power_normalize hits the power target exactly") {
  SeededRng rng(61, 0);
  const Vec z = random_vec(8, rng);
  const ChannelSignal s = power_normalize(z, 4, 2.0);
  CHECK(std::abs(vec_squared_norm(s.values) / 4.0 - 2.0) < 1e-12);
  CHECK(std::abs(s.per_symbol_power() - 2.0) < 1e-12);
}

TEST_CASE("power_normalize rejects all-zero and mis-sized input") {
  CHECK(thrown_code([] { power_normalize({0.0, 0.0}, 1, 1.0); }) == Errc::ZeroSignal);
  CHECK(thrown_code([] { power_normalize({1.0, 2.0, 3.0}, 1, 1.0); }) ==
        Errc::DimensionMismatch);
}

TEST_CASE("snr_to_noise_variance follows P * 10^(-snr/10)") {
  CHECK(snr_to_noise_variance({0.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(snr_to_noise_variance({1.0, 1.0}) ==
        doctest::Approx(0.7943282347242815).epsilon(1e-14));
  CHECK(snr_to_noise_variance({-1.0, 1.0}) ==
        doctest::Approx(1.2589254117941673).epsilon(1e-14));
  CHECK(snr_to_noise_variance({3.0, 2.0}) ==
        doctest::Approx(2.0 * std::pow(10.0, -0.3)).epsilon(1e-14));
  CHECK(snr_to_noise_variance(ChannelConfig::noiseless()) == 0.0);
}

TEST_CASE("the noiseless sentinel passes the signal through exactly") {
  SeededRng rng(62, 0);
  const ChannelSignal z = power_normalize(random_vec(6, rng), 3, 1.0);
  const ChannelSignal y = transmit(z, ChannelConfig::noiseless(), rng);
  CHECK(y.values == z.values);
}

TEST_CASE("transmit is deterministic under a fixed seed and leaves input unchanged") {
  const ChannelSignal z = power_normalize({1.0, 2.0, -0.5, 0.25}, 2, 1.0);
  const Vec before = z.values;
  SeededRng a(63, 0);
  SeededRng b(63, 0);
  const ChannelSignal ya = transmit(z, {0.0, 1.0}, a);
  const ChannelSignal yb = transmit(z, {0.0, 1.0}, b);
  CHECK(ya.values == yb.values);
  CHECK(z.values == before);
}

TEST_CASE("transmit rejects unnormalized signals") {
  ChannelSignal bad;
  bad.values = {10.0, 10.0};
  bad.k = 1;
  bad.power = 1.0;
  SeededRng rng(1, 0);
  CHECK(thrown_code([&] { transmit(bad, {0.0, 1.0}, rng); }) == Errc::NotNormalized);
}

TEST_CASE("per-real-component noise variance is sigma^2/2 at 0 dB") {
  const ChannelSignal z = power_normalize({1.0, -1.0}, 1, 1.0);
  SeededRng rng(64, 0);
  const int n = 100000;
  double sum0 = 0.0, sum0sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const ChannelSignal y = transmit(z, {0.0, 1.0}, rng);
    const double d = y.values[0] - z.values[0];
    sum0 += d;
    sum0sq += d * d;
  }
  const double mean = sum0 / n;
  const double var = sum0sq / n - mean * mean;
  CHECK(std::abs(var - 0.5) < 0.01);
}

TEST_CASE("mean squared perturbation per symbol converges to sigma^2") {
  const std::size_t k = 2;
  const ChannelSignal z = power_normalize({0.4, -0.9, 1.3, 0.2}, k, 1.0);
  const ChannelConfig cfg{4.0, 1.0};
  const double sigma2 = snr_to_noise_variance(cfg);
  SeededRng rng(65, 0);
  const int n = 100000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const ChannelSignal y = transmit(z, cfg, rng);
    acc += vec_squared_norm(vec_sub(y.values, z.values));
  }
  const double per_symbol = acc / n / static_cast<double>(k);
  CHECK(std::abs(per_symbol - sigma2) / sigma2 < 0.02);
}

}  // TEST_SUITE
