#include <cmath>
#include <vector>

#include <doctest.h>

#include "addps/channel.hpp"
#include "addps/codec.hpp"
#include "helpers.hpp"

using namespace addps;
using namespace addps::testing;

namespace {

CodecModel make_mlp_codec(std::size_t n, std::size_t k, std::uint64_t seed) {
  SeededRng rng(seed, 0);
  return CodecModel::mlp(n, k, rng);
}

std::vector<Vec> two_mode_dataset(std::size_t n, std::uint64_t seed) {
  SeededRng rng(seed, 0);
  std::vector<Vec> xs;
  xs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double cx = rng.uniform() < 0.5 ? -1.5 : 1.5;
    xs.push_back({cx + std::sqrt(0.3) * rng.normal(), std::sqrt(0.3) * rng.normal()});
  }
  return xs;
}

}  // namespace

TEST_SUITE("codec") {

TEST_CASE("identity codec passes unit-power input through") {
  const CodecModel m = CodecModel::identity(2);
  const ChannelSignal z = encode(m, {0.6, 0.8});
  CHECK(z.values[0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(z.values[1] == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(decode(m, z) == z.values);
}

TEST_CASE("row-selector linear codec applies A then normalizes") {
  Matrix a(2, 4);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;
  const CodecModel m = CodecModel::linear(a);
  const ChannelSignal z = encode(m, {3.0, 4.0, 0.0, 0.0});
  CHECK(z.values[0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(z.values[1] == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("mlp encode is deterministic") {
  const CodecModel m = make_mlp_codec(4, 1, 81);
  const Vec x = {0.3, -0.7, 1.1, 0.05};
  CHECK(encode(m, x).values == encode(m, x).values);
}

TEST_CASE("pseudo-inverse decoder recovers the row-space projection when noiseless") {
  SeededRng rng(82, 0);
  Matrix a(2, 4);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) a(i, j) = rng.normal();
  const CodecModel m = CodecModel::linear(a);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec x = random_vec(4, rng);
    const ChannelSignal z = encode(m, x);
    // encode = power_normalize(A x): decode should return the projection of
    // the same-normalized source onto row-space(A).
    const double c = vec_norm(z.values) / vec_norm(matvec(a, x));
    const Matrix aat = matmul(a, a.transposed());
    const Vec w = solve_spd(aat, matvec(a, vec_scale(x, c)));
    const Vec proj = matvec_transposed(a, w);
    CHECK(max_rel_err(decode(m, z), proj, 1e-9) < 1e-9);
  }
}

TEST_CASE("every codec kind emits exactly the target power per symbol") {
  SeededRng rng(83, 0);
  const CodecModel ident = CodecModel::identity(4, 2.0);
  Matrix a(2, 4);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) a(i, j) = rng.normal();
  const CodecModel lin = CodecModel::linear(a, 2.0);
  SeededRng mrng(84, 0);
  const CodecModel mlp = CodecModel::mlp(4, 1, mrng, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = random_vec(4, rng);
    CHECK(std::abs(encode(ident, x).per_symbol_power() - 2.0) < 1e-12);
    CHECK(std::abs(encode(lin, x).per_symbol_power() - 2.0) < 1e-12);
    CHECK(std::abs(encode(mlp, x).per_symbol_power() - 2.0) < 1e-12);
  }
}

TEST_CASE("linear codec construction rejects rank deficiency") {
  Matrix dup(2, 4);
  dup(0, 0) = 1.0;
  dup(1, 0) = 1.0;  // duplicate row direction
  CHECK(thrown_code([&] { CodecModel::linear(dup); }) == Errc::ValidationError);
  Matrix wide(4, 2);  // more rows than columns cannot have full row rank
  CHECK(thrown_code([&] { CodecModel::linear(wide); }) == Errc::ValidationError);
}

TEST_CASE("encode and decode validate dimensions") {
  const CodecModel m = CodecModel::identity(2);
  CHECK(thrown_code([&] { encode(m, {1.0, 2.0, 3.0}); }) == Errc::DimensionMismatch);
  ChannelSignal z;
  z.values = {1.0, 2.0, 3.0, 4.0};
  z.k = 2;
  CHECK(thrown_code([&] { decode(m, z); }) == Errc::DimensionMismatch);
}

TEST_CASE("encoder_pullback of a zero cotangent is zero") {
  const CodecModel m = make_mlp_codec(3, 1, 85);
  const Vec g = encoder_pullback(m, {0.2, -0.4, 0.9}, {0.0, 0.0});
  for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("encoder_pullback matches finite differences for all codec kinds") {
  SeededRng setup(86, 0);
  Matrix a(2, 4);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) a(i, j) = setup.normal();
  const CodecModel kinds[] = {CodecModel::identity(4), CodecModel::linear(a),
                              make_mlp_codec(4, 1, 87)};
  for (const CodecModel& m : kinds) {
    for (int trial = 0; trial < 50; ++trial) {
      SeededRng rng(880 + trial, m.kind == CodecKind::Mlp ? 2 : 1);
      const Vec x = random_vec(4, rng);
      const Vec cot = random_vec(2 * m.k_channel, rng);
      const Vec got = encoder_pullback(m, x, cot);
      const auto dot_loss = [&](const Vec& p) {
        return vec_dot(encode(m, p).values, cot);
      };
      CHECK(max_rel_err(got, fd_gradient(dot_loss, x), 1e-6) < 1e-4);
    }
  }
}

TEST_CASE("training memorizes a single repeated point over a noiseless channel") {
  const CodecModel m = make_mlp_codec(2, 1, 88);
  const std::vector<Vec> dataset(32, Vec{0.4, -0.8});
  TrainConfig tc;
  tc.learning_rate = 5e-3;
  tc.epochs = 300;
  tc.batch_size = 16;
  tc.seed = 5;
  double final_loss = 0.0;
  train_deepjscc(m, dataset, ChannelConfig::noiseless(), tc, nullptr, &final_loss);
  CHECK(final_loss < 1e-3);
}

TEST_CASE("a zero learning rate leaves the parameters unchanged") {
  const CodecModel m = make_mlp_codec(2, 1, 89);
  TrainConfig tc;
  tc.learning_rate = 0.0;
  tc.epochs = 3;
  tc.seed = 6;
  const CodecModel out = train_deepjscc(m, two_mode_dataset(64, 90), {1.0, 1.0}, tc);
  const Vec x = {0.5, -0.25};
  CHECK(encode(out, x).values == encode(m, x).values);
  const ChannelSignal z = encode(m, x);
  CHECK(decode(out, z) == decode(m, z));
}

TEST_CASE("training on a 2-D GMM at 1 dB reduces the epoch loss") {
  const CodecModel m = make_mlp_codec(2, 1, 91);
  TrainConfig tc;
  tc.learning_rate = 3e-3;
  tc.epochs = 200;
  tc.batch_size = 32;
  tc.seed = 7;
  double first = 0.0, last = 0.0;
  const CodecModel trained =
      train_deepjscc(m, two_mode_dataset(128, 92), {1.0, 1.0}, tc, &first, &last);
  CHECK(last < first);

  // The trained decoder should beat the untrained one on clean reconstructions.
  const std::vector<Vec> test = two_mode_dataset(64, 93);
  double mse_before = 0.0, mse_after = 0.0;
  for (const Vec& x : test) {
    mse_before += vec_squared_norm(vec_sub(decode(m, encode(m, x)), x));
    mse_after += vec_squared_norm(vec_sub(decode(trained, encode(trained, x)), x));
  }
  CHECK(mse_after < mse_before);
}

TEST_CASE("training requires an Mlp codec and a nonempty dataset") {
  TrainConfig tc;
  CHECK(thrown_code([&] {
          train_deepjscc(CodecModel::identity(2), {{1.0, 2.0}}, {0.0, 1.0}, tc);
        }) == Errc::ValidationError);
  const CodecModel m = make_mlp_codec(2, 1, 94);
  CHECK(thrown_code([&] { train_deepjscc(m, {}, {0.0, 1.0}, tc); }) ==
        Errc::ValidationError);
}

}  // TEST_SUITE
