#include <cmath>
#include <cstdint>
#include <vector>

#include <doctest.h>

#include "addps/rng.hpp"

using namespace addps;

TEST_SUITE("rng") {

TEST_CASE("identical (seed, stream) reproduces the identical draw sequence") {
  SeededRng a(42, 7);
  SeededRng b(42, 7);
  for (int i = 0; i < 200; ++i) CHECK(a.next_u64() == b.next_u64());
  SeededRng c(42, 7);
  SeededRng d(42, 7);
  for (int i = 0; i < 200; ++i) {
    CHECK(c.uniform() == d.uniform());
    CHECK(c.normal() == d.normal());
  }
}

TEST_CASE("streams and seeds decorrelate") {
  SeededRng a(42, 0);
  SeededRng b(42, 1);
  SeededRng c(43, 0);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t va = a.next_u64();
    if (va == b.next_u64()) ++same_ab;
    if (va == c.next_u64()) ++same_ac;
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
}

TEST_CASE("split is deterministic and children are distinct") {
  const SeededRng parent(9, 3);
  SeededRng c1 = parent.split(5);
  SeededRng c2 = parent.split(5);
  SeededRng other = parent.split(6);
  bool all_same = true, any_same = false;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t v = c1.next_u64();
    if (v != c2.next_u64()) all_same = false;
    if (v == other.next_u64()) any_same = true;
  }
  CHECK(all_same);
  CHECK_FALSE(any_same);
}

TEST_CASE("uniform stays in [0, 1) with the right mean") {
  SeededRng rng(11, 0);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("normal passes a Monte-Carlo moment check") {
  SeededRng rng(12, 0);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("normal_vector matches element-wise draws") {
  SeededRng a(5, 1);
  SeededRng b(5, 1);
  const std::vector<double> v = normal_vector(a, 9);
  REQUIRE(v.size() == 9);
  for (double x : v) CHECK(x == b.normal());
}

}  // TEST_SUITE
