#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "addps/errors.hpp"
#include "addps/numerics.hpp"
#include "addps/rng.hpp"

namespace addps::testing {

// Central finite differences of a scalar function, step 1e-5.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double h = 1e-5) {
  Vec g(x.size());
  Vec p = x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    p[j] = x[j] + h;
    const double up = f(p);
    p[j] = x[j] - h;
    const double down = f(p);
    p[j] = x[j];
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

// Worst per-coordinate relative error with an absolute floor, so near-zero
// components do not blow up the ratio.
inline double max_rel_err(const Vec& got, const Vec& want, double floor_abs = 1e-8) {
  double worst = 0.0;
  for (std::size_t j = 0; j < got.size(); ++j) {
    const double denom = std::max(std::abs(want[j]), floor_abs);
    worst = std::max(worst, std::abs(got[j] - want[j]) / denom);
  }
  return worst;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, SeededRng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// B^T B + I: comfortably SPD.
inline Matrix random_spd(std::size_t n, SeededRng& rng) {
  const Matrix b = random_matrix(n, n, rng);
  Matrix m = matmul(b.transposed(), b);
  for (std::size_t i = 0; i < n; ++i) m(i, i) += 1.0;
  return m;
}

inline Vec random_vec(std::size_t n, SeededRng& rng) { return normal_vector(rng, n); }

// Runs f and reports the raised error code; fails the expectation if nothing
// was thrown (sentinel value never equals a real code comparison target).
template <typename F>
Errc thrown_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<Errc>(-1);
}

inline Vec sample_mean(const std::vector<Vec>& xs) {
  Vec m(xs.front().size(), 0.0);
  for (const Vec& x : xs)
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += x[j];
  for (double& v : m) v /= static_cast<double>(xs.size());
  return m;
}

inline Matrix sample_cov(const std::vector<Vec>& xs) {
  const Vec m = sample_mean(xs);
  const std::size_t d = m.size();
  Matrix c(d, d);
  for (const Vec& x : xs)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) c(i, j) += (x[i] - m[i]) * (x[j] - m[j]);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) c(i, j) /= static_cast<double>(xs.size() - 1);
  return c;
}

// Unique temp path cleaned up by the destructor.
class TempFile {
 public:
  explicit TempFile(const std::string& tag) {
    static int counter = 0;
    path_ = (std::filesystem::temp_directory_path() /
             ("addps_test_" + tag + "_" + std::to_string(counter++) + "_" +
              std::to_string(static_cast<unsigned>(::getpid()))))
                .string();
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace addps::testing
