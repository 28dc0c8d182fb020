#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "apo/kernels.hpp"

namespace k = apo::kernels;

namespace {

std::vector<k::Backend> vector_backends() {
  std::vector<k::Backend> out;
  for (auto b : {k::Backend::kAvx2, k::Backend::kNeon}) {
    if (k::available(b)) out.push_back(b);
  }
  return out;
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

// Lengths covering empty input, sub-vector tails and multiple unrolled blocks.
const std::size_t kLengths[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 33, 64, 100, 1001};

}  // namespace

TEST(Kernels, ScalarAlwaysAvailable) {
  EXPECT_TRUE(k::available(k::Backend::kScalar));
  EXPECT_EQ(k::table(k::Backend::kScalar).backend, k::Backend::kScalar);
  EXPECT_EQ(k::backend_name(k::Backend::kScalar), "scalar");
}

TEST(Kernels, ScalarMatchesNaiveLoops) {
  std::mt19937_64 rng(1);
  const auto& s = k::table(k::Backend::kScalar);
  for (std::size_t n : kLengths) {
    const auto x = random_vec(rng, n);
    const auto y = random_vec(rng, n);
    const auto w = random_vec(rng, n);
    long double dot = 0, wdot = 0, dist = 0;
    for (std::size_t i = 0; i < n; ++i) {
      dot += static_cast<long double>(x[i]) * y[i];
      wdot += static_cast<long double>(w[i]) * x[i] * y[i];
      dist += static_cast<long double>(x[i] - y[i]) * (x[i] - y[i]);
    }
    const double tol = 1e-12 * static_cast<double>(n + 1);
    EXPECT_NEAR(s.dot(x.data(), y.data(), n), static_cast<double>(dot), tol);
    EXPECT_NEAR(s.weighted_dot(w.data(), x.data(), y.data(), n), static_cast<double>(wdot), tol);
    EXPECT_NEAR(s.squared_distance(x.data(), y.data(), n), static_cast<double>(dist), tol);
    auto yy = y;
    s.axpy(0.75, x.data(), yy.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_DOUBLE_EQ(yy[i], y[i] + 0.75 * x[i]);
  }
}

TEST(Kernels, VectorBackendsMatchScalar) {
  const auto backends = vector_backends();
  if (backends.empty()) GTEST_SKIP() << "no vector backend on this CPU";
  std::mt19937_64 rng(2);
  const auto& s = k::table(k::Backend::kScalar);
  for (auto b : backends) {
    const auto& v = k::table(b);
    for (std::size_t n : kLengths) {
      const auto x = random_vec(rng, n);
      const auto y = random_vec(rng, n);
      const auto w = random_vec(rng, n);
      double scale = 1.0;
      for (std::size_t i = 0; i < n; ++i) scale += std::abs(x[i] * y[i]) + std::abs(w[i] * x[i] * y[i]);
      const double tol = 1e-14 * scale;
      EXPECT_NEAR(v.dot(x.data(), y.data(), n), s.dot(x.data(), y.data(), n), tol) << n;
      EXPECT_NEAR(v.weighted_dot(w.data(), x.data(), y.data(), n),
                  s.weighted_dot(w.data(), x.data(), y.data(), n), tol)
          << n;
      EXPECT_NEAR(v.squared_distance(x.data(), y.data(), n),
                  s.squared_distance(x.data(), y.data(), n), 1e-14 * (1.0 + 4.0 * scale))
          << n;
      auto y1 = y;
      auto y2 = y;
      s.axpy(-1.25, x.data(), y1.data(), n);
      v.axpy(-1.25, x.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-15 * (1.0 + std::abs(y1[i])));
    }
  }
}

TEST(Kernels, VectorBackendsHandleUnalignedPointers) {
  const auto backends = vector_backends();
  if (backends.empty()) GTEST_SKIP() << "no vector backend on this CPU";
  std::mt19937_64 rng(3);
  const auto buf_x = random_vec(rng, 80);
  const auto buf_y = random_vec(rng, 80);
  const auto& s = k::table(k::Backend::kScalar);
  for (auto b : backends) {
    for (std::size_t off = 0; off < 4; ++off) {
      const double* x = buf_x.data() + off;
      const double* y = buf_y.data() + off;
      EXPECT_NEAR(k::table(b).dot(x, y, 37), s.dot(x, y, 37), 1e-12);
    }
  }
}

TEST(Kernels, SelectSwitchesActiveTable) {
  const k::Backend before = k::active().backend;
  k::select(k::Backend::kScalar);
  EXPECT_EQ(k::active().backend, k::Backend::kScalar);
  const std::vector<double> x{1, 2, 3};
  const std::vector<double> y{4, 5, 6};
  EXPECT_DOUBLE_EQ(k::dot(x, y), 32.0);
  EXPECT_DOUBLE_EQ(k::squared_distance(x, y), 27.0);
  k::select(before);
}

TEST(Kernels, UnavailableBackendThrows) {
  for (auto b : {k::Backend::kAvx2, k::Backend::kNeon}) {
    if (!k::available(b)) {
      EXPECT_THROW(k::table(b), std::invalid_argument);
    }
  }
}
