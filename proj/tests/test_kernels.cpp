#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "artstyle/kernels.hpp"
#include "artstyle/rng.hpp"

using namespace artstyle;

namespace {

std::vector<double> random_vec(rng::Engine& g, std::size_t n, double lo = -2.0, double hi = 2.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng::uniform(g, lo, hi);
  return v;
}

struct ForceScope {
  explicit ForceScope(const char* name) { ok = kernels::force(name); }
  ~ForceScope() { kernels::force("auto"); }
  bool ok = false;
};

}  // namespace

TEST_CASE("scalar kernels match straightforward loops") {
  rng::Engine g(11);
  ForceScope scalar("scalar");
  REQUIRE(scalar.ok);
  for (std::size_t n : {std::size_t{1}, std::size_t{7}, std::size_t{512}}) {
    const auto a = random_vec(g, n);
    const auto b = random_vec(g, n);
    double dot = 0.0, sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dot += a[i] * b[i];
      sum += a[i];
      const double d = a[i] - b[i];
      sq += d * d;
    }
    CHECK(kernels::dot(a.data(), b.data(), n) == doctest::Approx(dot).epsilon(1e-15));
    CHECK(kernels::sum(a.data(), n) == doctest::Approx(sum).epsilon(1e-15));
    CHECK(kernels::squared_distance(a.data(), b.data(), n) == doctest::Approx(sq).epsilon(1e-15));
  }
}

TEST_CASE("simd backends agree with the scalar reference") {
  for (const char* name : {"avx2", "neon"}) {
    const kernels::Backend* simd =
        std::string_view(name) == "avx2" ? kernels::avx2_backend() : kernels::neon_backend();
    if (!simd) continue;

    rng::Engine g(22);
    const auto& scalar = kernels::scalar_backend();
    // odd lengths exercise the vector tail handling
    for (std::size_t n : {std::size_t{1}, std::size_t{3}, std::size_t{4}, std::size_t{5},
                          std::size_t{8}, std::size_t{13}, std::size_t{511}, std::size_t{512},
                          std::size_t{1023}}) {
      const auto a = random_vec(g, n);
      const auto b = random_vec(g, n);

      const double tol = 1e-13 * static_cast<double>(n);
      CHECK(std::abs(simd->dot(a.data(), b.data(), n) - scalar.dot(a.data(), b.data(), n)) <=
            tol * (std::abs(scalar.dot(a.data(), b.data(), n)) + 1.0));
      CHECK(std::abs(simd->sum(a.data(), n) - scalar.sum(a.data(), n)) <=
            tol * (std::abs(scalar.sum(a.data(), n)) + 1.0));
      CHECK(std::abs(simd->squared_distance(a.data(), b.data(), n) -
                     scalar.squared_distance(a.data(), b.data(), n)) <=
            tol * (scalar.squared_distance(a.data(), b.data(), n) + 1.0));

      // axpy/scale avoid fused ops, so they agree bit for bit
      auto y1 = random_vec(g, n);
      auto y2 = y1;
      simd->axpy(1.7, a.data(), y1.data(), n);
      scalar.axpy(1.7, a.data(), y2.data(), n);
      CHECK(y1 == y2);

      auto s1 = a;
      auto s2 = a;
      simd->scale(s1.data(), -0.3, n);
      scalar.scale(s2.data(), -0.3, n);
      CHECK(s1 == s2);
    }
  }
}

TEST_CASE("backend forcing") {
  CHECK(kernels::force("scalar"));
  CHECK(std::string_view(kernels::active().name) == "scalar");
  CHECK_FALSE(kernels::force("no-such-backend"));
  CHECK(kernels::force("auto"));
#if defined(__x86_64__)
  if (kernels::avx2_backend()) {
    CHECK(std::string_view(kernels::active().name) == "avx2");
  }
#endif
}
