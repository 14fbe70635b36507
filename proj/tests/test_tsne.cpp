#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "artstyle/rng.hpp"
#include "artstyle/tsne.hpp"

using namespace artstyle;
using tsne::Matrix;

namespace {

Matrix random_points(rng::Engine& g, std::size_t n, std::size_t d, double scale = 1.0) {
  Matrix x(n, std::vector<double>(d));
  for (auto& row : x) {
    for (double& v : row) v = scale * rng::uniform(g, -1.0, 1.0);
  }
  return x;
}

Matrix equilateral_triangle() {
  return {{0.0, 0.0}, {1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0}};
}

double total_mass(const Matrix& p) {
  double total = 0.0;
  for (const auto& row : p) {
    for (double v : row) total += v;
  }
  return total;
}

}  // namespace

TEST_CASE("equidistant points get uniform conditional rows") {
  const auto result = tsne::conditional_affinities(equilateral_triangle(), 2.0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(result.p[i][i] == 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
      if (i != j) CHECK(result.p[i][j] == doctest::Approx(0.5).epsilon(1e-12));
    }
  }
  CHECK_FALSE(result.jittered);
}

TEST_CASE("conditional rows sum to one") {
  rng::Engine g(81);
  const auto x = random_points(g, 12, 4);
  const auto result = tsne::conditional_affinities(x, 6.0);
  for (const auto& row : result.p) {
    double total = 0.0;
    for (double v : row) total += v;
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("calibrated rows hit the target perplexity (entropy oracle)") {
  rng::Engine g(82);
  const auto x = random_points(g, 10, 5);
  const double target = 5.0;
  const auto result = tsne::conditional_affinities(x, target);
  for (std::size_t i = 0; i < x.size(); ++i) {
    // independent recomputation: Shannon entropy of the returned row
    double h = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j != i && result.p[i][j] > 0.0) h -= result.p[i][j] * std::log(result.p[i][j]);
    }
    CHECK(std::abs(std::exp(h) - target) < 1e-4);
    CHECK(result.sigma[i] > 0.0);
  }
}

TEST_CASE("duplicate points are jittered and reported") {
  Matrix x = {{1.0, 2.0}, {1.0, 2.0}, {3.0, 4.0}, {5.0, 0.0}};
  const auto result = tsne::conditional_affinities(x, 2.0, 7);
  CHECK(result.jittered);
  CHECK_FALSE(result.note.empty());
  for (const auto& row : result.p) {
    for (double v : row) CHECK(std::isfinite(v));
  }
}

TEST_CASE("affinity preconditions") {
  rng::Engine g(83);
  CHECK_THROWS_AS(tsne::conditional_affinities(random_points(g, 2, 3), 1.5), ValidationError);
  CHECK_THROWS_AS(tsne::conditional_affinities(random_points(g, 5, 3), 5.0), ValidationError);
  CHECK_THROWS_AS(tsne::conditional_affinities(random_points(g, 5, 3), 0.5), ValidationError);
}

TEST_CASE("symmetrize: uniform 3-point case gives 1/6 everywhere off-diagonal") {
  const auto cond = tsne::conditional_affinities(equilateral_triangle(), 2.0);
  const auto p = tsne::symmetrize(cond.p);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(p[i][i] == 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
      if (i != j) CHECK(p[i][j] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    }
  }
  CHECK(std::abs(total_mass(p) - 1.0) < 1e-9);
}

TEST_CASE("symmetrize matches the elementwise oracle and keeps unit mass") {
  rng::Engine g(84);
  const auto x = random_points(g, 9, 3);
  const auto cond = tsne::conditional_affinities(x, 4.0);
  const auto p = tsne::symmetrize(cond.p);
  const auto n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(p[i][j] == p[j][i]);
      if (i != j) {
        const double expected = (cond.p[i][j] + cond.p[j][i]) / (2.0 * static_cast<double>(n));
        CHECK(std::abs(p[i][j] - expected) < 1e-12);
        CHECK(p[i][j] > 0.0);
      }
    }
  }
  CHECK(std::abs(total_mass(p) - 1.0) < 1e-9);
}

TEST_CASE("symmetrize floors vanishing affinities away from zero") {
  // two tight pairs very far apart: cross-pair conditionals underflow
  Matrix x = {{0.0, 0.0}, {0.01, 0.0}, {1e4, 0.0}, {1e4, 0.01}};
  const auto cond = tsne::conditional_affinities(x, 1.5);
  const auto p = tsne::symmetrize(cond.p);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (i != j) CHECK(p[i][j] > 0.0);
    }
  }
  CHECK(std::abs(total_mass(p) - 1.0) < 1e-9);
}

TEST_CASE("low-dimensional affinities") {
  SUBCASE("coincident points weigh 1 before normalization") {
    Matrix y = {{0.5, 0.5}, {0.5, 0.5}, {3.0, 0.0}};
    const auto low = tsne::low_dim_affinities(y);
    CHECK(low.weights[0][1] == 1.0);
    CHECK(low.weights[0][0] == 0.0);
    CHECK(std::abs(total_mass(low.q) - 1.0) < 1e-9);
  }
  SUBCASE("matches the double-loop oracle") {
    rng::Engine g(85);
    const auto y = random_points(g, 5, 2, 2.0);
    const auto low = tsne::low_dim_affinities(y);
    double oracle_total = 0.0;
    Matrix oracle_w(5, std::vector<double>(5, 0.0));
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        if (i == j) continue;
        double d2 = 0.0;
        for (int k = 0; k < 2; ++k) d2 += (y[i][k] - y[j][k]) * (y[i][k] - y[j][k]);
        oracle_w[i][j] = 1.0 / (1.0 + d2);
        oracle_total += oracle_w[i][j];
      }
    }
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        CHECK(std::abs(low.weights[i][j] - oracle_w[i][j]) < 1e-12);
        CHECK(std::abs(low.q[i][j] - oracle_w[i][j] / oracle_total) < 1e-12);
      }
    }
  }
}

TEST_CASE("kl gradient") {
  rng::Engine g(86);
  SUBCASE("vanishes when P equals Q") {
    const auto y = random_points(g, 6, 2, 1.5);
    const auto low = tsne::low_dim_affinities(y);
    const auto grad = tsne::kl_gradient(low.q, y);
    double norm = 0.0;
    for (const auto& row : grad) {
      for (double v : row) norm += v * v;
    }
    CHECK(std::sqrt(norm) < 1e-9);
  }

  SUBCASE("matches central finite differences on KL") {
    const auto x = random_points(g, 6, 4);
    const auto cond = tsne::conditional_affinities(x, 3.0);
    const auto p = tsne::symmetrize(cond.p);
    auto y = random_points(g, 6, 2, 0.5);

    const auto grad = tsne::kl_gradient(p, y);
    const double eps = 1e-6;
    double worst = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      for (std::size_t k = 0; k < 2; ++k) {
        const double saved = y[i][k];
        y[i][k] = saved + eps;
        const double up = tsne::kl_divergence(p, y);
        y[i][k] = saved - eps;
        const double down = tsne::kl_divergence(p, y);
        y[i][k] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        worst = std::max(worst, std::abs(numeric - grad[i][k]));
        scale = std::max({scale, std::abs(numeric), std::abs(grad[i][k])});
      }
    }
    CHECK(worst / scale < 1e-5);
  }

  SUBCASE("is translation invariant") {
    // dyadic coordinates plus a power-of-two shift keep the arithmetic exact
    rng::Engine g2(87);
    Matrix y(5, std::vector<double>(2));
    for (auto& row : y) {
      for (double& v : row) v = static_cast<double>(rng::below(g2, 2048)) / 1024.0 - 1.0;
    }
    const auto x = random_points(g2, 5, 3);
    const auto p = tsne::symmetrize(tsne::conditional_affinities(x, 3.0).p);
    const auto base = tsne::kl_gradient(p, y);
    auto shifted = y;
    for (auto& row : shifted) {
      for (double& v : row) v += 2.0;
    }
    const auto moved = tsne::kl_gradient(p, shifted);
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(base[i] == moved[i]);
    }
  }
}

TEST_CASE("run_tsne end to end") {
  rng::Engine g(88);
  tsne::TsneConfig config;
  config.perplexity = 5.0;
  config.iterations = 120;
  config.exaggeration_iters = 30;
  config.momentum_switch_iter = 30;
  config.learning_rate = 100.0;
  config.seed = 17;

  const auto x = random_points(g, 20, 6);

  SUBCASE("same seed, same embedding") {
    const auto a = tsne::run_tsne(x, config);
    const auto b = tsne::run_tsne(x, config);
    CHECK(a.y == b.y);
    CHECK(a.kl_history == b.kl_history);
    CHECK(a.kl_history.size() == 120);
  }

  SUBCASE("KL falls after the exaggeration phase") {
    const auto result = tsne::run_tsne(x, config);
    CHECK(result.kl_history.back() < result.kl_history[config.exaggeration_iters]);
  }

  SUBCASE("embedding is centered") {
    const auto result = tsne::run_tsne(x, config);
    for (int k = 0; k < 2; ++k) {
      double mean = 0.0;
      for (const auto& row : result.y) mean += row[k];
      CHECK(std::abs(mean / static_cast<double>(result.y.size())) < 1e-9);
    }
    for (const auto& row : result.y) {
      for (double v : row) CHECK(std::isfinite(v));
    }
  }

  SUBCASE("three equidistant points come out symmetric") {
    tsne::TsneConfig small = config;
    small.perplexity = 1.9;
    small.iterations = 400;
    small.exaggeration_iters = 50;
    small.momentum_switch_iter = 50;
    small.learning_rate = 1.0;
    const auto result = tsne::run_tsne(equilateral_triangle(), small);
    std::vector<double> dist;
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        double d2 = 0.0;
        for (int k = 0; k < 2; ++k) {
          d2 += (result.y[i][k] - result.y[j][k]) * (result.y[i][k] - result.y[j][k]);
        }
        dist.push_back(std::sqrt(d2));
      }
    }
    const double lo = *std::min_element(dist.begin(), dist.end());
    const double hi = *std::max_element(dist.begin(), dist.end());
    CHECK((hi - lo) / hi < 0.05);
  }

  SUBCASE("3d output has three columns") {
    tsne::TsneConfig c3 = config;
    c3.out_dims = 3;
    c3.iterations = 40;
    const auto result = tsne::run_tsne(x, c3);
    CHECK(result.y[0].size() == 3);
  }

  SUBCASE("config validation") {
    tsne::TsneConfig bad = config;
    bad.out_dims = 4;
    CHECK_THROWS_AS(tsne::run_tsne(x, bad), ValidationError);
    bad = config;
    bad.perplexity = 25.0;  // >= n
    CHECK_THROWS_AS(tsne::run_tsne(x, bad), ValidationError);
    bad = config;
    bad.iterations = 0;
    CHECK_THROWS_AS(tsne::run_tsne(x, bad), ValidationError);
    bad = config;
    bad.momentum_final = 1.0;
    CHECK_THROWS_AS(tsne::run_tsne(x, bad), ValidationError);
  }
}

TEST_CASE("pca pre-reduction preserves geometry") {
  rng::Engine g(89);

  SUBCASE("gram branch (n <= d)") {
    const auto x = random_points(g, 12, 30);
    const auto reduced = tsne::pca_reduce(x, 12);
    REQUIRE(reduced.size() == 12);
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = i + 1; j < x.size(); ++j) {
        double d_orig = 0.0, d_red = 0.0;
        for (std::size_t k = 0; k < 30; ++k) {
          d_orig += (x[i][k] - x[j][k]) * (x[i][k] - x[j][k]);
        }
        for (std::size_t k = 0; k < reduced[i].size(); ++k) {
          d_red += (reduced[i][k] - reduced[j][k]) * (reduced[i][k] - reduced[j][k]);
        }
        CHECK(std::sqrt(d_red) == doctest::Approx(std::sqrt(d_orig)).epsilon(1e-6));
      }
    }
  }

  SUBCASE("covariance branch (n > d)") {
    const auto x = random_points(g, 40, 6);
    const auto reduced = tsne::pca_reduce(x, 6);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = i + 1; j < 5; ++j) {
        double d_orig = 0.0, d_red = 0.0;
        for (std::size_t k = 0; k < 6; ++k) {
          d_orig += (x[i][k] - x[j][k]) * (x[i][k] - x[j][k]);
          d_red += (reduced[i][k] - reduced[j][k]) * (reduced[i][k] - reduced[j][k]);
        }
        CHECK(std::sqrt(d_red) == doctest::Approx(std::sqrt(d_orig)).epsilon(1e-6));
      }
    }
  }

  SUBCASE("variance concentrates in the leading component") {
    // points spread along one axis with small noise elsewhere
    Matrix x(30, std::vector<double>(8, 0.0));
    for (int i = 0; i < 30; ++i) {
      x[i][3] = static_cast<double>(i);
      for (int k = 0; k < 8; ++k) {
        if (k != 3) x[i][k] = 0.01 * rng::uniform(g, -1.0, 1.0);
      }
    }
    const auto reduced = tsne::pca_reduce(x, 1);
    double var = 0.0;
    for (const auto& row : reduced) var += row[0] * row[0];
    CHECK(var > 2000.0);  // axis variance of 0..29 around mean is ~2247
  }
}

TEST_CASE("kl history csv") {
  const auto csv = tsne::kl_history_to_csv({1.5, 0.75});
  CHECK(csv.rfind("iteration,kl\n", 0) == 0);
  CHECK(csv.find("0,1.5") != std::string::npos);
  CHECK(csv.find("1,0.75") != std::string::npos);
}
