#include "artstyle/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "artstyle/kernels.hpp"
#include "artstyle/rng.hpp"

namespace artstyle::tsne {

namespace {

constexpr double kPerplexityTolerance = 1e-5;
constexpr int kMaxBisections = 200;
constexpr double kAffinityFloor = 1e-12;

void check_rectangular(const Matrix& x, const char* what) {
  if (x.empty()) throw ValidationError(std::string(what) + ": empty matrix");
  const std::size_t d = x[0].size();
  for (const auto& row : x) {
    if (row.size() != d) throw ValidationError(std::string(what) + ": ragged matrix");
  }
}

Matrix squared_distances(const Matrix& x) {
  const std::size_t n = x.size();
  Matrix d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = kernels::squared_distance(x[i].data(), x[j].data(), x[i].size());
      d[i][j] = v;
      d[j][i] = v;
    }
  }
  return d;
}

// Row perplexity exp(H) for the Gaussian kernel with precision beta;
// fills `row` with the normalized affinities.
double row_perplexity(const std::vector<double>& d_row, std::size_t i, double beta,
                      std::vector<double>& row) {
  const std::size_t n = d_row.size();
  double d_min = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) d_min = std::min(d_min, d_row[j]);
  }
  double sum = 0.0;
  double weighted = 0.0;  // sum of (d - d_min) * p
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) {
      row[j] = 0.0;
      continue;
    }
    const double shifted = d_row[j] - d_min;
    const double p = std::exp(-beta * shifted);
    row[j] = p;
    sum += p;
    weighted += shifted * p;
  }
  for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
  const double entropy = std::log(sum) + beta * weighted / sum;  // nats
  return std::exp(entropy);
}

}  // namespace

void TsneConfig::validate(std::size_t n_points) const {
  if (out_dims != 2 && out_dims != 3) throw ValidationError("t-sne: out_dims must be 2 or 3");
  if (!(perplexity > 1.0)) throw ValidationError("t-sne: perplexity must be > 1");
  if (perplexity >= static_cast<double>(n_points)) {
    throw ValidationError("t-sne: perplexity must be below the number of points");
  }
  if (iterations < 1) throw ValidationError("t-sne: iterations must be positive");
  if (!(learning_rate > 0.0)) throw ValidationError("t-sne: learning rate must be > 0");
  if (!(exaggeration_factor >= 1.0)) throw ValidationError("t-sne: exaggeration factor must be >= 1");
  if (exaggeration_iters < 0) throw ValidationError("t-sne: negative exaggeration duration");
  if (!(momentum_initial >= 0.0 && momentum_initial < 1.0) ||
      !(momentum_final >= 0.0 && momentum_final < 1.0)) {
    throw ValidationError("t-sne: momentum values must lie in [0, 1)");
  }
  if (momentum_switch_iter < 0) throw ValidationError("t-sne: negative momentum switch iteration");
  if (pca_dims < 0) throw ValidationError("t-sne: negative pca dimension");
}

ConditionalAffinities conditional_affinities(const Matrix& x, double perplexity,
                                             std::uint64_t jitter_seed) {
  check_rectangular(x, "conditional_affinities");
  const std::size_t n = x.size();
  if (n < 3) throw ValidationError("conditional_affinities: need at least 3 points");
  if (!(perplexity > 1.0) || perplexity >= static_cast<double>(n)) {
    throw ValidationError("conditional_affinities: perplexity must lie in (1, n)");
  }

  ConditionalAffinities result;
  Matrix points = x;
  Matrix d = squared_distances(points);

  bool has_duplicates = false;
  for (std::size_t i = 0; i < n && !has_duplicates; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d[i][j] == 0.0) {
        has_duplicates = true;
        break;
      }
    }
  }
  if (has_duplicates) {
    double lo = points[0][0], hi = points[0][0];
    for (const auto& row : points) {
      for (double v : row) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    const double magnitude = (hi > lo) ? 1e-10 * (hi - lo) : 1e-10;
    rng::Engine engine(jitter_seed ^ 0x715e5eedULL);
    for (auto& row : points) {
      for (double& v : row) v += magnitude * rng::normal(engine);
    }
    d = squared_distances(points);
    result.jittered = true;
    result.note = "duplicate points jittered by gaussian noise of magnitude " +
                  std::to_string(magnitude);
  }

  result.p.assign(n, std::vector<double>(n, 0.0));
  result.sigma.assign(n, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    double beta = 1.0;
    double beta_lo = 0.0;
    double beta_hi = std::numeric_limits<double>::infinity();
    std::vector<double>& row = result.p[i];
    double perp = row_perplexity(d[i], i, beta, row);
    for (int step = 0; step < kMaxBisections && std::abs(perp - perplexity) > kPerplexityTolerance;
         ++step) {
      if (perp > perplexity) {
        beta_lo = beta;  // too flat: raise precision
        beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta_lo + beta_hi);
      } else {
        beta_hi = beta;
        beta = (beta_lo == 0.0) ? beta * 0.5 : 0.5 * (beta_lo + beta_hi);
      }
      perp = row_perplexity(d[i], i, beta, row);
    }
    result.sigma[i] = std::sqrt(0.5 / beta);
  }
  return result;
}

Matrix symmetrize(const Matrix& conditional) {
  check_rectangular(conditional, "symmetrize");
  const std::size_t n = conditional.size();
  if (conditional[0].size() != n) throw ValidationError("symmetrize: matrix must be square");

  Matrix p(n, std::vector<double>(n, 0.0));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v =
          std::max((conditional[i][j] + conditional[j][i]) / (2.0 * static_cast<double>(n)),
                   kAffinityFloor);
      p[i][j] = v;
      total += v;
    }
  }
  // flooring adds a sliver of mass; renormalize so the total stays exactly 1
  for (auto& row : p) {
    kernels::scale(row.data(), 1.0 / total, row.size());
  }
  return p;
}

LowDimAffinities low_dim_affinities(const Matrix& y) {
  check_rectangular(y, "low_dim_affinities");
  const std::size_t n = y.size();
  LowDimAffinities result;
  result.weights.assign(n, std::vector<double>(n, 0.0));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w =
          1.0 / (1.0 + kernels::squared_distance(y[i].data(), y[j].data(), y[i].size()));
      result.weights[i][j] = w;
      result.weights[j][i] = w;
      total += 2.0 * w;
    }
  }
  result.weight_total = total;
  result.q = result.weights;
  for (auto& row : result.q) {
    kernels::scale(row.data(), 1.0 / total, row.size());
  }
  return result;
}

Matrix kl_gradient(const Matrix& p, const Matrix& y) {
  const std::size_t n = y.size();
  if (p.size() != n) throw ValidationError("kl_gradient: P and Y row counts differ");
  const std::size_t m = y[0].size();
  const LowDimAffinities low = low_dim_affinities(y);

  Matrix grad(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double coeff = 4.0 * (p[i][j] - low.q[i][j]) * low.weights[i][j];
      for (std::size_t k = 0; k < m; ++k) {
        grad[i][k] += coeff * (y[i][k] - y[j][k]);
      }
    }
  }
  return grad;
}

double kl_divergence(const Matrix& p, const Matrix& y) {
  const std::size_t n = y.size();
  if (p.size() != n) throw ValidationError("kl_divergence: P and Y row counts differ");
  const LowDimAffinities low = low_dim_affinities(y);
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || p[i][j] <= 0.0) continue;
      kl += p[i][j] * std::log(p[i][j] / std::max(low.q[i][j], kAffinityFloor));
    }
  }
  return kl;
}

TsneEmbedding run_tsne(const Matrix& x, const TsneConfig& config) {
  check_rectangular(x, "run_tsne");
  const std::size_t n = x.size();
  if (n < 3) throw ValidationError("run_tsne: need at least 3 points");
  config.validate(n);

  const Matrix* input = &x;
  Matrix reduced;
  if (config.pca_dims > 0 && static_cast<std::size_t>(config.pca_dims) < x[0].size()) {
    reduced = pca_reduce(x, config.pca_dims);
    input = &reduced;
  }

  TsneEmbedding out;
  ConditionalAffinities cond = conditional_affinities(*input, config.perplexity, config.seed);
  if (cond.jittered) out.warnings.push_back(cond.note);
  const Matrix p = symmetrize(cond.p);

  const std::size_t m = static_cast<std::size_t>(config.out_dims);
  rng::Engine engine(config.seed);
  out.y.assign(n, std::vector<double>(m, 0.0));
  for (auto& row : out.y) {
    for (double& v : row) v = 0.01 * rng::normal(engine);  // Gaussian(0, 1e-4 I)
  }

  Matrix update(n, std::vector<double>(m, 0.0));
  Matrix p_eff = p;
  if (config.exaggeration_iters > 0) {
    for (auto& row : p_eff) kernels::scale(row.data(), config.exaggeration_factor, row.size());
  }
  out.kl_history.reserve(config.iterations);

  for (int it = 0; it < config.iterations; ++it) {
    if (it == config.exaggeration_iters && config.exaggeration_iters > 0) {
      p_eff = p;  // exaggeration phase over
    }
    const Matrix grad = kl_gradient(p_eff, out.y);
    const double momentum =
        (it < config.momentum_switch_iter) ? config.momentum_initial : config.momentum_final;

    for (std::size_t i = 0; i < n; ++i) {
      kernels::scale(update[i].data(), momentum, m);
      kernels::axpy(-config.learning_rate, grad[i].data(), update[i].data(), m);
      kernels::axpy(1.0, update[i].data(), out.y[i].data(), m);
    }

    // re-center to zero mean
    std::vector<double> mean(m, 0.0);
    for (const auto& row : out.y) {
      kernels::axpy(1.0, row.data(), mean.data(), m);
    }
    kernels::scale(mean.data(), 1.0 / static_cast<double>(n), m);
    for (auto& row : out.y) {
      kernels::axpy(-1.0, mean.data(), row.data(), m);
    }

    const double kl = kl_divergence(p, out.y);
    if (!std::isfinite(kl)) {
      throw NumericError("run_tsne: non-finite KL divergence at iteration " + std::to_string(it));
    }
    out.kl_history.push_back(kl);
  }
  return out;
}

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues; `vectors` columns hold the corresponding eigenvectors.
void jacobi_eigen(Matrix a, std::vector<double>& values, Matrix& vectors) {
  const std::size_t n = a.size();
  vectors.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) vectors[i][i] = 1.0;

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    }
    if (off < 1e-22) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vectors[k][p], vkq = vectors[k][q];
          vectors[k][p] = c * vkp - s * vkq;
          vectors[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  values.resize(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a[i][i];
}

}  // namespace

Matrix pca_reduce(const Matrix& x, int dims) {
  check_rectangular(x, "pca_reduce");
  const std::size_t n = x.size();
  const std::size_t d = x[0].size();
  if (dims < 1) throw ValidationError("pca_reduce: dims must be positive");
  const std::size_t k = std::min<std::size_t>(dims, std::min(n, d));

  Matrix centered = x;
  std::vector<double> mean(d, 0.0);
  for (const auto& row : centered) {
    kernels::axpy(1.0, row.data(), mean.data(), d);
  }
  kernels::scale(mean.data(), 1.0 / static_cast<double>(n), d);
  for (auto& row : centered) {
    kernels::axpy(-1.0, mean.data(), row.data(), d);
  }

  std::vector<double> values;
  Matrix vectors;
  Matrix projected(n, std::vector<double>(k, 0.0));

  if (n <= d) {
    // Gram trick: eigenvectors of X X^T give the projections directly
    Matrix gram(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        gram[i][j] = gram[j][i] = kernels::dot(centered[i].data(), centered[j].data(), d);
      }
    }
    jacobi_eigen(std::move(gram), values, vectors);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&values](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t idx = order[c];
      const double lambda = std::max(values[idx], 0.0);
      const double scale = std::sqrt(lambda);
      for (std::size_t i = 0; i < n; ++i) projected[i][c] = scale * vectors[i][idx];
    }
  } else {
    Matrix cov(d, std::vector<double>(d, 0.0));
    for (const auto& row : centered) {
      for (std::size_t a = 0; a < d; ++a) {
        kernels::axpy(row[a], row.data(), cov[a].data(), d);
      }
    }
    jacobi_eigen(std::move(cov), values, vectors);
    std::vector<std::size_t> order(d);
    for (std::size_t i = 0; i < d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&values](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        double acc = 0.0;
        for (std::size_t a = 0; a < d; ++a) acc += centered[i][a] * vectors[a][order[c]];
        projected[i][c] = acc;
      }
    }
  }
  return projected;
}

std::string kl_history_to_csv(const std::vector<double>& history) {
  std::string out = "iteration,kl\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, history[i]);
    out += buf;
  }
  return out;
}

}  // namespace artstyle::tsne
