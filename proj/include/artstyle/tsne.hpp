#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "artstyle/errors.hpp"

namespace artstyle::tsne {

using Matrix = std::vector<std::vector<double>>;

// Exact O(n^2) T-SNE: Gaussian affinities calibrated per point by binary
// search on the bandwidth, Student-t low-dimensional similarities, and
// KL-divergence gradient descent with momentum and early exaggeration.
struct TsneConfig {
  int out_dims = 2;  // 2 or 3
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double exaggeration_factor = 12.0;
  int exaggeration_iters = 250;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  int momentum_switch_iter = 250;
  std::uint64_t seed = 0;
  int pca_dims = 0;  // optional PCA pre-reduction; 0 disables it

  void validate(std::size_t n_points) const;
};

struct ConditionalAffinities {
  Matrix p;                   // p_{j|i}; zero diagonal, rows sum to 1
  std::vector<double> sigma;  // calibrated bandwidth per point
  bool jittered = false;      // duplicate inputs were perturbed
  std::string note;
};

// Calibrates each row's bandwidth so the row's entropy-derived perplexity
// matches the target within 1e-5 (at most 200 bisection steps). Exact
// duplicate points make a row degenerate; inputs are then jittered by
// Gaussian noise of magnitude 1e-10 * data range and the result is flagged.
ConditionalAffinities conditional_affinities(const Matrix& x, double perplexity,
                                             std::uint64_t jitter_seed = 0);

// P_ij = (p_{j|i} + p_{i|j}) / 2n, off-diagonal entries floored at 1e-12,
// then renormalized to unit total mass.
Matrix symmetrize(const Matrix& conditional);

struct LowDimAffinities {
  Matrix q;        // normalized
  Matrix weights;  // w_ij = 1 / (1 + |yi - yj|^2), zero diagonal
  double weight_total = 0.0;
};

LowDimAffinities low_dim_affinities(const Matrix& y);

// dKL/dy_i = 4 sum_j (P_ij - Q_ij) w_ij (y_i - y_j)
Matrix kl_gradient(const Matrix& p, const Matrix& y);

double kl_divergence(const Matrix& p, const Matrix& y);

struct TsneEmbedding {
  Matrix y;                        // n x out_dims
  std::vector<double> kl_history;  // one entry per iteration, measured
                                   // against the unexaggerated P
  std::vector<std::string> warnings;
};

TsneEmbedding run_tsne(const Matrix& x, const TsneConfig& config);

// Projection onto the top principal components of the centered data.
Matrix pca_reduce(const Matrix& x, int dims);

std::string kl_history_to_csv(const std::vector<double>& history);

}  // namespace artstyle::tsne
