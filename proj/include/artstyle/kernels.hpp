#pragma once

#include <cstddef>
#include <string_view>

namespace artstyle::kernels {

// Dispatch table for the numeric inner loops shared by the classifier,
// the distance computations and the T-SNE optimizer. Every kernel takes
// and produces double precision; reductions accumulate in double.
struct Backend {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);  // y += alpha*x
  void (*scale)(double* x, double alpha, std::size_t n);                  // x *= alpha
};

// Always available reference implementation.
const Backend& scalar_backend();

// SIMD variants; nullptr when the build target or the running CPU lacks
// the instruction set.
const Backend* avx2_backend();
const Backend* neon_backend();

// The backend selected for this process. Defaults to the widest variant
// the CPU supports; resolved once and then cached.
const Backend& active();

// Force a specific backend ("scalar", "avx2", "neon" or "auto").
// Returns false when the requested backend is unavailable. Intended for
// the equivalence tests and for benchmarking.
bool force(std::string_view name);

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline double squared_distance(const double* a, const double* b, std::size_t n) {
  return active().squared_distance(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void scale(double* x, double alpha, std::size_t n) { active().scale(x, alpha, n); }

}  // namespace artstyle::kernels
