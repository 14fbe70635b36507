#include "artstyle/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace artstyle::kernels {

namespace {

double scalar_dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double scalar_sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double scalar_squared_distance(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void scalar_axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scalar_scale(double* x, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

const Backend kScalar = {
    "scalar", scalar_dot, scalar_sum, scalar_squared_distance, scalar_axpy, scalar_scale,
};

const Backend* pick_default() {
  if (const char* env = std::getenv("ARTSTYLE_KERNELS")) {
    const std::string_view want(env);
    if (want == "scalar") return &kScalar;
    if (want == "avx2" && avx2_backend()) return avx2_backend();
    if (want == "neon" && neon_backend()) return neon_backend();
  }
  if (const Backend* b = avx2_backend()) return b;
  if (const Backend* b = neon_backend()) return b;
  return &kScalar;
}

std::atomic<const Backend*> g_active{nullptr};

}  // namespace

const Backend& scalar_backend() { return kScalar; }

const Backend& active() {
  const Backend* b = g_active.load(std::memory_order_acquire);
  if (!b) {
    b = pick_default();
    g_active.store(b, std::memory_order_release);
  }
  return *b;
}

bool force(std::string_view name) {
  const Backend* b = nullptr;
  if (name == "scalar") {
    b = &kScalar;
  } else if (name == "avx2") {
    b = avx2_backend();
  } else if (name == "neon") {
    b = neon_backend();
  } else if (name == "auto") {
    b = pick_default();
  }
  if (!b) return false;
  g_active.store(b, std::memory_order_release);
  return true;
}

}  // namespace artstyle::kernels
