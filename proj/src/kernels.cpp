#include "rkmp/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rkmp::kernels {

namespace {

std::atomic<int> g_parallel{-1};  // -1 unset, 0 off, 1 on

int initial_parallel_state() {
#ifdef _OPENMP
  const char* env = std::getenv("RKMP_SERIAL");
  if (env != nullptr && env[0] != '\0') return 0;
  return 1;
#else
  return 0;
#endif
}

// Computes one column of c: c(:,j) = a · b(:,j), axpy over a's columns.
inline void gemm_column(const double* a, const double* bj, double* cj,
                        std::size_t m, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) cj[i] = 0.0;
  for (std::size_t l = 0; l < k; ++l) {
    const double blj = bj[l];
    if (blj == 0.0) continue;
    const double* al = a + l * m;
    for (std::size_t i = 0; i < m; ++i) cj[i] += al[i] * blj;
  }
}

// Orthogonalizes columns p and q of g (and applies the same rotation to v).
// Returns the relative off-diagonal weight of the pair before rotating.
inline double jacobi_rotate_pair(double* g, double* v, std::size_t m, std::size_t n,
                                 std::size_t p, std::size_t q, double tol, double norm_floor) {
  double* gp = g + p * m;
  double* gq = g + q * m;
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    alpha += gp[i] * gp[i];
    beta += gq[i] * gq[i];
    gamma += gp[i] * gq[i];
  }
  const double floor_sq = norm_floor * norm_floor;
  if (alpha <= floor_sq || beta <= floor_sq) return 0.0;
  const double denom = std::sqrt(alpha) * std::sqrt(beta);
  const double off = std::fabs(gamma) / denom;
  if (off <= tol) return off;

  const double zeta = (beta - alpha) / (2.0 * gamma);
  const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = c * t;

  for (std::size_t i = 0; i < m; ++i) {
    const double xp = gp[i];
    const double xq = gq[i];
    gp[i] = c * xp - s * xq;
    gq[i] = s * xp + c * xq;
  }
  double* vp = v + p * n;
  double* vq = v + q * n;
  for (std::size_t i = 0; i < n; ++i) {
    const double xp = vp[i];
    const double xq = vq[i];
    vp[i] = c * xp - s * xq;
    vq[i] = s * xp + c * xq;
  }
  return off;
}

}  // namespace

bool parallel_enabled() {
  int v = g_parallel.load(std::memory_order_relaxed);
  if (v < 0) {
    v = initial_parallel_state();
    g_parallel.store(v, std::memory_order_relaxed);
  }
  return v != 0;
}

void set_parallel_enabled(bool enabled) {
  g_parallel.store(enabled ? 1 : 0, std::memory_order_relaxed);
}

void gemm_serial(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) gemm_column(a, b + j * k, c + j * m, m, k);
}

void gemm_parallel(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n) {
#ifdef _OPENMP
  const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < nn; ++j) {
    gemm_column(a, b + static_cast<std::size_t>(j) * k, c + static_cast<std::size_t>(j) * m, m, k);
  }
#else
  gemm_serial(a, b, c, m, k, n);
#endif
}

void gemm(const double* a, const double* b, double* c,
          std::size_t m, std::size_t k, std::size_t n) {
  // Parallel dispatch only pays off past a few thousand column updates.
  if (parallel_enabled() && m * k * n >= 65536 && n >= 2) {
    gemm_parallel(a, b, c, m, k, n);
  } else {
    gemm_serial(a, b, c, m, k, n);
  }
}

double jacobi_round_serial(double* g, double* v, std::size_t m, std::size_t n,
                           const JacobiPair* pairs, std::size_t n_pairs, double tol,
                           double norm_floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const double off = jacobi_rotate_pair(g, v, m, n, pairs[i].p, pairs[i].q, tol, norm_floor);
    if (off > worst) worst = off;
  }
  return worst;
}

double jacobi_round_parallel(double* g, double* v, std::size_t m, std::size_t n,
                             const JacobiPair* pairs, std::size_t n_pairs, double tol,
                             double norm_floor) {
#ifdef _OPENMP
  double worst = 0.0;
  const std::ptrdiff_t np = static_cast<std::ptrdiff_t>(n_pairs);
  // Pairs inside a round touch disjoint columns, so rotations commute exactly
  // and the reduction is a plain max: bitwise equal to the serial round.
#pragma omp parallel for schedule(static) reduction(max : worst)
  for (std::ptrdiff_t i = 0; i < np; ++i) {
    const double off = jacobi_rotate_pair(g, v, m, n, pairs[i].p, pairs[i].q, tol, norm_floor);
    if (off > worst) worst = off;
  }
  return worst;
#else
  return jacobi_round_serial(g, v, m, n, pairs, n_pairs, tol, norm_floor);
#endif
}

double jacobi_round(double* g, double* v, std::size_t m, std::size_t n,
                    const JacobiPair* pairs, std::size_t n_pairs, double tol, double norm_floor) {
  if (parallel_enabled() && m * n_pairs >= 16384) {
    return jacobi_round_parallel(g, v, m, n, pairs, n_pairs, tol, norm_floor);
  }
  return jacobi_round_serial(g, v, m, n, pairs, n_pairs, tol, norm_floor);
}

}  // namespace rkmp::kernels
