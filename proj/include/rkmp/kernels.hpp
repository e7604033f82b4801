#pragma once

#include <cstddef>

namespace rkmp::kernels {

// Low-level data-parallel kernels. Every kernel has a serial reference and an
// OpenMP variant; the parallel variants split work so that each output element
// is produced by exactly one thread with the same inner loop order as the
// reference, so results are bitwise identical for any thread count.

// Returns true when OpenMP variants are dispatched by the library. Defaults
// to true when compiled with OpenMP; the RKMP_SERIAL environment variable
// (any nonempty value) or set_parallel_enabled(false) forces serial kernels.
bool parallel_enabled();
void set_parallel_enabled(bool enabled);

// c (m×n, column-major) = a (m×k) · b (k×n). No aliasing.
void gemm_serial(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n);
void gemm_parallel(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n);
void gemm(const double* a, const double* b, double* c,
          std::size_t m, std::size_t k, std::size_t n);

// One round of disjoint plane rotations for the one-sided Jacobi kernel.
// g is m×n column-major, v is n×n column-major; pairs is a list of column
// index pairs with no column repeated inside a round. Returns the largest
// relative off-diagonal |g_i·g_j|/(|g_i||g_j|) seen before rotating. Columns
// with norm at or below norm_floor count as converged; without the floor,
// numerically-zero columns of a rank-deficient input can stay parallel
// forever (the relative test is scale-invariant).
struct JacobiPair {
  std::size_t p;
  std::size_t q;
};
double jacobi_round_serial(double* g, double* v, std::size_t m, std::size_t n,
                           const JacobiPair* pairs, std::size_t n_pairs, double tol,
                           double norm_floor);
double jacobi_round_parallel(double* g, double* v, std::size_t m, std::size_t n,
                             const JacobiPair* pairs, std::size_t n_pairs, double tol,
                             double norm_floor);
double jacobi_round(double* g, double* v, std::size_t m, std::size_t n,
                    const JacobiPair* pairs, std::size_t n_pairs, double tol, double norm_floor);

}  // namespace rkmp::kernels
