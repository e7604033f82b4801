#pragma once

#include <cstddef>
#include <vector>

#include "rkmp/dense.hpp"

namespace rkmp {

// Latent factor scores (T×r) with per-asset loadings (A×r).
struct LatentFactors {
  DenseMatrix scores;
  DenseMatrix loadings;
  bool rotation_applied = false;
};

// Raw varimax criterion: per-factor variance of squared loadings.
double varimax_criterion(const DenseMatrix& loadings);

struct VarimaxResult {
  LatentFactors factors;
  DenseMatrix rotation;  // r×r orthogonal
  std::size_t sweeps = 0;
  bool degenerate = false;  // equal-variance pair with no rotation signal
};

// Pairwise varimax rotation (no Kaiser row normalization unless requested).
// The criterion is nondecreasing across sweeps; stops when the gain drops
// below tol or after max_iters sweeps.
VarimaxResult varimax_rotate(const LatentFactors& f, double tol = 1e-10,
                             std::size_t max_iters = 100, bool kaiser_normalize = false);

struct ProcrustesResult {
  DenseMatrix rotation;  // r×r orthogonal
  DenseMatrix aligned;   // Z · R
  bool unique = true;    // false when Zᵀ·target is rank-deficient
};

// R = argmin over orthogonal matrices of ‖Z R − target‖_F via the SVD of
// Zᵀ·target; deterministic even in the rank-deficient case.
ProcrustesResult procrustes_align(const DenseMatrix& z, const DenseMatrix& target);

struct CevReport {
  Vector per_factor;
  double total = 0.0;
};

// Fraction of total data variance captured along each (normalized) loading
// direction. data is T×A with rows as observations.
CevReport cumulative_explained_variance(const LatentFactors& f, const DenseMatrix& data);

// min/max of the per-factor explained variances; 1 is perfectly balanced.
double factor_balance(const Vector& per_factor_cev);

// Per-column absolute Pearson correlation between aligned and true factors.
Vector aligned_factor_correlations(const DenseMatrix& aligned, const DenseMatrix& truth);

}  // namespace rkmp
