#pragma once

#include <cstddef>
#include <vector>

#include "rkmp/dense.hpp"

namespace rkmp {

// Singular value decomposition M = U diag(sigma) Vᵀ with k = min(m, n)
// triplets. U (m×k) and V (n×k) have orthonormal columns; sigma is
// nonincreasing. effective_rank counts singular values above rank_tolerance.
struct SvdFactors {
  DenseMatrix U;
  std::vector<double> sigma;
  DenseMatrix V;
  std::size_t effective_rank = 0;
  double rank_tolerance = 0.0;

  std::size_t row_count() const { return U.rows(); }
  std::size_t col_count() const { return V.rows(); }
  std::size_t triplet_count() const { return sigma.size(); }
  DenseMatrix reconstruct() const;
};

// One-sided Jacobi. rank_tolerance 0 selects the default
// max(m,n) · sigma_max · machine epsilon. Throws ConvergenceError if the
// sweep budget is exhausted.
SvdFactors svd(const DenseMatrix& m, double rank_tolerance = 0.0);

// Keeps min(r, effective_rank) leading triplets; r past the spectrum clamps.
SvdFactors truncate(const SvdFactors& f, std::size_t r);

DenseMatrix pseudoinverse(const SvdFactors& f);
DenseMatrix pseudoinverse(const DenseMatrix& m);

// Orthogonal projectors onto the column space (left) and row space (right).
DenseMatrix left_projector(const DenseMatrix& m);
DenseMatrix right_projector(const DenseMatrix& m);

// Minimal-norm rank-r minimizer of ‖A − B W C‖_F, i.e.
// W = B† (P_B^L A P_C^R)_r C†.
DenseMatrix generalized_rank_approx(const DenseMatrix& a, const DenseMatrix& b,
                                    const DenseMatrix& c, std::size_t r);

// Eigendecomposition of a symmetric matrix via cyclic two-sided Jacobi.
// Eigenvalues are sorted descending by value; q columns are the eigenvectors.
struct SymmetricEigen {
  DenseMatrix q;
  std::vector<double> lambda;
};
SymmetricEigen symmetric_eigen(const DenseMatrix& s);

enum class FactorStrategy { cholesky_with_ridge, psd_eigendecomposition };

// Factor L with L Lᵀ equal to the (ridged) input.
//   cholesky_with_ridge: square lower-triangular factor of S + ridge·I.
//   psd_eigendecomposition: thin n×p factor Q_p Λ_p^{1/2}, eigenvalues at or
//   below rank_tolerance dropped, so L has full column rank.
struct SymmetricFactor {
  DenseMatrix L;
  FactorStrategy source_kind = FactorStrategy::psd_eigendecomposition;
  double ridge = 0.0;
};
SymmetricFactor symmetric_factor(const DenseMatrix& s, FactorStrategy strategy,
                                 double ridge, double rank_tolerance = 0.0);

// Solve L Z = B (L lower-triangular) and Lᵀ Z = B.
DenseMatrix solve_lower(const DenseMatrix& l, const DenseMatrix& b);
DenseMatrix solve_lower_transposed(const DenseMatrix& l, const DenseMatrix& b);

}  // namespace rkmp
