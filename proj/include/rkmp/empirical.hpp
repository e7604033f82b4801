#pragma once

#include <cstddef>
#include <optional>

#include "rkmp/dense.hpp"
#include "rkmp/mappings.hpp"

namespace rkmp {

// Columns are samples: X is n×J signals, Y (when present) is m×J observations.
struct DataSet {
  DenseMatrix X;
  std::optional<DenseMatrix> Y;

  std::size_t sample_count() const { return X.cols(); }
};

// Passing no ridge applies the default 1e-8 × (mean diagonal entry);
// pass 0.0 explicitly for the raw estimator.
MomentModel empirical_second_moment(const DataSet& d, std::optional<double> ridge = std::nullopt,
                                    FactorStrategy strategy = FactorStrategy::psd_eigendecomposition);
MomentModel empirical_covariance(const DataSet& d, std::optional<double> ridge = std::nullopt,
                                 FactorStrategy strategy = FactorStrategy::psd_eigendecomposition);

// (1/J) X Yᵀ.
DenseMatrix cross_moment(const DataSet& d);

// Least-squares optimal rank-r maps fitted directly from the samples:
//   forward: (Y V_X V_Xᵀ)_r X†  minimizing (1/J)‖A X − Y‖_F²
//   inverse: (X V_Y V_Yᵀ)_r Y†  minimizing (1/J)‖A Y − X‖_F²
// The returned risk is the achieved empirical objective.
OptimalMap empirical_forward_map(const DataSet& d, std::size_t r);
OptimalMap empirical_inverse_map(const DataSet& d, std::size_t r);

// Affine least-squares variants: the linear map is fitted on centered
// samples and the bias is target mean − A · input mean, which jointly
// minimizes (1/J)‖A·in + b 1ᵀ − out‖_F² over rank-r A and b.
OptimalMap empirical_forward_map_affine(const DataSet& d, std::size_t r);
OptimalMap empirical_inverse_map_affine(const DataSet& d, std::size_t r);

Vector column_mean(const DenseMatrix& m);
DenseMatrix center_columns(const DenseMatrix& m, const Vector& mean);

}  // namespace rkmp
