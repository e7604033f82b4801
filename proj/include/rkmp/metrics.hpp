#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "rkmp/dense.hpp"
#include "rkmp/empirical.hpp"

namespace rkmp {

// (1/J)‖pred − truth‖_F² with J the column count.
double mse(const DenseMatrix& pred, const DenseMatrix& truth);

// ‖pred − truth‖_F / ‖truth‖_F.
double nrmse(const DenseMatrix& pred, const DenseMatrix& truth);

// (1/J)‖pred − truth‖₁ elementwise. The literal per-column normalization is
// the default; per_entry divides by the full entry count instead.
double mae(const DenseMatrix& pred, const DenseMatrix& truth, bool per_entry = false);

// Per-variable error slices for vectorized field data.
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

DenseMatrix slice_rows(const DenseMatrix& m, RowRange range);

struct ErrorReport {
  double total_nrmse = 0.0;
  double eta_nrmse = 0.0;
  double u_mae = 0.0;
  double v_mae = 0.0;
  double mse_value = 0.0;
  std::size_t sample_count = 0;
};

ErrorReport field_error_report(const DenseMatrix& pred, const DenseMatrix& truth, RowRange u,
                               RowRange v, RowRange eta);

// One evaluated map per rank: the matrix and an optional bias.
struct EvaluatedMap {
  DenseMatrix A;
  std::optional<Vector> bias;
};
using MapBuilder = std::function<EvaluatedMap(std::size_t rank)>;

struct SweepRow {
  std::size_t rank = 0;
  double optimal_risk = 0.0;
  double learned_risk = 0.0;
};

// Empirical risk of optimal and learned maps per rank: (1/J)‖A·in + b1ᵀ − out‖².
// With swap_direction the dataset's Y is the input and X the target.
std::vector<SweepRow> risk_rank_sweep(const MapBuilder& optimal_builder,
                                      const MapBuilder& learned_builder,
                                      const std::vector<std::size_t>& ranks, const DataSet& d,
                                      bool swap_direction = false);

double empirical_map_risk(const EvaluatedMap& map, const DenseMatrix& input,
                          const DenseMatrix& target);

}  // namespace rkmp
