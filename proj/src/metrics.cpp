#include "rkmp/metrics.hpp"

#include <cmath>

#include "rkmp/errors.hpp"

namespace rkmp {

double mse(const DenseMatrix& pred, const DenseMatrix& truth) {
  require_same_shape(pred, truth, "mse");
  if (truth.cols() == 0) throw ContractError("mse: empty matrices");
  const double r = frobenius_norm(subtract(pred, truth));
  return r * r / static_cast<double>(truth.cols());
}

double nrmse(const DenseMatrix& pred, const DenseMatrix& truth) {
  require_same_shape(pred, truth, "nrmse");
  const double denom = frobenius_norm(truth);
  if (denom == 0.0) throw ContractError("nrmse: zero truth norm");
  return frobenius_norm(subtract(pred, truth)) / denom;
}

double mae(const DenseMatrix& pred, const DenseMatrix& truth, bool per_entry) {
  require_same_shape(pred, truth, "mae");
  if (truth.cols() == 0) throw ContractError("mae: empty matrices");
  double sum = 0.0;
  auto pd = pred.data();
  auto td = truth.data();
  for (std::size_t i = 0; i < pd.size(); ++i) sum += std::fabs(pd[i] - td[i]);
  const double denom = per_entry ? static_cast<double>(pd.size())
                                 : static_cast<double>(truth.cols());
  return sum / denom;
}

DenseMatrix slice_rows(const DenseMatrix& m, RowRange range) {
  if (range.end < range.begin || range.end > m.rows())
    throw DimensionError("slice_rows: range out of bounds");
  DenseMatrix out(range.end - range.begin, m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = range.begin; i < range.end; ++i) out(i - range.begin, j) = m(i, j);
  return out;
}

ErrorReport field_error_report(const DenseMatrix& pred, const DenseMatrix& truth, RowRange u,
                               RowRange v, RowRange eta) {
  require_same_shape(pred, truth, "field_error_report");
  ErrorReport report;
  report.sample_count = truth.cols();
  report.total_nrmse = nrmse(pred, truth);
  report.eta_nrmse = nrmse(slice_rows(pred, eta), slice_rows(truth, eta));
  report.u_mae = mae(slice_rows(pred, u), slice_rows(truth, u));
  report.v_mae = mae(slice_rows(pred, v), slice_rows(truth, v));
  report.mse_value = mse(pred, truth);
  return report;
}

double empirical_map_risk(const EvaluatedMap& map, const DenseMatrix& input,
                          const DenseMatrix& target) {
  DenseMatrix pred = multiply(map.A, input);
  if (map.bias) {
    if (map.bias->size() != pred.rows())
      throw DimensionError("empirical_map_risk: bias length mismatch");
    for (std::size_t j = 0; j < pred.cols(); ++j) {
      double* pj = pred.col(j);
      for (std::size_t i = 0; i < pred.rows(); ++i) pj[i] += (*map.bias)[i];
    }
  }
  return mse(pred, target);
}

std::vector<SweepRow> risk_rank_sweep(const MapBuilder& optimal_builder,
                                      const MapBuilder& learned_builder,
                                      const std::vector<std::size_t>& ranks, const DataSet& d,
                                      bool swap_direction) {
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] == 0) throw ContractError("risk_rank_sweep: ranks must be positive");
    if (i > 0 && ranks[i] <= ranks[i - 1])
      throw ContractError("risk_rank_sweep: ranks must be ascending");
  }
  if (!d.Y.has_value()) throw ContractError("risk_rank_sweep: dataset needs observations");
  const DenseMatrix& input = swap_direction ? *d.Y : d.X;
  const DenseMatrix& target = swap_direction ? d.X : *d.Y;

  std::vector<SweepRow> rows;
  rows.reserve(ranks.size());
  for (std::size_t r : ranks) {
    SweepRow row;
    row.rank = r;
    row.optimal_risk = empirical_map_risk(optimal_builder(r), input, target);
    row.learned_risk = empirical_map_risk(learned_builder(r), input, target);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rkmp
