#include "rkmp/empirical.hpp"

#include <cmath>

#include "rkmp/errors.hpp"
#include "rkmp/svd.hpp"

namespace rkmp {

namespace {

double default_ridge(const DenseMatrix& moment) {
  double diag_mean = 0.0;
  for (std::size_t i = 0; i < moment.rows(); ++i) diag_mean += moment(i, i);
  diag_mean /= static_cast<double>(moment.rows());
  return 1e-8 * diag_mean;
}

void require_observations(const DataSet& d, const char* where) {
  if (!d.Y.has_value()) throw ContractError(std::string(where) + ": dataset has no observations");
  if (d.Y->cols() != d.X.cols())
    throw DimensionError(std::string(where) + ": X and Y sample counts differ");
}

// Â = (target · P_right(input))_r · input†, the shared least-squares core.
OptimalMap least_squares_map(const DenseMatrix& input, const DenseMatrix& target, std::size_t r,
                             MapKind kind) {
  if (r < 1) throw ContractError("empirical map: rank must be >= 1");
  const double j = static_cast<double>(input.cols());
  const SvdFactors fin = svd(input);
  DenseMatrix vk(fin.V.rows(), fin.effective_rank);
  for (std::size_t c = 0; c < fin.effective_rank; ++c)
    for (std::size_t i = 0; i < fin.V.rows(); ++i) vk(i, c) = fin.V(i, c);
  const DenseMatrix projected = multiply(multiply(target, vk), transpose(vk));
  const SvdFactors fp = svd(projected);

  OptimalMap map;
  map.A = multiply(truncate(fp, r).reconstruct(), pseudoinverse(fin));
  map.kind = kind;
  map.rank = std::min(r, fp.effective_rank);
  map.trace.branch = "empirical-least-squares";
  map.trace.requested_rank = r;
  map.trace.achieved_rank = map.rank;
  map.trace.clamped = r > fp.effective_rank;
  map.trace.unique = true;
  if (r < fp.effective_rank && fp.sigma.front() > 0.0 &&
      (fp.sigma[r - 1] - fp.sigma[r]) <= 1e-12 * fp.sigma.front())
    map.trace.unique = false;
  const double residual = frobenius_norm(subtract(multiply(map.A, input), target));
  map.risk = residual * residual / j;
  return map;
}

}  // namespace

Vector column_mean(const DenseMatrix& m) {
  Vector mu(m.rows(), 0.0);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double* cj = m.col(j);
    for (std::size_t i = 0; i < m.rows(); ++i) mu[i] += cj[i];
  }
  const double j = static_cast<double>(m.cols());
  for (double& x : mu) x /= j;
  return mu;
}

DenseMatrix center_columns(const DenseMatrix& m, const Vector& mean) {
  if (mean.size() != m.rows()) throw DimensionError("center_columns: mean length mismatch");
  DenseMatrix out = m;
  for (std::size_t j = 0; j < out.cols(); ++j) {
    double* cj = out.col(j);
    for (std::size_t i = 0; i < out.rows(); ++i) cj[i] -= mean[i];
  }
  return out;
}

MomentModel empirical_second_moment(const DataSet& d, std::optional<double> ridge,
                                    FactorStrategy strategy) {
  if (d.sample_count() < 1) throw InsufficientSamplesError("empirical_second_moment: J >= 1");
  const double j = static_cast<double>(d.sample_count());
  DenseMatrix gamma = multiply(d.X, transpose(d.X));
  for (double& x : gamma.data()) x /= j;
  const double chosen = ridge.value_or(default_ridge(gamma));
  return make_second_moment_model(gamma, strategy, chosen);
}

MomentModel empirical_covariance(const DataSet& d, std::optional<double> ridge,
                                 FactorStrategy strategy) {
  if (d.sample_count() < 2)
    throw InsufficientSamplesError("empirical_covariance: need at least two samples");
  const std::size_t n = d.X.rows();
  const std::size_t j = d.sample_count();
  const Vector mu = column_mean(d.X);
  DenseMatrix centered = d.X;
  for (std::size_t c = 0; c < j; ++c) {
    double* col = centered.col(c);
    for (std::size_t i = 0; i < n; ++i) col[i] -= mu[i];
  }
  DenseMatrix s = multiply(centered, transpose(centered));
  const double denom = static_cast<double>(j - 1);
  for (double& x : s.data()) x /= denom;
  const double chosen = ridge.value_or(default_ridge(s));
  return make_covariance_model(s, mu, strategy, chosen);
}

DenseMatrix cross_moment(const DataSet& d) {
  require_observations(d, "cross_moment");
  DenseMatrix g = multiply(d.X, transpose(*d.Y));
  const double j = static_cast<double>(d.sample_count());
  for (double& x : g.data()) x /= j;
  return g;
}

OptimalMap empirical_forward_map(const DataSet& d, std::size_t r) {
  require_observations(d, "empirical_forward_map");
  return least_squares_map(d.X, *d.Y, r, {Task::forward, Form::linear});
}

OptimalMap empirical_inverse_map(const DataSet& d, std::size_t r) {
  require_observations(d, "empirical_inverse_map");
  return least_squares_map(*d.Y, d.X, r, {Task::inverse, Form::linear});
}

namespace {

OptimalMap affine_least_squares_map(const DenseMatrix& input, const DenseMatrix& target,
                                    std::size_t r, MapKind kind) {
  const Vector mu_in = column_mean(input);
  const Vector mu_out = column_mean(target);
  OptimalMap map =
      least_squares_map(center_columns(input, mu_in), center_columns(target, mu_out), r, kind);
  Vector bias = multiply(map.A, mu_in);
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] = mu_out[i] - bias[i];
  map.bias = std::move(bias);
  // Risk on the uncentered samples; the bias makes both views coincide.
  DenseMatrix pred = multiply(map.A, input);
  for (std::size_t j = 0; j < pred.cols(); ++j) {
    double* pj = pred.col(j);
    for (std::size_t i = 0; i < pred.rows(); ++i) pj[i] += (*map.bias)[i];
  }
  const double residual = frobenius_norm(subtract(pred, target));
  map.risk = residual * residual / static_cast<double>(input.cols());
  return map;
}

}  // namespace

OptimalMap empirical_forward_map_affine(const DataSet& d, std::size_t r) {
  require_observations(d, "empirical_forward_map_affine");
  return affine_least_squares_map(d.X, *d.Y, r, {Task::forward, Form::affine});
}

OptimalMap empirical_inverse_map_affine(const DataSet& d, std::size_t r) {
  require_observations(d, "empirical_inverse_map_affine");
  return affine_least_squares_map(*d.Y, d.X, r, {Task::inverse, Form::affine});
}

}  // namespace rkmp
