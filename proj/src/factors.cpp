#include "rkmp/factors.hpp"

#include <cmath>
#include <string>

#include "rkmp/errors.hpp"
#include "rkmp/svd.hpp"

namespace rkmp {

namespace {

void rotate_columns(DenseMatrix& m, std::size_t a, std::size_t b, double c, double s) {
  double* ca = m.col(a);
  double* cb = m.col(b);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double xa = ca[i];
    const double xb = cb[i];
    ca[i] = c * xa + s * xb;
    cb[i] = -s * xa + c * xb;
  }
}

Vector column_means(const DenseMatrix& m) {
  Vector mu(m.cols(), 0.0);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double* cj = m.col(j);
    for (std::size_t i = 0; i < m.rows(); ++i) mu[j] += cj[i];
    mu[j] /= static_cast<double>(m.rows());
  }
  return mu;
}

}  // namespace

double varimax_criterion(const DenseMatrix& loadings) {
  const double p = static_cast<double>(loadings.rows());
  double v = 0.0;
  for (std::size_t j = 0; j < loadings.cols(); ++j) {
    const double* cj = loadings.col(j);
    double sum_sq = 0.0, sum_quad = 0.0;
    for (std::size_t i = 0; i < loadings.rows(); ++i) {
      const double sq = cj[i] * cj[i];
      sum_sq += sq;
      sum_quad += sq * sq;
    }
    v += sum_quad / p - (sum_sq / p) * (sum_sq / p);
  }
  return v;
}

VarimaxResult varimax_rotate(const LatentFactors& f, double tol, std::size_t max_iters,
                             bool kaiser_normalize) {
  const std::size_t r = f.loadings.cols();
  if (r < 2) throw ContractError("varimax_rotate: need at least two factors");
  const std::size_t p = f.loadings.rows();

  DenseMatrix work = f.loadings;
  Vector row_norms(p, 1.0);
  if (kaiser_normalize) {
    for (std::size_t i = 0; i < p; ++i) {
      double h = 0.0;
      for (std::size_t j = 0; j < r; ++j) h += work(i, j) * work(i, j);
      row_norms[i] = std::sqrt(h);
      if (row_norms[i] > 0.0)
        for (std::size_t j = 0; j < r; ++j) work(i, j) /= row_norms[i];
    }
  }

  VarimaxResult out;
  out.rotation = DenseMatrix::identity(r);
  double criterion = varimax_criterion(work);

  for (std::size_t sweep = 0; sweep < max_iters; ++sweep) {
    for (std::size_t a = 0; a + 1 < r; ++a) {
      for (std::size_t b = a + 1; b < r; ++b) {
        const double* xa = work.col(a);
        const double* xb = work.col(b);
        double sum_u = 0.0, sum_v = 0.0, sum_c = 0.0, sum_d = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
          const double u = xa[i] * xa[i] - xb[i] * xb[i];
          const double v = 2.0 * xa[i] * xb[i];
          sum_u += u;
          sum_v += v;
          sum_c += u * u - v * v;
          sum_d += 2.0 * u * v;
          scale += xa[i] * xa[i] + xb[i] * xb[i];
        }
        const double pd = static_cast<double>(p);
        const double num = sum_d - 2.0 * sum_u * sum_v / pd;
        const double den = sum_c - (sum_u * sum_u - sum_v * sum_v) / pd;
        const double signal_floor = 1e-13 * std::max(scale * scale / pd, 1e-300);
        if (std::fabs(num) <= signal_floor && std::fabs(den) <= signal_floor) {
          out.degenerate = true;  // no rotation signal for this pair
          continue;
        }
        const double angle = 0.25 * std::atan2(num, den);
        if (std::fabs(angle) < 1e-14) continue;
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        rotate_columns(work, a, b, c, s);
        rotate_columns(out.rotation, a, b, c, s);
      }
    }
    out.sweeps = sweep + 1;
    const double next = varimax_criterion(work);
    if (next - criterion < tol * std::max(1.0, std::fabs(criterion))) {
      criterion = std::max(criterion, next);
      break;
    }
    criterion = next;
  }

  out.factors.loadings = multiply(f.loadings, out.rotation);
  out.factors.scores = multiply(f.scores, out.rotation);
  out.factors.rotation_applied = true;
  return out;
}

ProcrustesResult procrustes_align(const DenseMatrix& z, const DenseMatrix& target) {
  if (z.cols() != target.cols() || z.rows() != target.rows())
    throw DimensionError("procrustes_align: Z and target must share shape");
  const DenseMatrix m = multiply(transpose(z), target);
  const SvdFactors f = svd(m);
  ProcrustesResult out;
  out.rotation = multiply(f.U, transpose(f.V));
  out.aligned = multiply(z, out.rotation);
  out.unique = f.effective_rank == m.rows();
  return out;
}

CevReport cumulative_explained_variance(const LatentFactors& f, const DenseMatrix& data) {
  if (f.loadings.rows() != data.cols())
    throw DimensionError("cumulative_explained_variance: loadings rows must match data columns");
  const std::size_t t_len = data.rows();
  if (t_len < 2) throw ContractError("cumulative_explained_variance: need at least two rows");
  const Vector mu = column_means(data);

  double total_var = 0.0;
  for (std::size_t j = 0; j < data.cols(); ++j) {
    const double* cj = data.col(j);
    for (std::size_t i = 0; i < t_len; ++i) total_var += (cj[i] - mu[j]) * (cj[i] - mu[j]);
  }
  total_var /= static_cast<double>(t_len - 1);
  if (total_var <= 0.0)
    throw ContractError("cumulative_explained_variance: zero-variance data");

  CevReport report;
  report.per_factor.assign(f.loadings.cols(), 0.0);
  for (std::size_t k = 0; k < f.loadings.cols(); ++k) {
    double norm = 0.0;
    for (std::size_t j = 0; j < data.cols(); ++j) norm += f.loadings(j, k) * f.loadings(j, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    double proj_var = 0.0;
    for (std::size_t i = 0; i < t_len; ++i) {
      double proj = 0.0;
      for (std::size_t j = 0; j < data.cols(); ++j)
        proj += (data(i, j) - mu[j]) * f.loadings(j, k) / norm;
      proj_var += proj * proj;
    }
    proj_var /= static_cast<double>(t_len - 1);
    report.per_factor[k] = proj_var / total_var;
    report.total += report.per_factor[k];
  }
  return report;
}

double factor_balance(const Vector& per_factor_cev) {
  if (per_factor_cev.size() < 2) throw ContractError("factor_balance: need at least two factors");
  double lo = per_factor_cev.front(), hi = per_factor_cev.front();
  for (double c : per_factor_cev) {
    if (c < 0.0) throw ContractError("factor_balance: explained variances must be >= 0");
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  if (hi <= 0.0) throw ContractError("factor_balance: all explained variances are zero");
  return lo / hi;
}

Vector aligned_factor_correlations(const DenseMatrix& aligned, const DenseMatrix& truth) {
  require_same_shape(aligned, truth, "aligned_factor_correlations");
  const std::size_t t_len = aligned.rows();
  if (t_len < 2) throw ContractError("aligned_factor_correlations: need at least two rows");
  Vector out(aligned.cols(), 0.0);
  for (std::size_t j = 0; j < aligned.cols(); ++j) {
    const double* a = aligned.col(j);
    const double* b = truth.col(j);
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < t_len; ++i) {
      ma += a[i];
      mb += b[i];
    }
    ma /= static_cast<double>(t_len);
    mb /= static_cast<double>(t_len);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < t_len; ++i) {
      cov += (a[i] - ma) * (b[i] - mb);
      va += (a[i] - ma) * (a[i] - ma);
      vb += (b[i] - mb) * (b[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0)
      throw ContractError("aligned_factor_correlations: zero-variance factor column " +
                          std::to_string(j));
    out[j] = std::fabs(cov) / std::sqrt(va * vb);
  }
  return out;
}

}  // namespace rkmp
