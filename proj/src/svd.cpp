#include "rkmp/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rkmp/errors.hpp"
#include "rkmp/kernels.hpp"

namespace rkmp {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kJacobiTol = 1e-14;
constexpr int kMaxSweeps = 64;

// Round-robin (tournament) pair schedule: n-1 rounds, each pairing every
// column exactly once with no column repeated inside a round.
std::vector<std::vector<kernels::JacobiPair>> round_robin_rounds(std::size_t n) {
  std::vector<std::vector<kernels::JacobiPair>> rounds;
  if (n < 2) return rounds;
  const std::size_t slots = (n % 2 == 0) ? n : n + 1;  // odd n gets a bye slot
  std::vector<std::size_t> players(slots);
  std::iota(players.begin(), players.end(), 0);
  rounds.reserve(slots - 1);
  for (std::size_t r = 0; r + 1 < slots; ++r) {
    std::vector<kernels::JacobiPair> round;
    round.reserve(slots / 2);
    for (std::size_t i = 0; i < slots / 2; ++i) {
      std::size_t a = players[i];
      std::size_t b = players[slots - 1 - i];
      if (a >= n || b >= n) continue;  // bye
      if (a > b) std::swap(a, b);
      round.push_back({a, b});
    }
    rounds.push_back(std::move(round));
    // rotate all but the first player
    std::size_t last = players[slots - 1];
    for (std::size_t i = slots - 1; i > 1; --i) players[i] = players[i - 1];
    players[1] = last;
  }
  return rounds;
}

double column_norm(const double* col, std::size_t m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += col[i] * col[i];
  return std::sqrt(s);
}

// Fills any zero column of u (orthonormal m×k otherwise) with a deterministic
// completion drawn from canonical basis vectors.
void complete_zero_columns(DenseMatrix& u, const std::vector<bool>& is_zero) {
  const std::size_t m = u.rows();
  const std::size_t k = u.cols();
  std::size_t candidate = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (!is_zero[j]) continue;
    for (; candidate < m; ++candidate) {
      std::vector<double> w(m, 0.0);
      w[candidate] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t c = 0; c < k; ++c) {
          if (is_zero[c] && c >= j) continue;  // not yet filled
          const double* uc = u.col(c);
          double dot = 0.0;
          for (std::size_t i = 0; i < m; ++i) dot += uc[i] * w[i];
          for (std::size_t i = 0; i < m; ++i) w[i] -= dot * uc[i];
        }
      }
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 0.5) {
        double* uj = u.col(j);
        for (std::size_t i = 0; i < m; ++i) uj[i] = w[i] / norm;
        ++candidate;
        break;
      }
    }
  }
}

// Core one-sided Jacobi on a tall (m ≥ n) matrix.
void jacobi_svd_tall(const DenseMatrix& a, DenseMatrix& u, std::vector<double>& sigma,
                     DenseMatrix& v) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  DenseMatrix g = a;
  v = DenseMatrix::identity(n);

  // Plane rotations preserve the Frobenius norm, so one absolute floor for
  // negligible columns is valid across all sweeps.
  const double norm_floor = frobenius_norm(a) * 1e-17;

  const auto rounds = round_robin_rounds(n);
  bool converged = n < 2;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    double worst = 0.0;
    for (const auto& round : rounds) {
      const double w = kernels::jacobi_round(g.data().data(), v.data().data(), m, n,
                                             round.data(), round.size(), kJacobiTol, norm_floor);
      if (w > worst) worst = w;
    }
    converged = worst <= kJacobiTol;
  }
  if (!converged) {
    throw ConvergenceError("svd: one-sided Jacobi did not converge within " +
                           std::to_string(kMaxSweeps) + " sweeps");
  }

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) norms[j] = column_norm(g.col(j), m);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  u = DenseMatrix(m, n);
  sigma.assign(n, 0.0);
  DenseMatrix v_sorted(n, n);
  std::vector<bool> zero_col(n, false);
  // Columns skipped by the rotation floor may still be parallel to others;
  // normalizing them would break orthonormality, so they are rebuilt instead.
  const double zero_floor = norm_floor;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    sigma[j] = norms[src];
    const double* gs = g.col(src);
    double* uj = u.col(j);
    if (sigma[j] > zero_floor && sigma[j] > 0.0) {
      for (std::size_t i = 0; i < m; ++i) uj[i] = gs[i] / sigma[j];
    } else {
      sigma[j] = 0.0;
      zero_col[j] = true;
    }
    const double* vs = v.col(src);
    double* vj = v_sorted.col(j);
    for (std::size_t i = 0; i < n; ++i) vj[i] = vs[i];
  }
  complete_zero_columns(u, zero_col);
  v = std::move(v_sorted);
}

}  // namespace

DenseMatrix SvdFactors::reconstruct() const {
  const std::size_t m = row_count();
  const std::size_t n = col_count();
  const std::size_t k = triplet_count();
  DenseMatrix us(m, k);
  for (std::size_t j = 0; j < k; ++j) {
    const double* uj = U.col(j);
    double* sj = us.col(j);
    for (std::size_t i = 0; i < m; ++i) sj[i] = uj[i] * sigma[j];
  }
  DenseMatrix out(m, n);
  if (k > 0) {
    DenseMatrix vt = transpose(V);
    kernels::gemm(us.data().data(), vt.data().data(), out.data().data(), m, k, n);
  }
  return out;
}

SvdFactors svd(const DenseMatrix& m, double rank_tolerance) {
  if (rank_tolerance < 0.0) throw ContractError("svd: rank_tolerance must be >= 0");
  if (!m.all_finite()) throw ContractError("svd: input has non-finite entries");

  SvdFactors f;
  if (m.rows() == 0 || m.cols() == 0) {
    f.U = DenseMatrix(m.rows(), 0);
    f.V = DenseMatrix(m.cols(), 0);
    f.rank_tolerance = rank_tolerance;
    return f;
  }

  const bool transposed = m.rows() < m.cols();
  if (transposed) {
    DenseMatrix at = transpose(m);
    jacobi_svd_tall(at, f.V, f.sigma, f.U);
  } else {
    jacobi_svd_tall(m, f.U, f.sigma, f.V);
  }

  const double sigma_max = f.sigma.empty() ? 0.0 : f.sigma.front();
  f.rank_tolerance = rank_tolerance > 0.0
                         ? rank_tolerance
                         : static_cast<double>(std::max(m.rows(), m.cols())) * sigma_max * kEps;
  f.effective_rank = 0;
  for (double s : f.sigma)
    if (s > f.rank_tolerance) ++f.effective_rank;
  return f;
}

SvdFactors truncate(const SvdFactors& f, std::size_t r) {
  if (r < 1) throw ContractError("truncate: rank must be >= 1");
  const std::size_t keep = std::min(r, f.effective_rank);
  SvdFactors out;
  out.rank_tolerance = f.rank_tolerance;
  out.sigma.assign(f.sigma.begin(), f.sigma.begin() + keep);
  out.U = DenseMatrix(f.U.rows(), keep);
  out.V = DenseMatrix(f.V.rows(), keep);
  for (std::size_t j = 0; j < keep; ++j) {
    const double* uj = f.U.col(j);
    double* oj = out.U.col(j);
    for (std::size_t i = 0; i < f.U.rows(); ++i) oj[i] = uj[i];
    const double* vj = f.V.col(j);
    double* pj = out.V.col(j);
    for (std::size_t i = 0; i < f.V.rows(); ++i) pj[i] = vj[i];
  }
  out.effective_rank = keep;
  return out;
}

DenseMatrix pseudoinverse(const SvdFactors& f) {
  // V_k diag(1/sigma) U_kᵀ over the effective spectrum.
  const std::size_t k = f.effective_rank;
  DenseMatrix vs(f.V.rows(), k);
  for (std::size_t j = 0; j < k; ++j) {
    const double* vj = f.V.col(j);
    double* oj = vs.col(j);
    for (std::size_t i = 0; i < f.V.rows(); ++i) oj[i] = vj[i] / f.sigma[j];
  }
  DenseMatrix out(f.V.rows(), f.U.rows());
  if (k > 0) {
    DenseMatrix ukt(k, f.U.rows());
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < f.U.rows(); ++i) ukt(j, i) = f.U(i, j);
    kernels::gemm(vs.data().data(), ukt.data().data(), out.data().data(), f.V.rows(), k,
                  f.U.rows());
  }
  return out;
}

DenseMatrix pseudoinverse(const DenseMatrix& m) { return pseudoinverse(svd(m)); }

namespace {

DenseMatrix projector_from(const DenseMatrix& basis, std::size_t k) {
  DenseMatrix uk(basis.rows(), k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < basis.rows(); ++i) uk(i, j) = basis(i, j);
  return multiply(uk, transpose(uk));
}

}  // namespace

DenseMatrix left_projector(const DenseMatrix& m) {
  const SvdFactors f = svd(m);
  return projector_from(f.U, f.effective_rank);
}

DenseMatrix right_projector(const DenseMatrix& m) {
  const SvdFactors f = svd(m);
  return projector_from(f.V, f.effective_rank);
}

DenseMatrix generalized_rank_approx(const DenseMatrix& a, const DenseMatrix& b,
                                    const DenseMatrix& c, std::size_t r) {
  if (b.rows() != a.rows() || c.cols() != a.cols())
    throw DimensionError("generalized_rank_approx: shapes not conformable");
  if (r < 1) throw ContractError("generalized_rank_approx: rank must be >= 1");
  const SvdFactors fb = svd(b);
  const SvdFactors fc = svd(c);
  const DenseMatrix pl = projector_from(fb.U, fb.effective_rank);
  const DenseMatrix pr = projector_from(fc.V, fc.effective_rank);
  const DenseMatrix inner = multiply(multiply(pl, a), pr);
  const SvdFactors fi = truncate(svd(inner), r);
  return multiply(multiply(pseudoinverse(fb), fi.reconstruct()), pseudoinverse(fc));
}

SymmetricEigen symmetric_eigen(const DenseMatrix& s) {
  if (s.rows() != s.cols()) throw DimensionError("symmetric_eigen: matrix must be square");
  const std::size_t n = s.rows();
  // Work on the symmetrized copy; the caller contract allows 1e-10 skew.
  DenseMatrix a(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) a(i, j) = 0.5 * (s(i, j) + s(j, i));
  DenseMatrix q = DenseMatrix::identity(n);

  double scale = max_abs(a);
  if (scale == 0.0) scale = 1.0;
  const double stop = 1e-15 * scale;

  bool converged = n < 2;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    double worst = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t qi = p + 1; qi < n; ++qi) {
        const double apq = a(p, qi);
        if (std::fabs(apq) > worst) worst = std::fabs(apq);
        if (std::fabs(apq) <= stop) continue;
        const double zeta = (a(qi, qi) - a(p, p)) / (2.0 * apq);
        const double t =
            (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p);
          const double aiq = a(i, qi);
          a(i, p) = c * aip - sn * aiq;
          a(i, qi) = sn * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a(p, i);
          const double aqi = a(qi, i);
          a(p, i) = c * api - sn * aqi;
          a(qi, i) = sn * api + c * aqi;
        }
        a(p, qi) = 0.0;
        a(qi, p) = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double qip = q(i, p);
          const double qiq = q(i, qi);
          q(i, p) = c * qip - sn * qiq;
          q(i, qi) = sn * qip + c * qiq;
        }
      }
    }
    converged = worst <= stop;
  }
  if (!converged)
    throw ConvergenceError("symmetric_eigen: Jacobi did not converge within " +
                           std::to_string(kMaxSweeps) + " sweeps");

  std::vector<double> lambda(n);
  for (std::size_t i = 0; i < n; ++i) lambda[i] = a(i, i);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return lambda[x] > lambda[y]; });

  SymmetricEigen out;
  out.lambda.resize(n);
  out.q = DenseMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.lambda[j] = lambda[order[j]];
    for (std::size_t i = 0; i < n; ++i) out.q(i, j) = q(i, order[j]);
  }
  return out;
}

SymmetricFactor symmetric_factor(const DenseMatrix& s, FactorStrategy strategy, double ridge,
                                 double rank_tolerance) {
  if (s.rows() != s.cols()) throw DimensionError("symmetric_factor: matrix must be square");
  if (ridge < 0.0) throw ContractError("symmetric_factor: ridge must be >= 0");
  const std::size_t n = s.rows();
  {
    double skew = 0.0;
    double scale = std::max(1.0, max_abs(s));
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = j + 1; i < n; ++i)
        skew = std::max(skew, std::fabs(s(i, j) - s(j, i)));
    if (skew > 1e-10 * scale)
      throw ContractError("symmetric_factor: input is not symmetric to 1e-10");
  }

  SymmetricFactor out;
  out.source_kind = strategy;
  out.ridge = ridge;

  if (strategy == FactorStrategy::cholesky_with_ridge) {
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = j; i < n; ++i) {
        double sum = 0.5 * (s(i, j) + s(j, i));
        if (i == j) sum += ridge;
        for (std::size_t k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
        if (i == j) {
          if (sum <= 0.0)
            throw NotPositiveDefiniteError(
                "symmetric_factor: ridged matrix is not positive definite at pivot " +
                std::to_string(j) + "; consider a larger ridge");
          l(j, j) = std::sqrt(sum);
        } else {
          l(i, j) = sum / l(j, j);
        }
      }
    }
    out.L = std::move(l);
    return out;
  }

  DenseMatrix sr = s;
  if (ridge > 0.0)
    for (std::size_t i = 0; i < n; ++i) sr(i, i) += ridge;
  const SymmetricEigen eig = symmetric_eigen(sr);
  const double lmax = eig.lambda.empty() ? 0.0 : std::fabs(eig.lambda.front());
  const double lmin = eig.lambda.empty() ? 0.0 : eig.lambda.back();
  if (lmin < -1e-8 * std::max(lmax, 1e-300))
    throw NotPsdError("symmetric_factor: eigenvalue " + std::to_string(lmin) +
                      " is negative beyond tolerance; input is not PSD");
  const double tol = rank_tolerance > 0.0 ? rank_tolerance : static_cast<double>(n) * lmax * kEps;
  std::size_t p = 0;
  while (p < n && eig.lambda[p] > tol) ++p;
  DenseMatrix l(n, p);
  for (std::size_t j = 0; j < p; ++j) {
    const double root = std::sqrt(eig.lambda[j]);
    for (std::size_t i = 0; i < n; ++i) l(i, j) = eig.q(i, j) * root;
  }
  out.L = std::move(l);
  return out;
}

DenseMatrix solve_lower(const DenseMatrix& l, const DenseMatrix& b) {
  if (l.rows() != l.cols() || l.rows() != b.rows())
    throw DimensionError("solve_lower: shape mismatch");
  const std::size_t n = l.rows();
  DenseMatrix z = b;
  for (std::size_t j = 0; j < b.cols(); ++j) {
    double* zj = z.col(j);
    for (std::size_t i = 0; i < n; ++i) {
      double sum = zj[i];
      for (std::size_t k = 0; k < i; ++k) sum -= l(i, k) * zj[k];
      zj[i] = sum / l(i, i);
    }
  }
  return z;
}

DenseMatrix solve_lower_transposed(const DenseMatrix& l, const DenseMatrix& b) {
  if (l.rows() != l.cols() || l.rows() != b.rows())
    throw DimensionError("solve_lower_transposed: shape mismatch");
  const std::size_t n = l.rows();
  DenseMatrix z = b;
  for (std::size_t j = 0; j < b.cols(); ++j) {
    double* zj = z.col(j);
    for (std::size_t ii = n; ii > 0; --ii) {
      const std::size_t i = ii - 1;
      double sum = zj[i];
      for (std::size_t k = i + 1; k < n; ++k) sum -= l(k, i) * zj[k];
      zj[i] = sum / l(i, i);
    }
  }
  return z;
}

}  // namespace rkmp
