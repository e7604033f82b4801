#include "rkmp/dense.hpp"

#include <cmath>
#include <string>

#include "rkmp/errors.hpp"
#include "rkmp/kernels.hpp"

namespace rkmp {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("DenseMatrix: data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  if (!all_finite()) throw ContractError("DenseMatrix: non-finite entry on construction");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
  DenseMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  DenseMatrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("DenseMatrix::from_rows: ragged rows");
    std::size_t j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  if (!m.all_finite()) throw ContractError("DenseMatrix: non-finite entry on construction");
  return m;
}

bool DenseMatrix::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("multiply: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  DenseMatrix c(a.rows(), b.cols());
  kernels::gemm(a.data().data(), b.data().data(), c.data().data(), a.rows(), a.cols(), b.cols());
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
  return t;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "add");
  DenseMatrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] += bd[i];
  return c;
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "subtract");
  DenseMatrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
  return c;
}

DenseMatrix scale(const DenseMatrix& a, double s) {
  DenseMatrix c = a;
  for (double& x : c.data()) x *= s;
  return c;
}

Vector multiply(const DenseMatrix& a, const Vector& x) {
  if (a.cols() != x.size()) throw DimensionError("multiply: matrix/vector shape mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const double* aj = a.col(j);
    const double xj = x[j];
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] += aj[i] * xj;
  }
  return y;
}

Vector multiply_transposed(const DenseMatrix& a, const Vector& x) {
  if (a.rows() != x.size()) throw DimensionError("multiply_transposed: shape mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const double* aj = a.col(j);
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += aj[i] * x[i];
    y[j] = s;
  }
  return y;
}

double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return std::sqrt(s);
}

double max_abs(const DenseMatrix& a) {
  double s = 0.0;
  for (double x : a.data()) s = std::max(s, std::fabs(x));
  return s;
}

double trace(const DenseMatrix& a) {
  const std::size_t n = std::min(a.rows(), a.cols());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a(i, i);
  return s;
}

double trace_product(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows() || a.rows() != b.cols())
    throw DimensionError("trace_product: shapes not conformable");
  double s = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const double* aj = a.col(j);
    for (std::size_t i = 0; i < a.rows(); ++i) s += aj[i] * b(j, i);
  }
  return s;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double s = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) s = std::max(s, std::fabs(ad[i] - bd[i]));
  return s;
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* where) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(where) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
}

}  // namespace rkmp
