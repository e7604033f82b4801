#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rkmp {

// Dense real matrix, column-major. The universal carrier for data matrices,
// operators and factors. Entries are validated finite when constructed from
// caller-supplied data.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> diag);
  // Row-by-row initializer, handy in tests: {{1,2},{3,4}}.
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  double* col(std::size_t j) { return data_.data() + j * rows_; }
  const double* col(std::size_t j) const { return data_.data() + j * rows_; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using Vector = std::vector<double>;

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& a, double s);

inline DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) { return multiply(a, b); }
inline DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) { return add(a, b); }
inline DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) { return subtract(a, b); }

Vector multiply(const DenseMatrix& a, const Vector& x);
Vector multiply_transposed(const DenseMatrix& a, const Vector& x);  // aᵀ x

double frobenius_norm(const DenseMatrix& a);
double max_abs(const DenseMatrix& a);
double trace(const DenseMatrix& a);
// tr(a·b) without forming the product.
double trace_product(const DenseMatrix& a, const DenseMatrix& b);

// Max |a - b| entry; shapes must match.
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* where);

}  // namespace rkmp
