#pragma once

// Dense linear algebra for small (d x d) problems. The parameter dimension in
// this library is tiny, so a plain row-major matrix with pivoted LU is all we
// need; nothing here is tuned for large d.

#include <cstddef>
#include <span>
#include <vector>

namespace mvrs {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

 private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);

Vector matvec(const Matrix& a, std::span<const double> x);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

// a += w * v v^T (rank-one update used by every moment accumulation here).
void add_outer(Matrix& a, std::span<const double> v, double w);

// Make exactly symmetric by averaging with the transpose.
void symmetrize(Matrix& a);

// Pivoted LU solve / inverse. Throws SingularHessianError when a pivot
// collapses relative to the matrix scale.
Vector solve(const Matrix& a, const Vector& b);
Matrix inverse(const Matrix& a);

// Lower Cholesky factor of a symmetric positive definite matrix.
Matrix cholesky(const Matrix& a);

double max_abs(const Matrix& a);
double max_abs(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double frobenius(const Matrix& a);
double trace(const Matrix& a);

}  // namespace mvrs
