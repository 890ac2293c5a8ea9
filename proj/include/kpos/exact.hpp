#pragma once

#include <cmath>
#include <type_traits>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "kpos/error.hpp"

namespace kpos {

using Rational = mpq_class;

// Small row-major dense matrix over double or Rational. Eigen is not used
// here because gmpxx expression templates do not compose with it.
template <class T>
class DenseMat {
 public:
  DenseMat() = default;
  DenseMat(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows * cols), T(0)) {}

  static DenseMat identity(int n) {
    DenseMat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  T& operator()(int i, int j) { return a_[static_cast<size_t>(i * cols_ + j)]; }
  const T& operator()(int i, int j) const { return a_[static_cast<size_t>(i * cols_ + j)]; }

  DenseMat operator*(const DenseMat& b) const {
    if (cols_ != b.rows_) fail(ErrorCode::DimMismatch, "product size mismatch");
    DenseMat c(rows_, b.cols_);
    for (int i = 0; i < rows_; ++i)
      for (int k = 0; k < cols_; ++k) {
        if ((*this)(i, k) == T(0)) continue;
        for (int j = 0; j < b.cols_; ++j) c(i, j) += (*this)(i, k) * b(k, j);
      }
    return c;
  }

  DenseMat submatrix(const std::vector<int>& rows, const std::vector<int>& cols) const {
    DenseMat s(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t j = 0; j < cols.size(); ++j) s(static_cast<int>(i), static_cast<int>(j)) = (*this)(rows[i], cols[j]);
    return s;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> a_;
};

template <class T>
int sign_of(const T& x) {
  if constexpr (std::is_floating_point_v<T>) {
    return (x > 0) - (x < 0);
  } else {
    return sgn(x);
  }
}

// Gaussian elimination. Exact inputs pivot on the first nonzero entry,
// floating inputs on the largest entry of the column.
template <class T>
T determinant(DenseMat<T> m) {
  const int n = m.rows();
  if (m.cols() != n) fail(ErrorCode::DimMismatch, "determinant of a non-square matrix");
  T det(1);
  for (int c = 0; c < n; ++c) {
    int piv = -1;
    if constexpr (std::is_floating_point_v<T>) {
      double best = 0.0;
      for (int r = c; r < n; ++r)
        if (std::abs(m(r, c)) > best) {
          best = std::abs(m(r, c));
          piv = r;
        }
    } else {
      for (int r = c; r < n && piv < 0; ++r)
        if (m(r, c) != 0) piv = r;
    }
    if (piv < 0) return T(0);
    if (piv != c) {
      for (int j = 0; j < n; ++j) std::swap(m(piv, j), m(c, j));
      det = -det;
    }
    det *= m(c, c);
    for (int r = c + 1; r < n; ++r) {
      if (m(r, c) == 0) continue;
      const T f = m(r, c) / m(c, c);
      for (int j = c; j < n; ++j) m(r, j) -= f * m(c, j);
    }
  }
  return det;
}

}  // namespace kpos
