#pragma once

#include <span>
#include <vector>

#include "alignnet/common.hpp"

namespace alignnet {

// Dense row-major matrix of doubles.  Deliberately minimal: the training
// paths need predictable memory layout and a fixed floating-point evaluation
// order more than they need a linear-algebra library.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw ShapeError("Matrix: negative dimension");
  }

  double& at(int r, int c) {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  double at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  std::span<double> row(int r) {
    return {data.data() + static_cast<std::size_t>(r) * cols,
            static_cast<std::size_t>(cols)};
  }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols,
            static_cast<std::size_t>(cols)};
  }

  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }
};

// Pairwise summation with a ceil-half split and single-element leaves.
// The midpoint split keeps block-duplicated inputs exactly self-similar:
// summing [v ; v] yields bit-for-bit 2 * sum(v), which the loss functions
// rely on for their duplication-invariance guarantee.
inline double pairwise_sum_range(const double* v, std::size_t n) {
  if (n == 0) return 0.0;
  if (n == 1) return v[0];
  std::size_t mid = (n + 1) / 2;
  return pairwise_sum_range(v, mid) + pairwise_sum_range(v + mid, n - mid);
}

inline double pairwise_sum(std::span<const double> v) {
  return pairwise_sum_range(v.data(), v.size());
}

// Solves A x = b for small dense systems (Gaussian elimination with partial
// pivoting).  A is consumed.  Throws NumericError on a singular system.
std::vector<double> solve_dense(Matrix a, std::vector<double> b);

}  // namespace alignnet
