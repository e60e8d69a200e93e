#include "alignnet/matrix.hpp"

#include <cmath>

namespace alignnet {

std::vector<double> solve_dense(Matrix a, std::vector<double> b) {
  int n = a.rows;
  if (a.cols != n || static_cast<int>(b.size()) != n) {
    throw ShapeError("solve_dense: system must be square");
  }
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::fabs(a.at(col, col));
    for (int r = col + 1; r < n; ++r) {
      double v = std::fabs(a.at(r, col));
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best < 1e-300) throw NumericError("solve_dense: singular system");
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a.at(pivot, c), a.at(col, c));
      std::swap(b[static_cast<std::size_t>(pivot)],
                b[static_cast<std::size_t>(col)]);
    }
    double d = a.at(col, col);
    for (int r = col + 1; r < n; ++r) {
      double f = a.at(r, col) / d;
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a.at(r, c) -= f * a.at(col, c);
      b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double acc = b[static_cast<std::size_t>(r)];
    for (int c = r + 1; c < n; ++c) {
      acc -= a.at(r, c) * x[static_cast<std::size_t>(c)];
    }
    x[static_cast<std::size_t>(r)] = acc / a.at(r, r);
  }
  return x;
}

}  // namespace alignnet
