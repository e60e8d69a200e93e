#pragma once

#include <array>

namespace alignnet {

// Third-degree polynomial p(s) = c0 + c1*s + c2*s^2 + c3*s^3 used both for
// the simulator's score distortions and for fitted alignment summaries.
// "Monotone" is a contract on the instances we construct, enforced with a
// dense grid check on the derivative rather than symbolically.
struct MonotoneCubic {
  std::array<double, 4> c{0.0, 1.0, 0.0, 0.0};  // identity by default

  double operator()(double s) const {
    return c[0] + s * (c[1] + s * (c[2] + s * c[3]));
  }

  double derivative(double s) const {
    return c[1] + s * (2.0 * c[2] + s * 3.0 * c[3]);
  }

  bool is_identity() const {
    return c[0] == 0.0 && c[1] == 1.0 && c[2] == 0.0 && c[3] == 0.0;
  }
};

// True when the derivative is strictly positive at every point of an
// even n-point grid over [lo, hi] (endpoints included).
bool strictly_increasing_on(const MonotoneCubic& p, double lo, double hi,
                            int grid_points = 1000);

}  // namespace alignnet
