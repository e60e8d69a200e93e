#include "alignnet/cubic.hpp"

#include "alignnet/common.hpp"

namespace alignnet {

bool strictly_increasing_on(const MonotoneCubic& p, double lo, double hi,
                            int grid_points) {
  if (grid_points < 2) throw NumericError("grid check needs >= 2 points");
  if (!(hi > lo)) throw NumericError("grid check needs hi > lo");
  double step = (hi - lo) / (grid_points - 1);
  for (int i = 0; i < grid_points; ++i) {
    double s = lo + step * i;
    if (!(p.derivative(s) > 0.0)) return false;
  }
  return true;
}

}  // namespace alignnet
