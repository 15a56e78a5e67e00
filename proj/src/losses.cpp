#include "esd_pinn/losses.hpp"

#include <cmath>
#include <string>

namespace esd {

CollocationGrid make_grid(double a, double b, Eigen::Index n) {
  if (n < 2) throw std::invalid_argument("collocation grid needs at least 2 points");
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw std::invalid_argument("collocation span must satisfy a < b");
  CollocationGrid grid;
  grid.times.resize(n);
  const double h = (b - a) / double(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) grid.times(i) = a + double(i) * h;
  grid.times(n - 1) = b;
  return grid;
}

}  // namespace esd
