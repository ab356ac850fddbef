#pragma once

#include <optional>

#include "tilefit/quadtree_grid.hpp"

namespace tilefit {

// Kernel standard deviations in cell units.
struct Bandwidth {
  double x = 0.0;
  double y = 0.0;
};

// Unset axes are filled in by `auto_bandwidth`.
struct KdeConfig {
  std::optional<double> bandwidth_x;
  std::optional<double> bandwidth_y;
};

// Separable Gaussian blur of a normalized grid density. The kernel is
// truncated at 4 sigma and its weights are renormalized per target cell over
// the cells inside the grid, so constant inputs stay constant. A bandwidth of
// zero on an axis leaves that axis untouched.
GridDensity gaussian_kde(const GridDensity& y, Bandwidth bw);

// Silverman's rule per axis, 1.06 * spread * count^(-1/5), floored at half a cell.
Bandwidth auto_bandwidth(std::size_t count, double spread_x, double spread_y);

// Mass-weighted standard deviation of column and row indices.
Bandwidth grid_spread(const GridDensity& y);

// Explicit values from `cfg`, Silverman for whatever is unset.
Bandwidth resolve_bandwidth(const KdeConfig& cfg, const GridDensity& y, std::size_t count);

}  // namespace tilefit
