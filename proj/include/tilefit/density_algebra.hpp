#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tilefit/sparse_density.hpp"

namespace tilefit {

// Work counters for the query routines.
struct QueryStats {
  std::size_t lookups = 0;      // coefficient lookups
  std::size_t tile_visits = 0;  // tiles touched while walking a support
};

// Value of one cell: at most depth+1 coefficient lookups.
double eval_point(const SparseDensity& d, std::uint32_t col, std::uint32_t row,
                  QueryStats* stats = nullptr);

// Mass inside an inclusive cell rectangle, one visit per stored tile.
double region_sum(const SparseDensity& d, const CellRect& rect, QueryStats* stats = nullptr);

struct WeightedDensity {
  const SparseDensity* density;
  double prior;
};

// Weighted sum of the coefficient vectors (a mixture with the given priors),
// then thresholded at delta and renormalized. delta = 0 skips thresholding.
SparseDensity density_union(std::span<const WeightedDensity> entries, double delta = 0.001);

// Normalized pointwise product. The product is re-expressed on the joint
// support plus the root; its coefficients may be negative even though every
// cell value is not. delta = 0 skips thresholding.
SparseDensity intersect(const SparseDensity& a, const SparseDensity& b, double delta = 0.001,
                        QueryStats* stats = nullptr);

// Distinct cell values, ascending, computed from the support alone.
std::vector<double> unique_values(const SparseDensity& d);

// Smallest cell value, from the support alone.
double min_value(const SparseDensity& d);

// Half the l1 distance between two grids.
double tv_distance(const SparseDensity& d, const GridDensity& p);
double tv_distance(const GridDensity& x, const GridDensity& p);

// Shared by union and intersection: drops |c| <= delta * sum|c|, restores
// dropped tiles wherever that would push a cell value below zero, and
// normalizes by the coefficient sum.
CoefficientMap threshold_derived(const CoefficientMap& c, double delta, int depth);

}  // namespace tilefit
