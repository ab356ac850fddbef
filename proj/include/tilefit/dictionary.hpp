#pragma once

#include <map>
#include <span>
#include <vector>

#include "tilefit/quadtree_grid.hpp"

namespace tilefit {

using CoefficientMap = std::map<TileId, double>;

// The weighted tile-membership operator: column j is the indicator of tile j
// scaled by |tile j|^(-alpha). It is never stored; every routine below works
// from the tile hierarchy.
struct DictionarySpec {
  int depth = 0;
  double alpha = 0.0;

  DictionarySpec(int depth, double alpha);

  std::size_t rows() const noexcept { return std::size_t{1} << (2 * depth); }
  std::size_t columns() const { return dictionary_size(depth); }

  // Column weight for every tile at `zoom`.
  double level_weight(int zoom) const;
};

double column_weight(const TileId& t, double alpha, int depth);

// Squared Euclidean norm of a column: |tile|^(1 - 2 alpha).
double column_sq_norm(const TileId& t, double alpha, int depth);

// Grid values of D b.
std::vector<double> matvec(const CoefficientMap& b, double alpha, int depth);

// Same, for a dense coefficient vector in tile_index order.
std::vector<double> matvec_dense(std::span<const double> b, const DictionarySpec& dict);

// Sum of cell values over every tile, in tile_index order. O(|tiles|).
std::vector<double> tile_sums(std::span<const double> cells, int depth);

// <D_j, r> for every tile j, in tile_index order.
std::vector<double> transpose_matvec(std::span<const double> r, double alpha, int depth);

}  // namespace tilefit
