#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tilefit/dictionary.hpp"

namespace tilefit::detail {

// Exact minimizer of 0.5 * sum_{masked i} (z_i - (D b)_i)^2 + lambda * ||b||_1.
//
// With s_j = sum of w_a b_a over j and its ancestors, the cell values are the
// leaf s and ||b||_1 = sum_j |s_j - s_parent(j)| / w_j (s above the root is 0).
// That is total-variation denoising on the quadtree, solved exactly by one
// bottom-up pass of clamped piecewise-linear derivative messages and one
// top-down pass s_j = clamp(s_parent, lo_j, hi_j). Returns b in tile_index
// order. An empty mask means every cell is observed.
std::vector<double> solve_tree_lasso(const DictionarySpec& dict, std::span<const double> z,
                                     std::span<const std::uint8_t> mask, double lambda);

}  // namespace tilefit::detail
