#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tilefit/dictionary.hpp"

namespace tilefit::detail {

// Residual bookkeeping for least squares on the tile dictionary, restricted to
// a subset of cells (the training mask). For tile j with m_j masked cells,
//
//   sum_{i in j, masked} r_i = Z_j - m_j * A_j - E_j
//
// where Z_j is the masked sum of z, A_j the weighted coefficient sum over j
// and its ancestors, and E_j the sum of b_l w_l m_l over strict descendants l.
// Only E is stored, so a coordinate update or a correlation costs O(depth).
class TileSolver {
 public:
  // An empty mask means every cell is used.
  TileSolver(const DictionarySpec& dict, std::span<const double> z,
             std::span<const std::uint8_t> mask = {});

  std::size_t size() const noexcept { return b_.size(); }
  const DictionarySpec& dict() const noexcept { return dict_; }

  double weight(std::size_t j) const noexcept { return level_weight_[level_[j]]; }
  double sq_norm(std::size_t j) const noexcept { return sq_norm_[j]; }
  double coefficient(std::size_t j) const noexcept { return b_[j]; }
  const std::vector<double>& coefficients() const noexcept { return b_; }

  // <D_j, r> over the masked cells.
  double correlation(std::size_t j) const noexcept;

  void set_coefficient(std::size_t j, double value) noexcept;

  // Rebuilds the descendant sums from the coefficients, clearing drift.
  void refresh();

  // <D_j, r> for every tile, exact, O(|tiles|).
  std::vector<double> all_correlations() const;

  // 0.5 * ||r||^2 over the masked cells.
  double half_rss() const;

 private:
  DictionarySpec dict_;
  std::vector<double> level_weight_;
  std::vector<std::uint8_t> level_;
  std::vector<std::uint32_t> parent_;
  std::vector<double> count_;
  std::vector<double> z_sum_;
  std::vector<double> sq_norm_;
  std::vector<double> b_;
  std::vector<double> desc_;
  std::vector<double> z_;
  std::vector<std::uint8_t> mask_;
};

}  // namespace tilefit::detail
