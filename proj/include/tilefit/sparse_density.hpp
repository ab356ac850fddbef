#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>

#include "tilefit/dictionary.hpp"
#include "tilefit/quadtree_grid.hpp"

namespace tilefit {

struct FitMetadata {
  double alpha = 0.5;
  double delta = 0.001;
  double lambda_star = 0.0;

  friend bool operator==(const FitMetadata&, const FitMetadata&) = default;
};

// A density over a grid stored as tile weights: the value of cell i is the
// sum of weight / |tile| over the stored tiles containing i. Immutable.
class SparseDensity {
 public:
  // Drops exact zeros; rejects invalid tiles and non-finite weights.
  SparseDensity(GridSpec spec, CoefficientMap coeffs,
                std::optional<FitMetadata> metadata = std::nullopt);

  const GridSpec& spec() const noexcept { return spec_; }
  int depth() const noexcept { return spec_.depth(); }
  const CoefficientMap& coeffs() const noexcept { return coeffs_; }
  std::size_t nnz() const noexcept { return coeffs_.size(); }
  const std::optional<FitMetadata>& metadata() const noexcept { return metadata_; }

  // O(1) weight lookup; 0 for tiles outside the support.
  double weight(const TileId& t) const;

  double weight_sum() const noexcept;

  // Dense grid values (O(cells)).
  std::vector<double> to_grid() const;

  friend bool operator==(const SparseDensity& a, const SparseDensity& b) {
    return a.spec_ == b.spec_ && a.coeffs_ == b.coeffs_ && a.metadata_ == b.metadata_;
  }

 private:
  GridSpec spec_;
  CoefficientMap coeffs_;
  std::unordered_map<std::uint64_t, double> index_;
  std::optional<FitMetadata> metadata_;
};

}  // namespace tilefit
