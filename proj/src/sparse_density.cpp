#include "tilefit/sparse_density.hpp"

#include <cmath>

#include "tilefit/error.hpp"

namespace tilefit {

SparseDensity::SparseDensity(GridSpec spec, CoefficientMap coeffs,
                             std::optional<FitMetadata> metadata)
    : spec_(spec), metadata_(metadata) {
  for (const auto& [t, w] : coeffs) {
    if (!is_valid_tile(t, spec_.depth())) {
      throw ArgumentError("tile " + t.to_string() + " is not valid at depth " +
                          std::to_string(spec_.depth()));
    }
    if (!std::isfinite(w)) throw ArgumentError("non-finite weight on tile " + t.to_string());
    if (w == 0.0) continue;
    coeffs_.emplace(t, w);
    index_.emplace(tile_index(t), w);
  }
}

double SparseDensity::weight(const TileId& t) const {
  const auto it = index_.find(tile_index(t));
  return it == index_.end() ? 0.0 : it->second;
}

double SparseDensity::weight_sum() const noexcept {
  double s = 0.0;
  for (const auto& [t, w] : coeffs_) s += w;
  return s;
}

std::vector<double> SparseDensity::to_grid() const { return matvec(coeffs_, 1.0, depth()); }

}  // namespace tilefit
