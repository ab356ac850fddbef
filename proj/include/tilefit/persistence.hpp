#pragma once

#include <string>
#include <string_view>

#include "tilefit/sparse_density.hpp"

namespace tilefit {

inline constexpr int kFormatVersion = 1;

// Canonical JSON document: fixed key order, one tile per line as
// [zoom, col, row, weight] in (zoom, row, col) order, every real printed with
// 17 significant digits so a load reproduces the weights bit for bit.
std::string save_density(const SparseDensity& d);

// Inverse of save_density. Rejects unknown versions, invalid or duplicate
// tiles, non-canonical order, and densities whose mass is not 1 or whose cell
// values go negative; ParseError names the offending location.
SparseDensity load_density(std::string_view text);

void save_density_file(const SparseDensity& d, const std::string& path);
SparseDensity load_density_file(const std::string& path);

// `col,row,value` for every cell, in cell-index order.
std::string export_grid_csv(const SparseDensity& d);

// GeoJSON FeatureCollection: one polygon per stored tile in data units, with
// the tile's weight and the value it adds to each of its cells.
std::string export_tiles_geojson(const SparseDensity& d);

// Decimal text for a real with 17 significant digits.
std::string format_real(double v);

}  // namespace tilefit
