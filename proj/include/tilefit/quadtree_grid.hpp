#pragma once

#include <compare>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace tilefit {

// Deepest grid supported by the dense grid routines (4^15 cells).
inline constexpr int kMaxDepth = 15;

// A quadtree tile: at zoom `zoom` the 2^k x 2^k grid is split into
// 2^zoom x 2^zoom equal square blocks; (col, row) picks one of them.
struct TileId {
  int zoom = 0;
  std::uint32_t col = 0;
  std::uint32_t row = 0;

  // Canonical order: by zoom, then row, then column.
  friend constexpr std::strong_ordering operator<=>(const TileId& a, const TileId& b) {
    if (auto c = a.zoom <=> b.zoom; c != 0) return c;
    if (auto c = a.row <=> b.row; c != 0) return c;
    return a.col <=> b.col;
  }
  friend constexpr bool operator==(const TileId&, const TileId&) = default;

  std::string to_string() const;
};

inline constexpr TileId kRootTile{0, 0, 0};

enum class TileRelation { Equal, AContainsB, BContainsA, Disjoint };

// Inclusive range of cells: columns [col_min, col_max], rows [row_min, row_max].
struct CellRect {
  std::uint32_t col_min = 0;
  std::uint32_t col_max = 0;
  std::uint32_t row_min = 0;
  std::uint32_t row_max = 0;
};

struct Bounds {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Axis-aligned rectangle in data units.
struct Box {
  double x0, x1, y0, y1;
};

// A 2^k x 2^k lattice laid over a bounding box. Cell i is at column
// i mod 2^k and row i / 2^k; row 0 sits at y_min, column 0 at x_min.
class GridSpec {
 public:
  GridSpec(int depth, Bounds bounds);

  // Smallest square box covering the points' bounding box, padded on the max side.
  static GridSpec covering(const std::vector<Point>& points, int depth);

  int depth() const noexcept { return depth_; }
  const Bounds& bounds() const noexcept { return bounds_; }
  std::uint32_t side() const noexcept { return std::uint32_t{1} << depth_; }
  std::size_t cell_count() const noexcept { return std::size_t{1} << (2 * depth_); }

  std::size_t cell_index(std::uint32_t col, std::uint32_t row) const;

  // Cell containing (x, y). Cells are half-open except the last one on each
  // axis, which also owns the max edge. Points outside the box give nullopt.
  std::optional<std::size_t> locate(double x, double y) const;

  // Tile footprint in data units.
  Box tile_box(const TileId& t) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  int depth_;
  Bounds bounds_;
};

bool is_valid_tile(const TileId& t, int depth) noexcept;

TileId tile_of(std::uint32_t col, std::uint32_t row, int zoom, int depth);

// The depth+1 tiles containing the cell, ordered root first.
std::vector<TileId> ancestors(std::uint32_t col, std::uint32_t row, int depth);

TileRelation tile_relation(const TileId& a, const TileId& b) noexcept;

// True when `outer` contains or equals `inner`.
bool tile_contains(const TileId& outer, const TileId& inner) noexcept;

std::uint64_t tile_cell_count(const TileId& t, int depth);

std::uint64_t dictionary_size(int depth);

// Number of cells shared by the tile and the rectangle.
std::uint64_t rect_cell_overlap(const TileId& t, const CellRect& rect, int depth);

// Dense position of a tile in the canonical (zoom, row, col) order.
std::uint64_t tile_index(const TileId& t) noexcept;
TileId tile_at(std::uint64_t index);

// Start of the tile's cell block along the depth-k Z-order curve. Sorting
// by (morton_start, zoom) lists every tile before its descendants.
std::uint64_t morton_start(const TileId& t, int depth) noexcept;

// Dense non-negative mass per cell, in cell-index order.
struct GridDensity {
  GridSpec spec;
  std::vector<double> values;

  explicit GridDensity(GridSpec s) : spec(s), values(s.cell_count(), 0.0) {}
  GridDensity(GridSpec s, std::vector<double> v);

  double total() const noexcept;
};

struct EmbedResult {
  GridDensity histogram;
  std::size_t retained = 0;
  std::size_t dropped = 0;
};

// Normalized histogram of the points over the grid. Throws EmptyDataError
// when no point lands inside the box.
EmbedResult embed_points(const std::vector<Point>& points, const GridSpec& spec);

// CSV with a header naming `x,y` or `lon,lat`. Bad rows raise ParseError
// naming the line.
std::vector<Point> read_points_csv(std::istream& in);
std::vector<Point> read_points_csv_file(const std::string& path);

}  // namespace tilefit
