#include "tilefit/quadtree_grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tilefit/error.hpp"

namespace tilefit {

namespace {

void check_depth(int depth) {
  if (depth < 0 || depth > kMaxDepth) {
    throw ArgumentError("grid depth " + std::to_string(depth) + " outside [0, " +
                        std::to_string(kMaxDepth) + "]");
  }
}

std::uint64_t level_offset(int zoom) noexcept {
  // (4^zoom - 1) / 3
  return ((std::uint64_t{1} << (2 * zoom)) - 1) / 3;
}

// Spread the low 32 bits so that bit i lands on bit 2i.
std::uint64_t spread_bits(std::uint64_t v) noexcept {
  v &= 0xffffffffULL;
  v = (v | (v << 16)) & 0x0000ffff0000ffffULL;
  v = (v | (v << 8)) & 0x00ff00ff00ff00ffULL;
  v = (v | (v << 4)) & 0x0f0f0f0f0f0f0f0fULL;
  v = (v | (v << 2)) & 0x3333333333333333ULL;
  v = (v | (v << 1)) & 0x5555555555555555ULL;
  return v;
}

std::uint64_t overlap_1d(std::uint64_t a0, std::uint64_t a1, std::uint64_t b0,
                         std::uint64_t b1) noexcept {
  const auto lo = std::max(a0, b0);
  const auto hi = std::min(a1, b1);
  return hi >= lo ? hi - lo + 1 : 0;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::string TileId::to_string() const {
  return "T(" + std::to_string(zoom) + "," + std::to_string(col) + "," + std::to_string(row) + ")";
}

GridSpec::GridSpec(int depth, Bounds bounds) : depth_(depth), bounds_(bounds) {
  check_depth(depth);
  if (!(bounds.x_min < bounds.x_max) || !(bounds.y_min < bounds.y_max) ||
      !std::isfinite(bounds.x_min) || !std::isfinite(bounds.x_max) ||
      !std::isfinite(bounds.y_min) || !std::isfinite(bounds.y_max)) {
    throw ArgumentError("grid bounds must satisfy x_min < x_max and y_min < y_max");
  }
}

GridSpec GridSpec::covering(const std::vector<Point>& points, int depth) {
  if (points.empty()) throw EmptyDataError("cannot size a grid from zero points");
  Bounds b{points[0].x, points[0].x, points[0].y, points[0].y};
  for (const auto& p : points) {
    b.x_min = std::min(b.x_min, p.x);
    b.x_max = std::max(b.x_max, p.x);
    b.y_min = std::min(b.y_min, p.y);
    b.y_max = std::max(b.y_max, p.y);
  }
  double side = std::max(b.x_max - b.x_min, b.y_max - b.y_min);
  if (!(side > 0.0)) side = 1.0;
  b.x_max = b.x_min + side;
  b.y_max = b.y_min + side;
  return GridSpec(depth, b);
}

std::size_t GridSpec::cell_index(std::uint32_t col, std::uint32_t row) const {
  if (col >= side() || row >= side()) {
    throw ArgumentError("cell (" + std::to_string(col) + "," + std::to_string(row) +
                        ") outside a grid of side " + std::to_string(side()));
  }
  return std::size_t{row} * side() + col;
}

std::optional<std::size_t> GridSpec::locate(double x, double y) const {
  if (!(x >= bounds_.x_min && x <= bounds_.x_max && y >= bounds_.y_min && y <= bounds_.y_max)) {
    return std::nullopt;
  }
  const double n = side();
  const auto axis = [n](double v, double lo, double hi) {
    const double f = std::floor((v - lo) / (hi - lo) * n);
    return static_cast<std::uint32_t>(std::clamp(f, 0.0, n - 1.0));
  };
  return std::size_t{axis(y, bounds_.y_min, bounds_.y_max)} * side() +
         axis(x, bounds_.x_min, bounds_.x_max);
}

Box GridSpec::tile_box(const TileId& t) const {
  if (!is_valid_tile(t, depth_)) throw ArgumentError("invalid tile " + t.to_string());
  const double tiles = std::ldexp(1.0, t.zoom);
  const double w = (bounds_.x_max - bounds_.x_min) / tiles;
  const double h = (bounds_.y_max - bounds_.y_min) / tiles;
  return {bounds_.x_min + w * t.col, bounds_.x_min + w * (t.col + 1), bounds_.y_min + h * t.row,
          bounds_.y_min + h * (t.row + 1)};
}

bool is_valid_tile(const TileId& t, int depth) noexcept {
  if (t.zoom < 0 || t.zoom > depth || t.zoom > 31) return false;
  const std::uint64_t n = std::uint64_t{1} << t.zoom;
  return t.col < n && t.row < n;
}

TileId tile_of(std::uint32_t col, std::uint32_t row, int zoom, int depth) {
  check_depth(depth);
  if (zoom < 0 || zoom > depth) throw ArgumentError("zoom outside [0, depth]");
  const std::uint32_t side = std::uint32_t{1} << depth;
  if (col >= side || row >= side) throw ArgumentError("cell outside the grid");
  const int shift = depth - zoom;
  return {zoom, col >> shift, row >> shift};
}

std::vector<TileId> ancestors(std::uint32_t col, std::uint32_t row, int depth) {
  check_depth(depth);
  const std::uint32_t side = std::uint32_t{1} << depth;
  if (col >= side || row >= side) throw ArgumentError("cell outside the grid");
  std::vector<TileId> out;
  out.reserve(depth + 1);
  for (int z = 0; z <= depth; ++z) out.push_back({z, col >> (depth - z), row >> (depth - z)});
  return out;
}

bool tile_contains(const TileId& outer, const TileId& inner) noexcept {
  if (outer.zoom > inner.zoom) return false;
  const int shift = inner.zoom - outer.zoom;
  return (inner.col >> shift) == outer.col && (inner.row >> shift) == outer.row;
}

TileRelation tile_relation(const TileId& a, const TileId& b) noexcept {
  if (a == b) return TileRelation::Equal;
  if (tile_contains(a, b)) return TileRelation::AContainsB;
  if (tile_contains(b, a)) return TileRelation::BContainsA;
  return TileRelation::Disjoint;
}

std::uint64_t tile_cell_count(const TileId& t, int depth) {
  if (t.zoom < 0 || t.zoom > depth) throw ArgumentError("tile zoom exceeds grid depth");
  return std::uint64_t{1} << (2 * (depth - t.zoom));
}

std::uint64_t dictionary_size(int depth) {
  if (depth < 0 || depth > 30) throw ArgumentError("depth outside [0, 30]");
  return level_offset(depth + 1);
}

std::uint64_t rect_cell_overlap(const TileId& t, const CellRect& rect, int depth) {
  if (!is_valid_tile(t, depth)) throw ArgumentError("invalid tile " + t.to_string());
  const int shift = depth - t.zoom;
  const std::uint64_t c0 = std::uint64_t{t.col} << shift;
  const std::uint64_t r0 = std::uint64_t{t.row} << shift;
  const std::uint64_t span = std::uint64_t{1} << shift;
  return overlap_1d(c0, c0 + span - 1, rect.col_min, rect.col_max) *
         overlap_1d(r0, r0 + span - 1, rect.row_min, rect.row_max);
}

std::uint64_t tile_index(const TileId& t) noexcept {
  return level_offset(t.zoom) + (std::uint64_t{t.row} << t.zoom) + t.col;
}

TileId tile_at(std::uint64_t index) {
  int zoom = 0;
  while (level_offset(zoom + 1) <= index) {
    ++zoom;
    if (zoom > 30) throw ArgumentError("tile index too large");
  }
  const std::uint64_t local = index - level_offset(zoom);
  return {zoom, static_cast<std::uint32_t>(local & ((std::uint64_t{1} << zoom) - 1)),
          static_cast<std::uint32_t>(local >> zoom)};
}

std::uint64_t morton_start(const TileId& t, int depth) noexcept {
  const int shift = depth - t.zoom;
  return (spread_bits(t.col) | (spread_bits(t.row) << 1)) << (2 * shift);
}

GridDensity::GridDensity(GridSpec s, std::vector<double> v) : spec(s), values(std::move(v)) {
  if (values.size() != spec.cell_count()) {
    throw ArgumentError("grid density has " + std::to_string(values.size()) +
                        " values, expected " + std::to_string(spec.cell_count()));
  }
}

double GridDensity::total() const noexcept {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

EmbedResult embed_points(const std::vector<Point>& points, const GridSpec& spec) {
  EmbedResult out{GridDensity(spec)};
  for (const auto& p : points) {
    if (auto cell = spec.locate(p.x, p.y)) {
      out.histogram.values[*cell] += 1.0;
      ++out.retained;
    } else {
      ++out.dropped;
    }
  }
  if (out.retained == 0) {
    throw EmptyDataError("no points fall inside the grid bounds (" +
                         std::to_string(out.dropped) + " dropped)");
  }
  const double inv = 1.0 / static_cast<double>(out.retained);
  for (auto& v : out.histogram.values) v *= inv;
  return out;
}

std::vector<Point> read_points_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw ParseError("points CSV: missing header line");

  const auto find = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      std::string h = header[i];
      std::transform(h.begin(), h.end(), h.begin(), [](unsigned char c) { return std::tolower(c); });
      if (h == name) return i;
    }
    return std::nullopt;
  };
  auto xi = find("x");
  auto yi = find("y");
  if (!xi || !yi) {
    xi = find("lon");
    yi = find("lat");
  }
  if (!xi || !yi) {
    throw ParseError("points CSV line " + std::to_string(line_no) +
                     ": header must name columns x,y or lon,lat");
  }

  std::vector<Point> points;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError("points CSV line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    const auto x = parse_double(fields[*xi]);
    const auto y = parse_double(fields[*yi]);
    if (!x || !y) {
      throw ParseError("points CSV line " + std::to_string(line_no) + ": non-numeric coordinate");
    }
    points.push_back({*x, *y});
  }
  return points;
}

std::vector<Point> read_points_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open points file " + path);
  return read_points_csv(in);
}

}  // namespace tilefit
