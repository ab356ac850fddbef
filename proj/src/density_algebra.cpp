#include "tilefit/density_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tilefit/error.hpp"
#include "tilefit/sparse_fit.hpp"

namespace tilefit {

namespace {

// Value a tile weight contributes to each of its cells. Division by a power
// of two is exact, so every routine below agrees bit for bit.
double per_cell(double weight, int zoom, int depth) noexcept {
  return weight / std::ldexp(1.0, 2 * (depth - zoom));
}

std::uint64_t cells_in(int zoom, int depth) noexcept {
  return std::uint64_t{1} << (2 * (depth - zoom));
}

// Support tiles in preorder, each with the position of its nearest stored
// ancestor (-1 for top-level tiles).
struct Forest {
  std::vector<TileId> tiles;
  std::vector<double> weights;
  std::vector<std::ptrdiff_t> parent;
};

void sort_preorder(std::vector<std::pair<TileId, double>>& items, int depth) {
  std::sort(items.begin(), items.end(), [depth](const auto& a, const auto& b) {
    const auto ka = morton_start(a.first, depth);
    const auto kb = morton_start(b.first, depth);
    return ka != kb ? ka < kb : a.first.zoom < b.first.zoom;
  });
}

std::vector<std::ptrdiff_t> link_parents(const std::vector<TileId>& preorder) {
  std::vector<std::ptrdiff_t> parent(preorder.size(), -1);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < preorder.size(); ++i) {
    while (!stack.empty() && !tile_contains(preorder[stack.back()], preorder[i])) stack.pop_back();
    if (!stack.empty()) parent[i] = static_cast<std::ptrdiff_t>(stack.back());
    stack.push_back(i);
  }
  return parent;
}

Forest build_forest(const CoefficientMap& coeffs, int depth) {
  std::vector<std::pair<TileId, double>> items(coeffs.begin(), coeffs.end());
  sort_preorder(items, depth);
  Forest f;
  for (const auto& [t, w] : items) {
    f.tiles.push_back(t);
    f.weights.push_back(w);
  }
  f.parent = link_parents(f.tiles);
  return f;
}

// One region per stored tile (its cells not covered by stored descendants),
// plus the cells outside every stored tile. Only non-empty regions are kept.
struct Region {
  double value;
  std::ptrdiff_t owner;  // forest position, -1 for the uncovered remainder
};

std::vector<Region> regions(const Forest& f, int depth) {
  const std::size_t s = f.tiles.size();
  std::vector<double> value(s);
  std::vector<std::uint64_t> covered(s, 0);
  std::uint64_t top_cover = 0;
  for (std::size_t i = 0; i < s; ++i) {
    const auto p = f.parent[i];
    const double own = per_cell(f.weights[i], f.tiles[i].zoom, depth);
    value[i] = p < 0 ? own : value[p] + own;
    const auto size = cells_in(f.tiles[i].zoom, depth);
    if (p < 0) {
      top_cover += size;
    } else {
      covered[p] += size;
    }
  }
  std::vector<Region> out;
  if (top_cover < cells_in(0, depth)) out.push_back({0.0, -1});
  for (std::size_t i = 0; i < s; ++i) {
    if (covered[i] < cells_in(f.tiles[i].zoom, depth)) {
      out.push_back({value[i], static_cast<std::ptrdiff_t>(i)});
    }
  }
  return out;
}

void require_same_grid(const GridSpec& a, const GridSpec& b) {
  if (!(a == b)) throw ArgumentError("densities are defined on different grids");
}

}  // namespace

double eval_point(const SparseDensity& d, std::uint32_t col, std::uint32_t row,
                  QueryStats* stats) {
  const int depth = d.depth();
  const std::uint32_t side = d.spec().side();
  if (col >= side || row >= side) throw ArgumentError("cell outside the grid");
  double acc = 0.0;
  for (int z = 0; z <= depth; ++z) {
    const TileId t{z, col >> (depth - z), row >> (depth - z)};
    const double w = d.weight(t);
    if (stats) ++stats->lookups;
    if (w != 0.0) acc += per_cell(w, z, depth);
  }
  return acc;
}

double region_sum(const SparseDensity& d, const CellRect& rect, QueryStats* stats) {
  const std::uint32_t side = d.spec().side();
  if (rect.col_min > rect.col_max || rect.row_min > rect.row_max || rect.col_max >= side ||
      rect.row_max >= side) {
    throw ArgumentError("cell rectangle outside the grid");
  }
  const int depth = d.depth();
  double acc = 0.0;
  for (const auto& [t, w] : d.coeffs()) {
    if (stats) ++stats->tile_visits;
    const auto overlap = rect_cell_overlap(t, rect, depth);
    if (overlap) acc += per_cell(w, t.zoom, depth) * static_cast<double>(overlap);
  }
  return acc;
}

std::vector<double> unique_values(const SparseDensity& d) {
  std::vector<double> out;
  for (const auto& r : regions(build_forest(d.coeffs(), d.depth()), d.depth())) {
    out.push_back(r.value);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double min_value(const SparseDensity& d) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& r : regions(build_forest(d.coeffs(), d.depth()), d.depth())) {
    m = std::min(m, r.value);
  }
  return m;
}

CoefficientMap threshold_derived(const CoefficientMap& c, double delta, int depth) {
  if (!(delta >= 0.0 && delta < 1.0)) throw ArgumentError("delta must lie in [0, 1)");
  double l1 = 0.0;
  for (const auto& [t, v] : c) l1 += std::abs(v);
  const double cut = delta * l1;
  CoefficientMap kept, dropped;
  for (const auto& [t, v] : c) {
    if (v == 0.0) continue;
    (std::abs(v) > cut ? kept : dropped).emplace(t, v);
  }

  // Dropping a tile shifts every cell under it; put back whatever is nested
  // with a region that went negative. Each round restores at least one tile.
  while (!dropped.empty()) {
    const auto forest = build_forest(kept, depth);
    const auto regs = regions(forest, depth);
    double scale = 0.0;
    for (const auto& r : regs) scale = std::max(scale, std::abs(r.value));
    std::vector<TileId> negative;
    for (const auto& r : regs) {
      if (r.owner >= 0 && r.value < -1e-14 * scale) negative.push_back(forest.tiles[r.owner]);
    }
    if (negative.empty()) break;
    for (auto it = dropped.begin(); it != dropped.end();) {
      const bool related = std::any_of(negative.begin(), negative.end(), [&](const TileId& t) {
        return tile_contains(t, it->first) || tile_contains(it->first, t);
      });
      if (related) {
        kept.insert(*it);
        it = dropped.erase(it);
      } else {
        ++it;
      }
    }
  }
  return normalize(kept);
}

SparseDensity density_union(std::span<const WeightedDensity> entries, double delta) {
  if (entries.empty()) throw ArgumentError("union needs at least one density");
  const GridSpec& spec = entries.front().density->spec();
  double prior_sum = 0.0;
  for (const auto& e : entries) {
    require_same_grid(spec, e.density->spec());
    if (!(e.prior >= 0.0)) throw ArgumentError("union priors must be non-negative");
    prior_sum += e.prior;
  }
  if (std::abs(prior_sum - 1.0) > 1e-9) throw ArgumentError("union priors must sum to 1");

  CoefficientMap merged;
  for (const auto& e : entries) {
    for (const auto& [t, w] : e.density->coeffs()) merged[t] += e.prior * w;
  }
  // Metadata survives only when every input agrees on it.
  auto meta = entries.front().density->metadata();
  for (const auto& e : entries) {
    if (e.density->metadata() != meta) meta.reset();
  }
  return SparseDensity(spec, threshold_derived(merged, delta, spec.depth()), meta);
}

SparseDensity intersect(const SparseDensity& a, const SparseDensity& b, double delta,
                        QueryStats* stats) {
  require_same_grid(a.spec(), b.spec());
  const int depth = a.depth();

  // Joint support plus the root, merged from the two canonical-order maps.
  std::vector<std::pair<TileId, std::pair<double, double>>> joint;
  joint.reserve(a.nnz() + b.nnz() + 1);
  auto ia = a.coeffs().begin(), ib = b.coeffs().begin();
  const auto ea = a.coeffs().end(), eb = b.coeffs().end();
  if ((ia == ea || ia->first != kRootTile) && (ib == eb || ib->first != kRootTile)) {
    joint.push_back({kRootTile, {0.0, 0.0}});
  }
  while (ia != ea || ib != eb) {
    if (stats) ++stats->tile_visits;
    if (ib == eb || (ia != ea && ia->first < ib->first)) {
      joint.push_back({ia->first, {ia->second, 0.0}});
      ++ia;
    } else if (ia == ea || ib->first < ia->first) {
      joint.push_back({ib->first, {0.0, ib->second}});
      ++ib;
    } else {
      joint.push_back({ia->first, {ia->second, ib->second}});
      ++ia;
      ++ib;
    }
  }
  std::sort(joint.begin(), joint.end(), [depth](const auto& x, const auto& y) {
    const auto kx = morton_start(x.first, depth);
    const auto ky = morton_start(y.first, depth);
    return kx != ky ? kx < ky : x.first.zoom < y.first.zoom;
  });

  std::vector<TileId> tiles;
  tiles.reserve(joint.size());
  for (const auto& j : joint) tiles.push_back(j.first);
  const auto parent = link_parents(tiles);

  // f_X(t): value of X on t's cells from stored tiles containing t.
  // The product g telescopes down the chain: c_t = |t| (g(t) - g(parent)).
  std::vector<double> fa(joint.size()), fb(joint.size()), g(joint.size());
  CoefficientMap c;
  double total = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    if (stats) ++stats->tile_visits;
    const auto p = parent[i];
    const int zoom = tiles[i].zoom;
    fa[i] = (p < 0 ? 0.0 : fa[p]) + per_cell(joint[i].second.first, zoom, depth);
    fb[i] = (p < 0 ? 0.0 : fb[p]) + per_cell(joint[i].second.second, zoom, depth);
    g[i] = fa[i] * fb[i];
    const double coef = std::ldexp(g[i] - (p < 0 ? 0.0 : g[p]), 2 * (depth - zoom));
    if (coef != 0.0) {
      c.emplace(tiles[i], coef);
      total += coef;
    }
  }
  if (!(total > 0.0)) throw DegenerateDensityError("the densities do not overlap");
  return SparseDensity(a.spec(), threshold_derived(c, delta, depth));
}

double tv_distance(const GridDensity& x, const GridDensity& p) {
  require_same_grid(x.spec, p.spec);
  double s = 0.0;
  for (std::size_t i = 0; i < x.values.size(); ++i) s += std::abs(x.values[i] - p.values[i]);
  return 0.5 * s;
}

double tv_distance(const SparseDensity& d, const GridDensity& p) {
  require_same_grid(d.spec(), p.spec);
  return tv_distance(GridDensity(d.spec(), d.to_grid()), p);
}

}  // namespace tilefit
