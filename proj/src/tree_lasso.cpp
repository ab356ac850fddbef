#include "tree_lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tilefit/error.hpp"

namespace tilefit::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Slope change of a continuous, nondecreasing, piecewise-linear function.
// Slopes are integer counts of unclamped leaves, so sums stay exact.
struct Knot {
  double x;
  double dslope;
};

// Messages for one zoom level: node n owns knots[offset[n], offset[n + 1])
// and equals left[n] to the left of its first knot.
struct Level {
  std::vector<Knot> knots;
  std::vector<std::size_t> offset;
  std::vector<double> left;
};

struct Crossing {
  double lo_at;  // inf{s : M(s) >= -mu}
  double hi_at;  // sup{s : M(s) <= mu}
};

// Clamps the message M to [-mu, mu]. Appends the clamped knots to `out` when
// given and returns where M crosses the two levels.
Crossing clamp_message(double left, std::span<const Knot> knots, double mu,
                       std::vector<Knot>* out, double* new_left) {
  const std::size_t n = knots.size();
  // Values at each knot and slopes just after it.
  thread_local std::vector<double> value, slope;
  value.resize(n);
  slope.resize(n);
  double v = left, s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) v += s * (knots[i].x - knots[i - 1].x);
    value[i] = v;
    s += knots[i].dslope;
    slope[i] = s;
  }
  const double right = n ? value[n - 1] : left;

  Crossing c{-kInf, kInf};
  std::size_t first = 0, last = n;  // kept original knots [first, last)
  if (left < -mu) {
    std::size_t i = 1;
    while (i < n && value[i] < -mu) ++i;
    if (i >= n) throw SolverError("tree lasso message never reaches its lower clamp", mu);
    c.lo_at = std::clamp(knots[i - 1].x + (-mu - value[i - 1]) / slope[i - 1], knots[i - 1].x,
                         knots[i].x);
    first = i;
  }
  if (right > mu) {
    std::size_t j = 0;
    while (j < n && value[j] <= mu) ++j;
    if (j == 0 || j >= n) throw SolverError("tree lasso message never reaches its upper clamp", mu);
    c.hi_at = std::clamp(knots[j - 1].x + (mu - value[j - 1]) / slope[j - 1], knots[j - 1].x,
                         knots[j].x);
    last = j;
  }
  if (out) {
    *new_left = std::max(left, -mu);
    if (left < -mu) out->push_back({c.lo_at, slope[first - 1]});
    for (std::size_t i = first; i < last; ++i) out->push_back(knots[i]);
    if (right > mu) out->push_back({c.hi_at, -slope[last - 1]});
  }
  return c;
}

}  // namespace

std::vector<double> solve_tree_lasso(const DictionarySpec& dict, std::span<const double> z,
                                     std::span<const std::uint8_t> mask, double lambda) {
  const int depth = dict.depth;
  const std::size_t n = dict.rows();
  if (z.size() != n) throw ArgumentError("target vector has the wrong length");
  if (!mask.empty() && mask.size() != n) throw ArgumentError("cell mask has the wrong length");
  if (!(lambda > 0.0)) throw ArgumentError("lambda must be positive");

  std::vector<double> mu(depth + 1);
  for (int zoom = 0; zoom <= depth; ++zoom) mu[zoom] = lambda / dict.level_weight(zoom);

  std::vector<double> lo(dict.columns()), hi(dict.columns());
  std::size_t base = dict.columns() - n;  // tile_index of the first leaf

  // Leaves: M(s) = s - z_i, clamped at z_i -/+ mu; unobserved cells pass M = 0.
  Level cur;
  cur.offset.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.empty() || mask[i]) {
      const double m = mu[depth];
      cur.knots.push_back({z[i] - m, 1.0});
      cur.knots.push_back({z[i] + m, -1.0});
      cur.left.push_back(-m);
      lo[base + i] = z[i] - m;
      hi[base + i] = z[i] + m;
    } else {
      cur.left.push_back(0.0);
      lo[base + i] = -kInf;
      hi[base + i] = kInf;
    }
    cur.offset.push_back(cur.knots.size());
  }

  std::vector<Knot> merged, tmp_a, tmp_b;
  const auto by_x = [](const Knot& p, const Knot& q) { return p.x < q.x; };
  for (int zoom = depth - 1; zoom >= 0; --zoom) {
    const std::uint32_t side = std::uint32_t{1} << zoom;
    const std::uint32_t child_side = side << 1;
    base -= std::size_t{side} * side;
    Level next;
    next.offset.push_back(0);
    for (std::uint32_t r = 0; r < side; ++r) {
      for (std::uint32_t c = 0; c < side; ++c) {
        const std::size_t c00 = std::size_t{2 * r} * child_side + 2 * c;
        const std::size_t kids[4] = {c00, c00 + 1, c00 + child_side, c00 + child_side + 1};
        const auto range = [&](std::size_t k) {
          return std::span<const Knot>(cur.knots.data() + cur.offset[k],
                                       cur.offset[k + 1] - cur.offset[k]);
        };
        tmp_a.clear();
        tmp_b.clear();
        merged.clear();
        auto r0 = range(kids[0]), r1 = range(kids[1]), r2 = range(kids[2]), r3 = range(kids[3]);
        std::merge(r0.begin(), r0.end(), r1.begin(), r1.end(), std::back_inserter(tmp_a), by_x);
        std::merge(r2.begin(), r2.end(), r3.begin(), r3.end(), std::back_inserter(tmp_b), by_x);
        std::merge(tmp_a.begin(), tmp_a.end(), tmp_b.begin(), tmp_b.end(),
                   std::back_inserter(merged), by_x);
        const double left = cur.left[kids[0]] + cur.left[kids[1]] + cur.left[kids[2]] +
                            cur.left[kids[3]];
        const std::size_t idx = base + std::size_t{r} * side + c;
        double new_left = 0.0;
        const auto cross = clamp_message(left, merged, mu[zoom], zoom > 0 ? &next.knots : nullptr,
                                         &new_left);
        lo[idx] = cross.lo_at;
        hi[idx] = cross.hi_at;
        next.left.push_back(new_left);
        next.offset.push_back(next.knots.size());
      }
    }
    cur = std::move(next);
  }

  // Top-down: each tile's level sits as close to its parent's as its subtree allows.
  std::vector<double> level(dict.columns());
  std::vector<double> b(dict.columns(), 0.0);
  std::size_t offset = 0;
  for (int zoom = 0; zoom <= depth; ++zoom) {
    const std::uint32_t side = std::uint32_t{1} << zoom;
    const double w = dict.level_weight(zoom);
    const std::size_t parent_offset = zoom == 0 ? 0 : offset - (std::size_t{side} * side) / 4;
    for (std::uint32_t r = 0; r < side; ++r) {
      for (std::uint32_t c = 0; c < side; ++c) {
        const std::size_t idx = offset + std::size_t{r} * side + c;
        const double sp =
            zoom == 0 ? 0.0 : level[parent_offset + std::size_t{r >> 1} * (side >> 1) + (c >> 1)];
        const double s = std::clamp(sp, lo[idx], hi[idx]);
        level[idx] = s;
        if (s != sp) b[idx] = (s - sp) / w;
      }
    }
    offset += std::size_t{side} * side;
  }
  return b;
}

}  // namespace tilefit::detail
