#include "tilefit/dictionary.hpp"

#include <cmath>

#include "tilefit/error.hpp"

namespace tilefit {

namespace {

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must lie in [0, 1]");
}

}  // namespace

DictionarySpec::DictionarySpec(int d, double a) : depth(d), alpha(a) {
  check_alpha(a);
  if (d < 0 || d > kMaxDepth) throw ArgumentError("dictionary depth out of range");
}

double DictionarySpec::level_weight(int zoom) const {
  return std::pow(4.0, -alpha * static_cast<double>(depth - zoom));
}

double column_weight(const TileId& t, double alpha, int depth) {
  check_alpha(alpha);
  if (!is_valid_tile(t, depth)) throw ArgumentError("invalid tile " + t.to_string());
  return std::pow(4.0, -alpha * static_cast<double>(depth - t.zoom));
}

double column_sq_norm(const TileId& t, double alpha, int depth) {
  const double w = column_weight(t, alpha, depth);
  return w * w * static_cast<double>(tile_cell_count(t, depth));
}

std::vector<double> matvec_dense(std::span<const double> b, const DictionarySpec& dict) {
  const int depth = dict.depth;
  if (b.size() != dict.columns()) throw ArgumentError("coefficient vector has the wrong length");
  // acc holds the running sum of weighted ancestors for the current level.
  std::vector<double> acc{b[0] * dict.level_weight(0)};
  std::size_t offset = 1;
  for (int z = 1; z <= depth; ++z) {
    const std::uint32_t side = std::uint32_t{1} << z;
    const double w = dict.level_weight(z);
    std::vector<double> next(std::size_t{side} * side);
    for (std::uint32_t r = 0; r < side; ++r) {
      for (std::uint32_t c = 0; c < side; ++c) {
        const std::size_t i = std::size_t{r} * side + c;
        next[i] = acc[std::size_t{r >> 1} * (side >> 1) + (c >> 1)] + b[offset + i] * w;
      }
    }
    offset += next.size();
    acc = std::move(next);
  }
  return acc;
}

std::vector<double> matvec(const CoefficientMap& b, double alpha, int depth) {
  DictionarySpec dict(depth, alpha);
  std::vector<double> dense(dict.columns(), 0.0);
  for (const auto& [t, v] : b) {
    if (!is_valid_tile(t, depth)) throw ArgumentError("invalid tile " + t.to_string());
    dense[tile_index(t)] += v;
  }
  return matvec_dense(dense, dict);
}

std::vector<double> tile_sums(std::span<const double> cells, int depth) {
  const std::size_t n = std::size_t{1} << (2 * depth);
  if (cells.size() != n) throw ArgumentError("grid vector has the wrong length");
  std::vector<double> sums(dictionary_size(depth));
  std::size_t offset = sums.size() - n;
  std::copy(cells.begin(), cells.end(), sums.begin() + static_cast<std::ptrdiff_t>(offset));
  for (int z = depth - 1; z >= 0; --z) {
    const std::uint32_t side = std::uint32_t{1} << z;
    const std::size_t child_offset = offset;
    offset -= std::size_t{side} * side;
    for (std::uint32_t r = 0; r < side; ++r) {
      for (std::uint32_t c = 0; c < side; ++c) {
        const std::size_t top = child_offset + std::size_t{2 * r} * (2 * side) + 2 * c;
        const std::size_t bottom = top + 2 * side;
        sums[offset + std::size_t{r} * side + c] =
            sums[top] + sums[top + 1] + sums[bottom] + sums[bottom + 1];
      }
    }
  }
  return sums;
}

std::vector<double> transpose_matvec(std::span<const double> r, double alpha, int depth) {
  DictionarySpec dict(depth, alpha);
  auto sums = tile_sums(r, depth);
  std::size_t offset = 0;
  for (int z = 0; z <= depth; ++z) {
    const std::size_t count = std::size_t{1} << (2 * z);
    const double w = dict.level_weight(z);
    for (std::size_t i = 0; i < count; ++i) sums[offset + i] *= w;
    offset += count;
  }
  return sums;
}

}  // namespace tilefit
