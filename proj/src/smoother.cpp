#include "tilefit/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tilefit/error.hpp"

namespace tilefit {

namespace {

constexpr double kTruncation = 4.0;
constexpr double kMinBandwidth = 0.5;

std::vector<double> kernel_taps(double sigma) {
  if (sigma <= 0.0) return {1.0};
  const auto radius = static_cast<int>(std::ceil(kTruncation * sigma));
  std::vector<double> taps(2 * radius + 1);
  for (int d = -radius; d <= radius; ++d) {
    taps[d + radius] = std::exp(-0.5 * (d * d) / (sigma * sigma));
  }
  return taps;
}

// Blur along one axis; `stride` steps between neighbours, `lines`/`line_stride`
// enumerate the independent 1-D passes.
void blur_axis(std::vector<double>& v, std::uint32_t side, std::size_t stride,
               std::size_t line_stride, double sigma) {
  const auto taps = kernel_taps(sigma);
  const int radius = static_cast<int>(taps.size() / 2);
  if (radius == 0) return;
  std::vector<double> line(side), out(side);
  for (std::uint32_t l = 0; l < side; ++l) {
    const std::size_t base = l * line_stride;
    for (std::uint32_t i = 0; i < side; ++i) line[i] = v[base + i * stride];
    for (int i = 0; i < static_cast<int>(side); ++i) {
      const int lo = std::max(0, i - radius);
      const int hi = std::min(static_cast<int>(side) - 1, i + radius);
      double acc = 0.0, norm = 0.0;
      for (int j = lo; j <= hi; ++j) {
        const double w = taps[j - i + radius];
        acc += w * line[j];
        norm += w;
      }
      out[i] = acc / norm;
    }
    for (std::uint32_t i = 0; i < side; ++i) v[base + i * stride] = out[i];
  }
}

}  // namespace

GridDensity gaussian_kde(const GridDensity& y, Bandwidth bw) {
  if (!(bw.x >= 0.0) || !(bw.y >= 0.0)) throw ArgumentError("bandwidth must be non-negative");
  double total = 0.0;
  for (double v : y.values) {
    if (v < 0.0) throw ContractError("kde input has a negative cell");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ContractError("kde input is not normalized");

  const std::uint32_t side = y.spec.side();
  std::vector<double> v = y.values;
  blur_axis(v, side, 1, side, bw.x);  // along rows: columns vary
  blur_axis(v, side, side, 1, bw.y);  // along columns: rows vary
  double sum = 0.0;
  for (double x : v) sum += x;
  for (double& x : v) x /= sum;
  return GridDensity(y.spec, std::move(v));
}

Bandwidth auto_bandwidth(std::size_t count, double spread_x, double spread_y) {
  if (count < 2) throw ArgumentError("automatic bandwidth needs at least 2 points");
  const double factor = 1.06 * std::pow(static_cast<double>(count), -0.2);
  return {std::max(kMinBandwidth, factor * spread_x), std::max(kMinBandwidth, factor * spread_y)};
}

Bandwidth grid_spread(const GridDensity& y) {
  const std::uint32_t side = y.spec.side();
  double mass = 0.0, mc = 0.0, mr = 0.0;
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    mass += y.values[i];
    mc += y.values[i] * static_cast<double>(i % side);
    mr += y.values[i] * static_cast<double>(i / side);
  }
  if (!(mass > 0.0)) return {0.0, 0.0};
  mc /= mass;
  mr /= mass;
  double vc = 0.0, vr = 0.0;
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    const double dc = static_cast<double>(i % side) - mc;
    const double dr = static_cast<double>(i / side) - mr;
    vc += y.values[i] * dc * dc;
    vr += y.values[i] * dr * dr;
  }
  return {std::sqrt(vc / mass), std::sqrt(vr / mass)};
}

Bandwidth resolve_bandwidth(const KdeConfig& cfg, const GridDensity& y, std::size_t count) {
  for (const auto& b : {cfg.bandwidth_x, cfg.bandwidth_y}) {
    if (b && !(*b >= 0.0)) throw ArgumentError("bandwidth must be non-negative");
  }
  if (cfg.bandwidth_x && cfg.bandwidth_y) return {*cfg.bandwidth_x, *cfg.bandwidth_y};
  const auto spread = grid_spread(y);
  const auto silver = auto_bandwidth(count, spread.x, spread.y);
  return {cfg.bandwidth_x.value_or(silver.x), cfg.bandwidth_y.value_or(silver.y)};
}

}  // namespace tilefit
