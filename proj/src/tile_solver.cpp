#include "tile_solver.hpp"

#include <limits>

#include "tilefit/error.hpp"

namespace tilefit::detail {

namespace {

constexpr std::uint32_t kNoParent = std::numeric_limits<std::uint32_t>::max();

}  // namespace

TileSolver::TileSolver(const DictionarySpec& dict, std::span<const double> z,
                       std::span<const std::uint8_t> mask)
    : dict_(dict), z_(z.begin(), z.end()), mask_(mask.begin(), mask.end()) {
  const std::size_t n = dict.rows();
  if (z.size() != n) throw ArgumentError("target vector has the wrong length");
  if (!mask.empty() && mask.size() != n) throw ArgumentError("cell mask has the wrong length");

  const std::size_t d = dict.columns();
  for (int zoom = 0; zoom <= dict.depth; ++zoom) level_weight_.push_back(dict.level_weight(zoom));
  level_.resize(d);
  parent_.resize(d);
  std::size_t j = 0;
  for (int zoom = 0; zoom <= dict.depth; ++zoom) {
    const std::uint32_t side = std::uint32_t{1} << zoom;
    for (std::uint32_t r = 0; r < side; ++r) {
      for (std::uint32_t c = 0; c < side; ++c, ++j) {
        level_[j] = static_cast<std::uint8_t>(zoom);
        parent_[j] = zoom == 0 ? kNoParent
                               : static_cast<std::uint32_t>(tile_index({zoom - 1, c >> 1, r >> 1}));
      }
    }
  }

  std::vector<double> m(n, 1.0), zm(z.begin(), z.end());
  if (!mask_.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = mask_[i] ? 1.0 : 0.0;
      zm[i] *= m[i];
    }
  }
  count_ = tile_sums(m, dict.depth);
  z_sum_ = tile_sums(zm, dict.depth);
  sq_norm_.resize(d);
  for (std::size_t t = 0; t < d; ++t) {
    const double w = weight(t);
    sq_norm_[t] = w * w * count_[t];
  }
  b_.assign(d, 0.0);
  desc_.assign(d, 0.0);
}

double TileSolver::correlation(std::size_t j) const noexcept {
  double a = 0.0;
  for (std::uint32_t p = static_cast<std::uint32_t>(j); p != kNoParent; p = parent_[p]) {
    a += b_[p] * weight(p);
  }
  return weight(j) * (z_sum_[j] - count_[j] * a - desc_[j]);
}

void TileSolver::set_coefficient(std::size_t j, double value) noexcept {
  const double delta = (value - b_[j]) * weight(j) * count_[j];
  b_[j] = value;
  for (std::uint32_t p = parent_[j]; p != kNoParent; p = parent_[p]) desc_[p] += delta;
}

void TileSolver::refresh() {
  std::fill(desc_.begin(), desc_.end(), 0.0);
  for (std::size_t j = b_.size(); j-- > 1;) {
    desc_[parent_[j]] += desc_[j] + b_[j] * weight(j) * count_[j];
  }
}

std::vector<double> TileSolver::all_correlations() const {
  const std::size_t d = b_.size();
  std::vector<double> desc(d, 0.0);
  for (std::size_t j = d; j-- > 1;) desc[parent_[j]] += desc[j] + b_[j] * weight(j) * count_[j];
  std::vector<double> anc(d);
  std::vector<double> corr(d);
  for (std::size_t j = 0; j < d; ++j) {
    anc[j] = b_[j] * weight(j) + (j == 0 ? 0.0 : anc[parent_[j]]);
    corr[j] = weight(j) * (z_sum_[j] - count_[j] * anc[j] - desc[j]);
  }
  return corr;
}

double TileSolver::half_rss() const {
  const auto x = matvec_dense(b_, dict_);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!mask_.empty() && !mask_[i]) continue;
    const double r = z_[i] - x[i];
    s += r * r;
  }
  return 0.5 * s;
}

}  // namespace tilefit::detail
