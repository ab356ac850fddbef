#include "tilefit/sparse_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include "tile_solver.hpp"
#include "tree_lasso.hpp"
#include "tilefit/error.hpp"

namespace tilefit {

namespace {

using detail::TileSolver;

double soft_threshold(double x, double t) noexcept {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

void require_normalized(const GridDensity& z) {
  double total = 0.0;
  for (double v : z.values) {
    if (!std::isfinite(v)) throw ContractError("target density has a non-finite cell");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ContractError("target density is not normalized");
}

std::vector<double> lambda_grid(double lambda_max, const FitConfig& cfg) {
  std::vector<double> out(cfg.n_lambda);
  for (std::size_t i = 0; i < cfg.n_lambda; ++i) {
    const double t = cfg.n_lambda == 1 ? 0.0 : static_cast<double>(i) / (cfg.n_lambda - 1);
    out[i] = lambda_max * std::pow(cfg.lambda_min_ratio, t);
  }
  return out;
}

CoefficientMap to_map(const std::vector<double>& b) {
  CoefficientMap out;
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b[j] != 0.0) out.emplace(tile_at(j), b[j]);
  }
  return out;
}

// Brings the solver to the lasso solution at `lambda`, starting from its
// current coefficients. `corr` must hold the exact correlations of the current
// state on entry; it holds those of the solution on exit. Candidate tiles come
// from the sequential strong rule; a full optimality check over every tile
// decides when to stop.
void solve_lasso(TileSolver& s, double lambda, double prev_lambda, std::vector<double>& corr,
                 const FitConfig& cfg) {
  const std::size_t d = s.size();
  std::vector<char> in_active(d, 0);
  std::vector<std::size_t> active;
  const double strong = 2.0 * lambda - prev_lambda;
  for (std::size_t j = 0; j < d; ++j) {
    if (s.sq_norm(j) > 0.0 && (s.coefficient(j) != 0.0 || std::abs(corr[j]) >= strong)) {
      in_active[j] = 1;
      active.push_back(j);
    }
  }

  const double kkt_tol = cfg.tol * lambda;
  double sweep_tol = kkt_tol;
  std::size_t sweeps = 0;
  while (true) {
    while (true) {
      if (sweeps++ >= cfg.max_iter) {
        throw SolverError("coordinate descent did not converge within " +
                              std::to_string(cfg.max_iter) + " sweeps at lambda " +
                              std::to_string(lambda),
                          lambda);
      }
      double max_change = 0.0;
      for (std::size_t j : active) {
        const double c = s.sq_norm(j);
        const double b = s.coefficient(j);
        const double nb = soft_threshold(s.correlation(j) + c * b, lambda) / c;
        if (nb != b) {
          max_change = std::max(max_change, c * std::abs(nb - b));
          s.set_coefficient(j, nb);
        }
      }
      if (max_change <= sweep_tol) break;
    }

    s.refresh();
    corr = s.all_correlations();
    bool added = false;
    double worst = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (s.sq_norm(j) == 0.0) continue;
      const double b = s.coefficient(j);
      if (b == 0.0) {
        const double excess = std::abs(corr[j]) - lambda;
        if (excess > kkt_tol && !in_active[j]) {
          in_active[j] = 1;
          active.push_back(j);
          added = true;
        }
        worst = std::max(worst, excess);
      } else {
        worst = std::max(worst, std::abs(corr[j] - std::copysign(lambda, b)));
      }
    }
    if (!added && worst <= kkt_tol) return;
    if (added) {
      std::sort(active.begin(), active.end());
    } else {
      sweep_tol *= 0.1;
    }
  }
}

// Runs the path over `lambdas`, calling on_point(i, coefficients) after each
// solve. Coefficients are in tile_index order.
template <class OnPoint>
void run_path(const DictionarySpec& dict, std::span<const double> z,
              std::span<const std::uint8_t> mask, const std::vector<double>& lambdas,
              const FitConfig& cfg, OnPoint&& on_point) {
  if (cfg.solver == LassoSolver::tree) {
    // At or above the largest correlation zero is the exact solution; the
    // message pass would only reproduce it up to rounding.
    std::vector<double> zm(z.begin(), z.end());
    for (std::size_t c = 0; c < zm.size() && !mask.empty(); ++c) zm[c] *= mask[c];
    double top = 0.0;
    for (double v : transpose_matvec(zm, dict.alpha, dict.depth)) top = std::max(top, std::abs(v));
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      on_point(i, lambdas[i] >= top ? std::vector<double>(dict.columns(), 0.0)
                                    : detail::solve_tree_lasso(dict, z, mask, lambdas[i]));
    }
    return;
  }
  TileSolver solver(dict, z, mask);
  auto corr = solver.all_correlations();
  double prev = lambdas.front();
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    solve_lasso(solver, lambdas[i], prev, corr, cfg);
    on_point(i, solver.coefficients());
    prev = lambdas[i];
  }
}

double lambda_max_of(const GridDensity& z, double alpha) {
  const auto corr = transpose_matvec(z.values, alpha, z.spec.depth());
  double m = 0.0;
  for (double c : corr) m = std::max(m, std::abs(c));
  if (!(m > 0.0)) throw DegenerateDensityError("target density has no mass to fit");
  return m;
}

FitResult fit_from(const GridDensity& z, const GridDensity& z_refit, const FitConfig& cfg) {
  auto path = cv_select(z, cfg.alpha, cfg);
  const auto& chosen = path.points[path.selected_index];
  std::set<TileId> support;
  for (const auto& [t, v] : chosen.coeffs) support.insert(t);
  const auto refit = nnls_refit(z_refit, support, cfg);
  const auto kept = hard_threshold(refit, cfg.delta);
  if (kept.empty()) throw DegenerateDensityError("no coefficient survived thresholding");
  FitMetadata meta{cfg.alpha, cfg.delta, chosen.lambda};
  SparseDensity density(z.spec, normalize(kept), meta);
  return {std::move(density), std::move(path), Bandwidth{}, support.size()};
}

}  // namespace

void FitConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must lie in [0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("delta must lie in (0, 1)");
  if (n_lambda < 1) throw ArgumentError("the lambda path needs at least one value");
  if (n_lambda > 1 && !(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) {
    throw ArgumentError("lambda_min_ratio must lie in (0, 1)");
  }
  if (cv_folds < 2) throw ArgumentError("cross-validation needs at least 2 folds");
  if (!(tol > 0.0)) throw ArgumentError("tolerance must be positive");
  if (max_iter < 1) throw ArgumentError("max_iter must be positive");
  if (!(refit_holdout_fraction >= 0.0 && refit_holdout_fraction < 1.0)) {
    throw ArgumentError("refit holdout fraction must lie in [0, 1)");
  }
}

PathResult lasso_path(const GridDensity& z, double alpha, const FitConfig& cfg) {
  cfg.validate();
  require_normalized(z);
  const DictionarySpec dict(z.spec.depth(), alpha);
  const auto lambdas = lambda_grid(lambda_max_of(z, alpha), cfg);
  PathResult out;
  out.points.resize(lambdas.size());
  run_path(dict, z.values, {}, lambdas, cfg, [&](std::size_t i, const std::vector<double>& b) {
    out.points[i].lambda = lambdas[i];
    out.points[i].coeffs = to_map(b);
  });
  return out;
}

PathResult cv_select(const GridDensity& z, double alpha, const FitConfig& cfg) {
  auto out = lasso_path(z, alpha, cfg);
  const DictionarySpec dict(z.spec.depth(), alpha);
  std::vector<double> lambdas;
  for (const auto& p : out.points) lambdas.push_back(p.lambda);

  const std::size_t n = z.values.size();
  const std::size_t folds = cfg.cv_folds;
  if (n < folds) throw ArgumentError("fewer grid cells than cross-validation folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t p = 0; p < n; ++p) fold_of[order[p]] = p % folds;

  // errors[i * folds + f]: mean squared held-out error of fold f at lambda i.
  std::vector<double> errors(lambdas.size() * folds, 0.0);
  std::vector<std::uint8_t> mask(n);
  for (std::size_t f = 0; f < folds; ++f) {
    std::size_t held = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mask[i] = fold_of[i] != f;
      held += !mask[i];
    }
    run_path(dict, z.values, mask, lambdas, cfg, [&](std::size_t i, const std::vector<double>& b) {
      const auto pred = matvec_dense(b, dict);
      double err = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        if (mask[c]) continue;
        const double r = z.values[c] - pred[c];
        err += r * r;
      }
      errors[i * folds + f] = err / static_cast<double>(held);
    });
  }

  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    double mean = 0.0;
    for (std::size_t f = 0; f < folds; ++f) mean += errors[i * folds + f];
    mean /= static_cast<double>(folds);
    double var = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      const double d = errors[i * folds + f] - mean;
      var += d * d;
    }
    var /= static_cast<double>(folds - 1);
    out.points[i].cv_mean_error = mean;
    out.points[i].cv_se = std::sqrt(var / static_cast<double>(folds));
  }

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (out.points[i].coeffs.empty()) continue;
    if (!best || out.points[i].cv_mean_error < out.points[*best].cv_mean_error) best = i;
  }
  if (!best) throw DegenerateDensityError("every fit on the lambda path is empty");
  const double limit = out.points[*best].cv_mean_error + out.points[*best].cv_se;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (!out.points[i].coeffs.empty() && out.points[i].cv_mean_error <= limit) {
      out.selected_index = i;
      break;
    }
  }
  return out;
}

CoefficientMap nnls_refit(const GridDensity& z, const std::set<TileId>& support,
                          const FitConfig& cfg) {
  if (support.empty()) throw ArgumentError("non-negative refit needs a non-empty support");
  const int depth = z.spec.depth();
  for (const auto& t : support) {
    if (!is_valid_tile(t, depth)) throw ArgumentError("invalid tile " + t.to_string());
  }
  TileSolver s(DictionarySpec(depth, 1.0), z.values);
  std::vector<std::size_t> idx;
  for (const auto& t : support) idx.push_back(tile_index(t));

  double scale = 0.0;
  for (std::size_t j : idx) scale = std::max(scale, std::abs(s.correlation(j)));
  if (scale == 0.0) return {};
  const double stop = 1e-12 * scale;

  double sweep_tol = stop;
  std::size_t sweeps = 0;
  while (true) {
    double max_change = 0.0;
    do {
      ++sweeps;
      max_change = 0.0;
      for (std::size_t j : idx) {
        const double c = s.sq_norm(j);
        const double b = s.coefficient(j);
        const double nb = std::max(0.0, b + s.correlation(j) / c);
        if (nb != b) {
          max_change = std::max(max_change, c * std::abs(nb - b));
          s.set_coefficient(j, nb);
        }
      }
    } while (max_change > sweep_tol && sweeps < cfg.max_iter);

    s.refresh();
    double worst = 0.0;
    for (std::size_t j : idx) {
      const double g = s.correlation(j);
      worst = std::max(worst, s.coefficient(j) > 0.0 ? std::abs(g) : g);
    }
    if (worst <= stop) break;
    if (sweeps >= cfg.max_iter) {
      // Accept anything meeting the documented stationarity bound.
      if (worst <= 1e-8) break;
      throw SolverError("non-negative refit did not reach stationarity", 0.0);
    }
    sweep_tol *= 0.1;
  }

  CoefficientMap out;
  for (std::size_t j : idx) {
    if (s.coefficient(j) > 0.0) out.emplace(tile_at(j), s.coefficient(j));
  }
  return out;
}

CoefficientMap hard_threshold(const CoefficientMap& b, double delta) {
  double l1 = 0.0;
  for (const auto& [t, v] : b) l1 += std::abs(v);
  const double cut = delta * l1;
  CoefficientMap out;
  for (const auto& [t, v] : b) {
    if (std::abs(v) > cut) out.emplace(t, v);
  }
  return out;
}

CoefficientMap normalize(const CoefficientMap& b) {
  if (b.empty()) throw DegenerateDensityError("cannot normalize an empty density");
  double sum = 0.0;
  for (const auto& [t, v] : b) sum += v;
  if (!(sum > 0.0)) throw DegenerateDensityError("density has non-positive total mass");
  // Already normalized up to rounding: leave the weights bit-identical.
  if (std::abs(sum - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon() * b.size()) return b;
  CoefficientMap out;
  for (const auto& [t, v] : b) out.emplace(t, v / sum);
  return out;
}

FitResult fit_density(const GridDensity& z, const FitConfig& cfg) {
  cfg.validate();
  return fit_from(z, z, cfg);
}

FitResult fit_density(const std::vector<Point>& points, const GridSpec& spec,
                      const FitConfig& cfg, const KdeConfig& kde) {
  cfg.validate();
  std::vector<Point> train = points, holdout;
  if (cfg.refit_holdout_fraction > 0.0) {
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::shuffle(train.begin(), train.end(), rng);
    const auto keep = static_cast<std::size_t>(
        std::llround((1.0 - cfg.refit_holdout_fraction) * static_cast<double>(train.size())));
    holdout.assign(train.begin() + static_cast<std::ptrdiff_t>(keep), train.end());
    train.resize(keep);
  }
  const auto embedded = embed_points(train, spec);
  const auto bw = resolve_bandwidth(kde, embedded.histogram, embedded.retained);
  const auto z = gaussian_kde(embedded.histogram, bw);
  FitResult out = holdout.empty()
                      ? fit_from(z, z, cfg)
                      : fit_from(z, gaussian_kde(embed_points(holdout, spec).histogram, bw), cfg);
  out.bandwidth = bw;
  return out;
}

}  // namespace tilefit
