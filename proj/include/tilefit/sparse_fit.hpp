#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "tilefit/dictionary.hpp"
#include "tilefit/smoother.hpp"
#include "tilefit/sparse_density.hpp"

namespace tilefit {

// How each lasso problem on the path is solved. `tree` is exact (one pass of
// messages over the quadtree); `coordinate_descent` iterates to tol.
enum class LassoSolver { tree, coordinate_descent };

struct FitConfig {
  double alpha = 0.5;
  double delta = 0.001;
  std::size_t n_lambda = 100;
  double lambda_min_ratio = 1e-4;
  std::size_t cv_folds = 5;
  // Coordinate descent stops once every optimality condition holds to tol * lambda.
  double tol = 1e-7;
  std::size_t max_iter = 100000;
  std::uint64_t seed = 1;
  // Share of points held back for the non-negative refit; 0 refits on the
  // training data.
  double refit_holdout_fraction = 0.0;
  LassoSolver solver = LassoSolver::tree;

  void validate() const;
};

struct PathPoint {
  double lambda = 0.0;
  CoefficientMap coeffs;
  double cv_mean_error = 0.0;
  double cv_se = 0.0;
};

struct PathResult {
  std::vector<PathPoint> points;  // lambda strictly decreasing
  std::size_t selected_index = 0;
};

// Penalized least squares on the tile dictionary,
//   min_b 0.5 * ||z - D b||^2 + lambda * ||b||_1,
// on a log-spaced lambda grid starting at lambda_max = max_j |<D_j, z>|.
// Signs are unconstrained. Cross-validation
// fields are left at zero.
PathResult lasso_path(const GridDensity& z, double alpha, const FitConfig& cfg);

// Runs the path on `cv_folds` random cell folds, picks the largest lambda
// whose mean held-out error is within one standard error of the minimum
// (among lambdas with a non-empty fit), and returns the all-cell path.
PathResult cv_select(const GridDensity& z, double alpha, const FitConfig& cfg);

// Non-negative least squares of z on the uniform-tile columns (alpha = 1)
// restricted to `support`, by projected coordinate descent.
CoefficientMap nnls_refit(const GridDensity& z, const std::set<TileId>& support,
                          const FitConfig& cfg = {});

// Zeroes every coefficient with |b_j| <= delta * ||b||_1.
CoefficientMap hard_threshold(const CoefficientMap& b, double delta);

// Divides by the coefficient sum. Throws DegenerateDensityError when the sum
// is not positive or the map is empty.
CoefficientMap normalize(const CoefficientMap& b);

struct FitResult {
  SparseDensity density;
  PathResult path;
  Bandwidth bandwidth;  // zero when fitting a precomputed z
  std::size_t support_before_threshold = 0;
};

// Smoothed density estimate -> sparse tile representation.
FitResult fit_density(const GridDensity& z, const FitConfig& cfg);

// Points -> histogram -> KDE -> fit. With refit_holdout_fraction > 0 the
// non-negative refit uses a KDE of the held-back points.
FitResult fit_density(const std::vector<Point>& points, const GridSpec& spec,
                      const FitConfig& cfg, const KdeConfig& kde = {});

}  // namespace tilefit
