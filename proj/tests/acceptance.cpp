// One line per acceptance criterion; exit status 1 if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>

#include "oracles.hpp"
#include "tilefit/tilefit.hpp"

using namespace tilefit;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

GridDensity gmm_kde(const GmmSpec& spec, int k, std::size_t n) {
  const GridSpec g(k, kUnitSquare);
  const auto e = embed_points(sample_gmm(spec, n), g);
  return gaussian_kde(e.histogram, resolve_bandwidth({}, e.histogram, e.retained));
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::normal_distribution<double> n01;
  std::size_t cases = 0;
  double worst = 0.0;
  const auto track = [&](double e) { worst = std::max(worst, e); };

  for (int k = 1; k <= 4; ++k) {
    const std::uint32_t side = 1u << k;
    const auto tiles = oracle::all_tiles(k);
    for (double alpha : {0.0, 0.5, 1.0}) {
      const auto d = oracle::dense_dictionary(k, alpha);
      for (std::size_t j = 0; j < tiles.size(); ++j) {
        track(rel_err(column_sq_norm(tiles[j], alpha, k), d.col(j).squaredNorm()));
      }
      for (int trial = 0; trial < 20; ++trial, ++cases) {
        const auto b = oracle::random_coeffs(k, 1 + trial * 2, -1.0, 1.0, rng);
        const Eigen::VectorXd x = d * oracle::dense_coeffs(b, k);
        track(oracle::max_rel_diff(matvec(b, alpha, k), {x.data(), x.data() + x.size()}));
        std::vector<double> r(d.rows());
        for (double& v : r) v = n01(rng);
        const Eigen::VectorXd c = d.transpose() * oracle::to_eigen(r);
        track(oracle::max_rel_diff(transpose_matvec(r, alpha, k), {c.data(), c.data() + c.size()}));
      }
    }
    for (int trial = 0; trial < 20; ++trial, ++cases) {
      const auto a = oracle::random_density(k, 1 + trial % 10, rng);
      const auto b = oracle::random_density(k, 1 + (trial * 7) % 11, rng);
      const auto ga = oracle::dense_values(a.coeffs(), k);
      const auto gb = oracle::dense_values(b.coeffs(), k);

      std::vector<double> ev(ga.size());
      for (std::uint32_t r = 0; r < side; ++r) {
        for (std::uint32_t c = 0; c < side; ++c) ev[r * side + c] = eval_point(a, c, r);
      }
      track(oracle::max_rel_diff(ev, ga));

      std::uniform_int_distribution<std::uint32_t> cell(0, side - 1);
      auto c0 = cell(rng), c1 = cell(rng), r0 = cell(rng), r1 = cell(rng);
      if (c0 > c1) std::swap(c0, c1);
      if (r0 > r1) std::swap(r0, r1);
      double brute = 0.0;
      for (std::uint32_t r = r0; r <= r1; ++r) {
        for (std::uint32_t c = c0; c <= c1; ++c) brute += ga[r * side + c];
      }
      track(rel_err(region_sum(a, {c0, c1, r0, r1}), brute));

      auto sorted = ga;
      std::sort(sorted.begin(), sorted.end());
      std::vector<double> distinct;
      for (double v : sorted) {
        if (distinct.empty() || v - distinct.back() > 1e-12) distinct.push_back(v);
      }
      const auto u = unique_values(a);
      if (u.size() != distinct.size()) return {false, "unique_values count differs from dense enumeration"};
      for (std::size_t i = 0; i < u.size(); ++i) track(rel_err(u[i], distinct[i]));

      std::vector<double> prod(ga.size());
      double total = 0.0;
      for (std::size_t i = 0; i < ga.size(); ++i) total += (prod[i] = ga[i] * gb[i]);
      if (total > 0.0) {
        for (double& v : prod) v /= total;
        const auto c = intersect(a, b, 0.0);
        track(oracle::max_rel_diff(oracle::dense_values(c.coeffs(), k), prod));
      }
    }
  }
  const double secs = seconds_since(t0);
  return {cases >= 200 && worst <= 1e-10 && secs < 30.0,
          fmt("%zu randomized cases, max relative error %.2e, %.1f s", cases, worst, secs)};
}

double kkt_of(const Eigen::MatrixXd& d, const Eigen::VectorXd& z, const PathPoint& p, int k) {
  const Eigen::VectorXd b = oracle::dense_coeffs(p.coeffs, k);
  const Eigen::VectorXd c = d.transpose() * (z - d * b);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    const double v = b[j] == 0.0 ? std::abs(c[j]) - p.lambda
                                 : std::abs(c[j] - std::copysign(p.lambda, b[j]));
    worst = std::max(worst, v / p.lambda);
  }
  return worst;
}

Outcome solver_certification() {
  std::mt19937_64 rng(202);
  double kkt = 0.0, stationarity = 0.0, enumeration = 0.0;
  std::size_t paths = 0, points = 0, refits = 0;

  std::vector<GridDensity> targets;
  std::gamma_distribution<double> gam(0.7);
  for (int k = 2; k <= 4; ++k) {
    for (int trial = 0; trial < 2; ++trial) {
      GridDensity z(GridSpec(k, kUnitSquare));
      double total = 0.0;
      for (double& v : z.values) total += (v = gam(rng));
      for (double& v : z.values) v /= total;
      targets.push_back(z);
    }
  }
  targets.push_back(gmm_kde(gmm6_fixture(), 5, 200000));

  for (const auto& z : targets) {
    const int k = z.spec.depth();
    const Eigen::VectorXd zv = oracle::to_eigen(z.values);
    for (double alpha : {0.0, 0.5, 1.0}) {
      const auto d = oracle::dense_dictionary(k, alpha);
      const auto path = lasso_path(z, alpha, FitConfig{});
      ++paths;
      for (const auto& p : path.points) {
        kkt = std::max(kkt, kkt_of(d, zv, p, k));
        ++points;
      }
    }
    // Refit on the support of a mid-path point.
    const auto d1 = oracle::dense_dictionary(k, 1.0);
    const auto path = lasso_path(z, 0.5, FitConfig{});
    const auto& mid = path.points[path.points.size() / 2];
    std::set<TileId> support;
    for (const auto& [t, v] : mid.coeffs) support.insert(t);
    if (support.empty()) continue;
    const Eigen::VectorXd b = oracle::dense_coeffs(nnls_refit(z, support), k);
    const Eigen::VectorXd g = d1.transpose() * (zv - d1 * b);
    for (const auto& t : support) {
      const auto j = tile_index(t);
      stationarity = std::max(stationarity, b[j] > 0.0 ? std::abs(g[j]) : g[j]);
    }
    ++refits;
  }

  const int k = 3;
  const auto d1 = oracle::dense_dictionary(k, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    GridDensity z(GridSpec(k, kUnitSquare));
    double total = 0.0;
    for (double& v : z.values) total += (v = gam(rng));
    for (double& v : z.values) v /= total;
    const auto picked = oracle::random_coeffs(k, 1 + trial % 5, 0.0, 1.0, rng);
    std::set<TileId> support;
    Eigen::MatrixXd a(d1.rows(), picked.size());
    for (const auto& [t, v] : picked) {
      a.col(support.size()) = d1.col(tile_index(t));
      support.insert(t);
    }
    const auto got = nnls_refit(z, support);
    Eigen::VectorXd b(support.size());
    std::size_t i = 0;
    for (const auto& t : support) b[i++] = got.count(t) ? got.at(t) : 0.0;
    const Eigen::VectorXd zv = oracle::to_eigen(z.values);
    const Eigen::VectorXd want = oracle::enumerate_nnls(a, zv);
    const bool full_rank = Eigen::FullPivLU<Eigen::MatrixXd>(a).rank() == a.cols();
    enumeration = std::max(enumeration, full_rank ? (b - want).cwiseAbs().maxCoeff()
                                                  : (a * b - a * want).cwiseAbs().maxCoeff());
    const Eigen::VectorXd g = a.transpose() * (zv - a * b);
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      stationarity = std::max(stationarity, b[j] > 0.0 ? std::abs(g[j]) : g[j]);
    }
    ++refits;
  }
  return {kkt <= 1e-6 && stationarity <= 1e-8 && enumeration <= 1e-8,
          fmt("%zu paths / %zu points, worst KKT %.2e*lambda; %zu refits, worst stationarity "
              "%.2e, enumeration gap %.2e",
              paths, points, kkt, refits, stationarity, enumeration)};
}

Outcome normalization_suite() {
  std::size_t checked = 0;
  double mass_err = 0.0, min_cell = 0.0;
  bool fitted_ok = true;
  const auto check = [&](const SparseDensity& d) {
    const auto x = d.to_grid();
    double m = 0.0;
    for (double v : x) {
      m += v;
      min_cell = std::min(min_cell, v);
    }
    mass_err = std::max(mass_err, std::abs(m - 1.0));
    ++checked;
  };

  std::vector<SparseDensity> fits;
  for (int k : {4, 5, 6}) {
    for (double alpha : {0.0, 0.5, 1.0}) {
      FitConfig cfg;
      cfg.alpha = alpha;
      const auto f = fit_density(gmm_kde(gmm6_fixture(7), k, 50000), cfg);
      for (const auto& [t, v] : f.density.coeffs()) fitted_ok = fitted_ok && v > 0.0;
      fitted_ok = fitted_ok && f.density.nnz() <= 1000;
      check(f.density);
      fits.push_back(f.density);
    }
  }
  for (std::size_t i = 0; i + 1 < fits.size(); ++i) {
    const auto& a = fits[i];
    const auto& b = fits[i + 1];
    if (a.depth() != b.depth()) continue;
    const WeightedDensity e[] = {{&a, 0.4}, {&b, 0.6}};
    const auto u = density_union(e);
    check(u);
    const auto c = intersect(a, b);
    check(c);
    check(intersect(u, c));
  }
  std::mt19937_64 rng(303);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = oracle::random_density(5, 3 + trial % 30, rng);
    const auto b = oracle::random_density(5, 3 + trial % 17, rng);
    const WeightedDensity e[] = {{&a, 0.5}, {&b, 0.5}};
    check(density_union(e));
    try {
      check(intersect(a, b));
    } catch (const DegenerateDensityError&) {
    }
  }
  return {mass_err <= 1e-8 && min_cell >= -1e-12 && fitted_ok,
          fmt("%zu densities, max |mass - 1| %.2e, min cell %.2e, fitted coefficients positive "
              "and nnz <= 1000: %s",
              checked, mass_err, min_cell, fitted_ok ? "yes" : "no")};
}

Outcome complexity() {
  std::mt19937_64 rng(404);
  std::size_t evals = 0, worst_lookup_excess = 0, intersections = 0;
  double visit_ratio = 0.0;
  bool unique_ok = true;
  for (int k : {3, 6, 10}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto d = SparseDensity(GridSpec(k, kUnitSquare),
                                   normalize(oracle::random_coeffs(std::min(k, 6), 5 + 40 * trial, 0.1, 1.0, rng)));
      std::uniform_int_distribution<std::uint32_t> cell(0, (1u << k) - 1);
      for (int q = 0; q < 100; ++q, ++evals) {
        QueryStats s;
        eval_point(d, cell(rng), cell(rng), &s);
        if (s.lookups > static_cast<std::size_t>(k + 1)) worst_lookup_excess = std::max(worst_lookup_excess, s.lookups);
      }
      unique_ok = unique_ok && unique_values(d).size() <= d.nnz() + 1;
      const auto e = SparseDensity(GridSpec(k, kUnitSquare),
                                   normalize(oracle::random_coeffs(std::min(k, 6), 3 + 30 * trial, 0.1, 1.0, rng)));
      QueryStats s;
      try {
        intersect(d, e, 0.001, &s);
        ++intersections;
        visit_ratio = std::max(visit_ratio, static_cast<double>(s.tile_visits) /
                                                static_cast<double>(d.nnz() + e.nnz() + 1));
      } catch (const DegenerateDensityError&) {
      }
    }
  }
  return {worst_lookup_excess == 0 && visit_ratio <= 4.0 && unique_ok,
          fmt("%zu evals within k+1 lookups: %s; %zu intersections, max visits/(sA+sB+1) %.2f; "
              "|unique| <= nnz+1: %s",
              evals, worst_lookup_excess == 0 ? "yes" : "no", intersections, visit_ratio,
              unique_ok ? "yes" : "no")};
}

struct Simulation {
  Outcome outcome;
  double hist_tv_k5 = 0.0;
};

Simulation simulation_bands() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.depths = {4, 5, 6, 7};
  cfg.alphas = {0.5, 1.0};
  const auto rows = run_experiment(gmm6_fixture(), cfg);
  const double secs = seconds_since(t0);
  double tv5 = 0.0, hist5 = 0.0;
  std::size_t nnz5 = 0, nnz6 = 0;
  std::vector<double> hist;
  for (const auto& r : rows) {
    if (r.k == 5 && r.alpha == 0.5) {
      tv5 = r.tv;
      nnz5 = r.nnz;
      hist5 = r.tv_hist;
    }
    if (r.k == 6 && r.alpha == 1.0) nnz6 = r.nnz;
    if (r.alpha == 0.5) hist.push_back(r.tv_hist);
  }
  bool increasing = true;
  for (std::size_t i = 1; i < hist.size(); ++i) increasing = increasing && hist[i] >= hist[i - 1];
  const bool a = tv5 >= 0.10 && tv5 <= 0.30 && nnz5 >= 30 && nnz5 <= 300;
  const bool b = nnz6 <= 20;
  std::string trend;
  for (double h : hist) trend += fmt("%s%.4f", trend.empty() ? "" : " -> ", h);
  return {{a && b && increasing && secs < 300.0,
           fmt("(a) k=5 a=0.5 TV %.3f nnz %zu; (b) k=6 a=1 nnz %zu; (c) histogram TV k=4..7 %s; "
               "%.1f s",
               tv5, nnz5, nnz6, trend.c_str(), secs)},
          hist5};
}

Outcome union_compactness() {
  const GridSpec g(5, kUnitSquare);
  std::vector<SparseDensity> slices;
  std::size_t largest = 0;
  for (int s = 0; s < 12; ++s) {
    const auto f = fit_density(sample_gmm(gmm6_time_slice(s, 1000 + s), 200000), g, FitConfig{});
    largest = std::max(largest, f.density.nnz());
    slices.push_back(f.density);
  }
  std::size_t unions = 0, biggest = 0;
  for (int i = 0; i < 12; ++i) {
    for (int j = i + 1; j < 12; ++j, ++unions) {
      std::vector<WeightedDensity> e;
      for (int t = i; t <= j; ++t) e.push_back({&slices[t], 1.0 / (j - i + 1)});
      biggest = std::max(biggest, density_union(e).nnz());
    }
  }
  return {static_cast<double>(biggest) <= 1.5 * static_cast<double>(largest),
          fmt("%zu contiguous unions of 12 slices, largest union %zu tiles vs largest input %zu "
              "(ratio %.2f)",
              unions, biggest, largest, static_cast<double>(biggest) / largest)};
}

Outcome round_trip() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  std::size_t exact = 0, deterministic = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + trial % 8;
    auto b = oracle::random_coeffs(std::min(k, 5), 1 + trial % 60, 1e-9, 1.0, rng);
    const double x0 = u(rng), y0 = u(rng);
    const SparseDensity d(GridSpec(k, {x0, x0 + 1.0 + std::abs(u(rng)), y0, y0 + 1.0 + std::abs(u(rng))}),
                          normalize(b),
                          trial % 3 ? std::optional<FitMetadata>{{0.5, 0.001, std::abs(u(rng)) * 1e-7}}
                                    : std::nullopt);
    const auto text = save_density(d);
    exact += load_density(text) == d;
    deterministic += save_density(d) == text && save_density(load_density(text)) == text;
  }
  return {exact == 100 && deterministic == 100,
          fmt("%zu/100 exact reloads, %zu/100 byte-identical re-saves", exact, deterministic)};
}

Outcome prediction_parity() {
  const GridSpec g(5, kUnitSquare);
  const auto spec = gmm6_fixture();
  const auto e = embed_points(sample_gmm(spec, 200000), g);
  const auto z = gaussian_kde(e.histogram, resolve_bandwidth({}, e.histogram, e.retained));
  const auto fit = fit_density(z, FitConfig{});
  auto fresh = spec;
  fresh.seed = spec.seed + 1;
  const auto y_new = embed_points(sample_gmm(fresh, 200000), g).histogram;
  const auto x = fit.density.to_grid();
  double ex = 0.0, ez = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ex += (y_new.values[i] - x[i]) * (y_new.values[i] - x[i]);
    ez += (y_new.values[i] - z.values[i]) * (y_new.values[i] - z.values[i]);
  }
  const double ratio = std::sqrt(ex / ez);
  return {ratio <= 1.2, fmt("||y_new - x|| / ||y_new - z|| = %.3f (bound 1.2), nnz %zu", ratio,
                            fit.density.nnz())};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };
  const auto run = [&](int id, const char* name, const std::function<Outcome()>& f) {
    try {
      report(id, name, f());
    } catch (const std::exception& e) {
      report(id, name, {false, std::string("threw: ") + e.what()});
    }
  };

  run(1, "oracle equivalence", oracle_equivalence);
  run(2, "solver certification", solver_certification);
  run(3, "normalization", normalization_suite);
  run(4, "complexity bounds", complexity);
  double hist5 = 0.0;
  run(5, "simulation bands", [&] {
    auto s = simulation_bands();
    hist5 = s.hist_tv_k5;
    return s.outcome;
  });
  run(6, "union compactness", union_compactness);
  run(7, "round trip", round_trip);
  run(8, "prediction parity", prediction_parity);

  // Not an acceptance criterion: the k=5 histogram band quoted for the
  // experiment table. Reported for visibility only.
  std::printf("[%s] note: k=5 histogram TV %.4f vs band [0.10, 0.28]\n",
              hist5 >= 0.10 && hist5 <= 0.28 ? "in band" : "outside band", hist5);

  std::printf("%d of 8 criteria failed\n", failures);
  return failures ? 1 : 0;
}
