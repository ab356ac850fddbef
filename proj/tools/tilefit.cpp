#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tilefit/tilefit.hpp"

using namespace tilefit;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kSolver = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::istringstream field(item);
    T v;
    if (!(field >> v) || !(field >> std::ws).eof()) {
      throw UsageError(std::string("bad value '") + item + "' in " + what);
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw ParseError("cannot write " + path);
}

unsigned default_jobs() {
  if (const char* env = std::getenv("TILEFIT_JOBS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring TILEFIT_JOBS=" << env << "\n";
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse quadtree-tile density estimation and queries"};
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a sparse density to points from a CSV file");
  std::string fit_input, fit_out, fit_bounds;
  int fit_k = 5;
  FitConfig fit_cfg;
  std::optional<double> fit_bw;
  fit->add_option("--input", fit_input, "CSV with columns x,y or lon,lat")->required();
  fit->add_option("--k", fit_k, "Grid depth (2^k cells per side)")->capture_default_str();
  fit->add_option("--alpha", fit_cfg.alpha, "Tile-size exponent in [0, 1]")->capture_default_str();
  fit->add_option("--delta", fit_cfg.delta, "Hard-threshold fraction")->capture_default_str();
  fit->add_option("--bandwidth", fit_bw, "KDE bandwidth in cells (default: Silverman)");
  fit->add_option("--seed", fit_cfg.seed, "Cross-validation fold seed")->capture_default_str();
  fit->add_option("--folds", fit_cfg.cv_folds, "Cross-validation folds")->capture_default_str();
  fit->add_option("--holdout", fit_cfg.refit_holdout_fraction,
                  "Share of points held back for the non-negative refit")
      ->capture_default_str();
  fit->add_option("--bounds", fit_bounds, "x_min,x_max,y_min,y_max (default: covering square)");
  fit->add_option("--out", fit_out, "Density document to write")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Value of one grid cell");
  std::string eval_density;
  std::optional<std::uint32_t> eval_col, eval_row;
  std::optional<double> eval_x, eval_y;
  eval->add_option("--density", eval_density)->required();
  auto* col_opt = eval->add_option("--col", eval_col);
  auto* row_opt = eval->add_option("--row", eval_row);
  auto* x_opt = eval->add_option("--x", eval_x, "Data-unit x");
  auto* y_opt = eval->add_option("--y", eval_y, "Data-unit y");
  col_opt->needs(row_opt)->excludes(x_opt)->excludes(y_opt);
  row_opt->needs(col_opt);
  x_opt->needs(y_opt);
  y_opt->needs(x_opt);

  // query
  auto* query = app.add_subcommand("query", "Probability mass of a cell rectangle");
  std::string query_density, query_rect;
  query->add_option("--density", query_density)->required();
  query->add_option("--rect", query_rect, "c0,c1,r0,r1 (inclusive)")->required();

  // union
  auto* uni = app.add_subcommand("union", "Prior-weighted mixture of densities");
  std::string union_out;
  std::vector<double> union_priors;
  std::vector<std::string> union_inputs;
  double union_delta = 0.001;
  uni->add_option("--out", union_out)->required();
  uni->add_option("--prior", union_priors, "Prior of the matching input, in order")->take_all();
  uni->add_option("--delta", union_delta)->capture_default_str();
  uni->add_option("inputs", union_inputs, "Density documents")->required();

  // intersect
  auto* inter = app.add_subcommand("intersect", "Normalized pointwise product of two densities");
  std::string inter_out;
  std::vector<std::string> inter_inputs;
  double inter_delta = 0.001;
  inter->add_option("--out", inter_out)->required();
  inter->add_option("--delta", inter_delta)->capture_default_str();
  inter->add_option("inputs", inter_inputs, "Two density documents")->required()->expected(2);

  // export
  auto* exp = app.add_subcommand("export", "Write the grid CSV and/or tile polygons");
  std::string exp_density, exp_grid, exp_tiles;
  exp->add_option("--density", exp_density)->required();
  auto* grid_opt = exp->add_option("--grid", exp_grid, "CSV of col,row,value");
  auto* tiles_opt = exp->add_option("--tiles", exp_tiles, "GeoJSON feature collection");
  (void)grid_opt;
  (void)tiles_opt;

  // simulate
  auto* sim = app.add_subcommand("simulate", "Gaussian-mixture experiment table");
  std::string sim_fixture = "gmm6", sim_out, sim_k = "3,4,5,6,7", sim_alpha = "0,0.25,0.5,0.75,1";
  std::size_t sim_n = 200000;
  std::uint64_t sim_seed = 20160407;
  unsigned sim_jobs = default_jobs();
  std::optional<double> sim_bw;
  sim->add_option("--fixture", sim_fixture)->check(CLI::IsMember({"gmm6"}))->capture_default_str();
  sim->add_option("--n", sim_n, "Sample size")->capture_default_str();
  sim->add_option("--k-list", sim_k)->capture_default_str();
  sim->add_option("--alpha-list", sim_alpha)->capture_default_str();
  sim->add_option("--seed", sim_seed, "Sampling seed")->capture_default_str();
  sim->add_option("--bandwidth", sim_bw, "KDE bandwidth in cells (default: Silverman)");
  sim->add_option("--jobs", sim_jobs, "Parallel experiment cells (default: $TILEFIT_JOBS or 1)")
      ->check(CLI::PositiveNumber);
  sim->add_option("--out", sim_out, "CSV output (default: standard output)");

  // info
  auto* info = app.add_subcommand("info", "Summarize a density document");
  std::string info_density;
  info->add_option("--density", info_density)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*fit) {
      const auto points = read_points_csv_file(fit_input);
      if (points.empty()) throw EmptyDataError("no points in " + fit_input);
      std::optional<GridSpec> grid;
      if (!fit_bounds.empty()) {
        const auto b = parse_list<double>(fit_bounds, "--bounds");
        if (b.size() != 4) throw UsageError("--bounds needs four values");
        grid.emplace(fit_k, Bounds{b[0], b[1], b[2], b[3]});
      } else {
        grid = GridSpec::covering(points, fit_k);
      }
      KdeConfig kde;
      if (fit_bw) kde.bandwidth_x = kde.bandwidth_y = *fit_bw;
      const auto result = fit_density(points, *grid, fit_cfg, kde);
      save_density_file(result.density, fit_out);
      const auto& chosen = result.path.points[result.path.selected_index];
      std::cout << "nnz " << result.density.nnz() << "\n"
                << "lambda_star " << format_real(chosen.lambda) << "\n"
                << "cv_error " << format_real(chosen.cv_mean_error) << "\n"
                << "cv_se " << format_real(chosen.cv_se) << "\n";
    } else if (*eval) {
      const auto d = load_density_file(eval_density);
      std::uint32_t col, row;
      if (eval_col) {
        col = *eval_col;
        row = *eval_row;
      } else if (eval_x) {
        const auto cell = d.spec().locate(*eval_x, *eval_y);
        if (!cell) throw ArgumentError("point lies outside the grid");
        col = static_cast<std::uint32_t>(*cell % d.spec().side());
        row = static_cast<std::uint32_t>(*cell / d.spec().side());
      } else {
        throw UsageError("eval needs --col/--row or --x/--y");
      }
      std::cout << format_real(eval_point(d, col, row)) << "\n";
    } else if (*query) {
      const auto d = load_density_file(query_density);
      const auto r = parse_list<std::uint32_t>(query_rect, "--rect");
      if (r.size() != 4) throw UsageError("--rect needs four values");
      std::cout << format_real(region_sum(d, {r[0], r[1], r[2], r[3]})) << "\n";
    } else if (*uni) {
      if (union_priors.empty()) {
        std::cerr << "warning: no --prior given; using equal priors\n";
        union_priors.assign(union_inputs.size(), 1.0 / static_cast<double>(union_inputs.size()));
      }
      if (union_priors.size() != union_inputs.size()) {
        throw UsageError("give one --prior per input density");
      }
      std::vector<SparseDensity> ds;
      for (const auto& path : union_inputs) ds.push_back(load_density_file(path));
      std::vector<WeightedDensity> entries;
      for (std::size_t i = 0; i < ds.size(); ++i) entries.push_back({&ds[i], union_priors[i]});
      const auto u = density_union(entries, union_delta);
      save_density_file(u, union_out);
      std::cout << "nnz " << u.nnz() << "\n";
    } else if (*inter) {
      const auto a = load_density_file(inter_inputs[0]);
      const auto b = load_density_file(inter_inputs[1]);
      const auto c = intersect(a, b, inter_delta);
      save_density_file(c, inter_out);
      std::cout << "nnz " << c.nnz() << "\n";
    } else if (*exp) {
      if (exp_grid.empty() && exp_tiles.empty()) throw UsageError("export needs --grid and/or --tiles");
      const auto d = load_density_file(exp_density);
      if (!exp_grid.empty()) write_text(exp_grid, export_grid_csv(d));
      if (!exp_tiles.empty()) write_text(exp_tiles, export_tiles_geojson(d));
    } else if (*sim) {
      ExperimentConfig cfg;
      cfg.n_points = sim_n;
      cfg.depths = parse_list<int>(sim_k, "--k-list");
      cfg.alphas = parse_list<double>(sim_alpha, "--alpha-list");
      cfg.jobs = sim_jobs;
      if (sim_bw) cfg.kde.bandwidth_x = cfg.kde.bandwidth_y = *sim_bw;
      const auto rows = run_experiment(gmm6_fixture(sim_seed), cfg);
      const auto csv = experiment_csv(rows);
      if (sim_out.empty()) {
        std::cout << csv;
      } else {
        write_text(sim_out, csv);
        for (const auto& [k, a] : alpha_heuristic(rows)) {
          std::cout << "k=" << k << " largest model at alpha " << format_real(a) << "\n";
        }
      }
    } else if (*info) {
      const auto d = load_density_file(info_density);
      const auto& b = d.spec().bounds();
      std::cout << "k " << d.depth() << "\n"
                << "bounds " << format_real(b.x_min) << "," << format_real(b.x_max) << ","
                << format_real(b.y_min) << "," << format_real(b.y_max) << "\n"
                << "nnz " << d.nnz() << "\n";
      if (const auto& m = d.metadata()) {
        std::cout << "alpha " << format_real(m->alpha) << "\n"
                  << "delta " << format_real(m->delta) << "\n"
                  << "lambda_star " << format_real(m->lambda_star) << "\n";
      }
      std::cout << "unique_values " << unique_values(d).size() << "\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kSolver;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
