#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tilefit/tilefit.hpp"

namespace py = pybind11;
using namespace tilefit;

namespace {

py::array_t<double> as_array(const std::vector<double>& v, std::uint32_t side) {
  py::array_t<double> out({static_cast<py::ssize_t>(side), static_cast<py::ssize_t>(side)});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<Point> to_points(py::array_t<double, py::array::c_style | py::array::forcecast> xy) {
  if (xy.ndim() != 2 || xy.shape(1) != 2) throw ArgumentError("points must have shape (n, 2)");
  std::vector<Point> pts(static_cast<std::size_t>(xy.shape(0)));
  auto r = xy.unchecked<2>();
  for (py::ssize_t i = 0; i < xy.shape(0); ++i) pts[i] = {r(i, 0), r(i, 1)};
  return pts;
}

py::dict coeff_dict(const CoefficientMap& c) {
  py::dict d;
  for (const auto& [t, w] : c) d[py::make_tuple(t.zoom, t.col, t.row)] = w;
  return d;
}

CoefficientMap coeff_map(const py::dict& d) {
  CoefficientMap c;
  for (const auto& [key, value] : d) {
    const auto t = key.cast<std::tuple<int, std::uint32_t, std::uint32_t>>();
    c[TileId{std::get<0>(t), std::get<1>(t), std::get<2>(t)}] = value.cast<double>();
  }
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sparse quadtree-tile density estimation";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<EmptyDataError>(m, "EmptyDataError", base.ptr());
  py::register_exception<ContractError>(m, "ContractError", base.ptr());
  py::register_exception<DegenerateDensityError>(m, "DegenerateDensityError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<SolverError>(m, "SolverError", base.ptr());

  py::class_<TileId>(m, "TileId")
      .def(py::init<int, std::uint32_t, std::uint32_t>(), py::arg("zoom"), py::arg("col"),
           py::arg("row"))
      .def_readonly("zoom", &TileId::zoom)
      .def_readonly("col", &TileId::col)
      .def_readonly("row", &TileId::row)
      .def("__eq__", [](const TileId& a, const TileId& b) { return a == b; })
      .def("__lt__", [](const TileId& a, const TileId& b) { return a < b; })
      .def("__hash__", [](const TileId& t) { return tile_index(t); })
      .def("__repr__", &TileId::to_string);

  m.def("tile_of", &tile_of, py::arg("col"), py::arg("row"), py::arg("zoom"), py::arg("depth"));
  m.def("tile_index", &tile_index);
  m.def("tile_at", &tile_at);
  m.def("dictionary_size", &dictionary_size);

  py::class_<Bounds>(m, "Bounds")
      .def(py::init<double, double, double, double>(), py::arg("x_min"), py::arg("x_max"),
           py::arg("y_min"), py::arg("y_max"))
      .def_readonly("x_min", &Bounds::x_min)
      .def_readonly("x_max", &Bounds::x_max)
      .def_readonly("y_min", &Bounds::y_min)
      .def_readonly("y_max", &Bounds::y_max);

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init<int, Bounds>(), py::arg("depth"), py::arg("bounds"))
      .def_static("covering",
                  [](py::array_t<double> xy, int depth) { return GridSpec::covering(to_points(xy), depth); },
                  py::arg("points"), py::arg("depth"))
      .def_property_readonly("depth", &GridSpec::depth)
      .def_property_readonly("bounds", &GridSpec::bounds)
      .def_property_readonly("side", &GridSpec::side)
      .def("locate", &GridSpec::locate);

  py::class_<SparseDensity>(m, "SparseDensity")
      .def(py::init([](const GridSpec& spec, const py::dict& coeffs) {
             return SparseDensity(spec, coeff_map(coeffs));
           }),
           py::arg("spec"), py::arg("coeffs"))
      .def_property_readonly("spec", &SparseDensity::spec)
      .def_property_readonly("depth", &SparseDensity::depth)
      .def_property_readonly("nnz", &SparseDensity::nnz)
      .def_property_readonly("coeffs", [](const SparseDensity& d) { return coeff_dict(d.coeffs()); })
      .def_property_readonly("lambda_star",
                             [](const SparseDensity& d) -> std::optional<double> {
                               if (!d.metadata()) return std::nullopt;
                               return d.metadata()->lambda_star;
                             })
      .def("to_grid", [](const SparseDensity& d) { return as_array(d.to_grid(), d.spec().side()); },
           "Cell values as a (rows, cols) array")
      .def("__eq__", [](const SparseDensity& a, const SparseDensity& b) { return a == b; });

  m.def(
      "fit_points",
      [](py::array_t<double> xy, int depth, std::optional<Bounds> bounds, double alpha,
         double delta, std::uint64_t seed, std::optional<double> bandwidth) {
        const auto pts = to_points(xy);
        const GridSpec spec = bounds ? GridSpec(depth, *bounds) : GridSpec::covering(pts, depth);
        FitConfig cfg;
        cfg.alpha = alpha;
        cfg.delta = delta;
        cfg.seed = seed;
        KdeConfig kde;
        if (bandwidth) kde.bandwidth_x = kde.bandwidth_y = *bandwidth;
        py::gil_scoped_release release;
        return fit_density(pts, spec, cfg, kde).density;
      },
      py::arg("points"), py::arg("depth"), py::arg("bounds") = py::none(), py::arg("alpha") = 0.5,
      py::arg("delta") = 0.001, py::arg("seed") = 1, py::arg("bandwidth") = py::none(),
      "Fit a sparse density to an (n, 2) array of points");

  m.def("eval_point", [](const SparseDensity& d, std::uint32_t col, std::uint32_t row) {
    return eval_point(d, col, row);
  });
  m.def(
      "region_sum",
      [](const SparseDensity& d, std::uint32_t c0, std::uint32_t c1, std::uint32_t r0,
         std::uint32_t r1) { return region_sum(d, CellRect{c0, c1, r0, r1}); },
      py::arg("density"), py::arg("col_min"), py::arg("col_max"), py::arg("row_min"),
      py::arg("row_max"));
  m.def(
      "union",
      [](const std::vector<std::pair<const SparseDensity*, double>>& entries, double delta) {
        std::vector<WeightedDensity> w;
        for (const auto& [d, p] : entries) w.push_back({d, p});
        return density_union(w, delta);
      },
      py::arg("entries"), py::arg("delta") = 0.001, "Mixture of (density, prior) pairs");
  m.def(
      "intersect",
      [](const SparseDensity& a, const SparseDensity& b, double delta) {
        return intersect(a, b, delta);
      },
      py::arg("a"), py::arg("b"), py::arg("delta") = 0.001);
  m.def("unique_values", &unique_values);
  m.def("tv_distance", [](const SparseDensity& a, const SparseDensity& b) {
    if (!(a.spec() == b.spec())) throw ArgumentError("densities live on different grids");
    return tv_distance(a, GridDensity(b.spec(), b.to_grid()));
  });

  m.def("save_density", &save_density);
  m.def("load_density", [](const std::string& text) { return load_density(text); });
  m.def("export_grid_csv", &export_grid_csv);
  m.def("export_tiles_geojson", &export_tiles_geojson);

  m.def(
      "sample_gmm6",
      [](std::size_t n, std::uint64_t seed) {
        const auto pts = sample_gmm(gmm6_fixture(seed), n);
        py::array_t<double> out({static_cast<py::ssize_t>(pts.size()), py::ssize_t{2}});
        auto w = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < pts.size(); ++i) {
          w(i, 0) = pts[i].x;
          w(i, 1) = pts[i].y;
        }
        return out;
      },
      py::arg("n"), py::arg("seed") = 20160407, "Points from the six-mode mixture on the unit square");
  m.def(
      "gmm6_truth",
      [](int depth, std::uint64_t seed) {
        const auto g = true_grid_density(gmm6_fixture(seed), GridSpec(depth, kUnitSquare));
        return as_array(g.values, g.spec.side());
      },
      py::arg("depth"), py::arg("seed") = 20160407);
  m.def(
      "run_experiment",
      [](std::size_t n, std::vector<int> depths, std::vector<double> alphas, std::uint64_t seed,
         unsigned jobs) {
        ExperimentConfig cfg;
        cfg.n_points = n;
        cfg.depths = std::move(depths);
        cfg.alphas = std::move(alphas);
        cfg.jobs = jobs;
        std::vector<ExperimentRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_experiment(gmm6_fixture(seed), cfg);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["k"] = r.k;
          d["alpha"] = r.alpha;
          d["tv"] = r.tv;
          d["nnz"] = r.nnz;
          d["tv_hist"] = r.tv_hist;
          out.append(d);
        }
        return out;
      },
      py::arg("n") = 200000, py::arg("depths") = std::vector<int>{3, 4, 5, 6, 7},
      py::arg("alphas") = std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0},
      py::arg("seed") = 20160407, py::arg("jobs") = 1);
}
