#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "tilefit/tilefit.hpp"

using namespace tilefit;

namespace {

std::string tile_doc(const std::string& tiles) {
  return "{\"format_version\": 1, \"k\": 2, \"bounds\": {\"x_min\": 0, \"x_max\": 1, \"y_min\": 0, "
         "\"y_max\": 1}, \"tiles\": [" +
         tiles + "]}";
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("a one-tile document") {
  const SparseDensity root(GridSpec(2, kUnitSquare), {{kRootTile, 1.0}});
  const auto text = save_density(root);
  const auto doc = nlohmann::json::parse(text);
  CHECK(doc["format_version"] == kFormatVersion);
  CHECK(doc["k"] == 2);
  REQUIRE(doc["tiles"].size() == 1);
  CHECK(doc["tiles"][0] == nlohmann::json::array({0, 0, 0, 1}));
  CHECK_FALSE(doc.contains("alpha"));
  CHECK(load_density(text) == root);
  CHECK(load_density(tile_doc("[0, 0, 0, 1]")) == root);
}

TEST_CASE("save and load are exact inverses") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + trial % 7;
    auto b = oracle::random_coeffs(std::min(k, 5), 1 + trial % 40, 1e-6, 1.0, rng);
    const SparseDensity d(GridSpec(k, {u(rng), 10.0 + u(rng), u(rng), 20.0 + u(rng)}), normalize(b),
                          trial % 2 ? std::optional<FitMetadata>{{0.25 * (trial % 5), 0.001, u(rng) + 6.0}}
                                    : std::nullopt);
    const auto text = save_density(d);
    const auto back = load_density(text);
    CHECK(back == d);
    CHECK(save_density(back) == text);
    CHECK(save_density(d) == text);
  }
}

TEST_CASE("fitted documents stay small") {
  const auto pts = sample_gmm(gmm6_fixture(), 50000);
  const auto fit = fit_density(pts, GridSpec(5, kUnitSquare), FitConfig{});
  const auto text = save_density(fit.density);
  const auto doc = nlohmann::json::parse(text);
  CHECK(doc["tiles"].size() == fit.density.nnz());
  CHECK(doc["tiles"].size() <= 1000);
  CHECK(count_lines(text) <= fit.density.nnz() + 20);
  CHECK(doc.contains("lambda_star"));
}

TEST_CASE("malformed documents are rejected with a location") {
  CHECK_THROWS_AS(load_density("not json"), ParseError);
  CHECK_THROWS_AS(load_density("[]"), ParseError);
  CHECK_THROWS_AS(load_density(tile_doc("")), ParseError);
  CHECK_THROWS_AS(load_density(tile_doc("[0, 0, 0, 0.5], [0, 0, 0, 0.5]")), ParseError);
  CHECK_THROWS_AS(load_density(tile_doc("[1, 0, 0, 0.5], [0, 0, 0, 0.5]")), ParseError);
  CHECK_THROWS_AS(load_density(tile_doc("[3, 0, 0, 1]")), ParseError);
  CHECK_THROWS_AS(load_density(tile_doc("[1, 2, 0, 1]")), ParseError);
  CHECK_THROWS_AS(load_density(tile_doc("[0, 0, 0, 0.7]")), ParseError);
  CHECK_THROWS_AS(load_density(tile_doc("[0, 0, 0, 1, 5]")), ParseError);
  CHECK_THROWS_AS(load_density(tile_doc("[0, 0, 0, 2], [1, 0, 0, -4]")), ParseError);
  CHECK_THROWS_AS(load_density(tile_doc("[0, 0, 0, 1], [1, 1, 0, 0]")), ParseError);
  CHECK_THROWS_AS(
      load_density("{\"format_version\": 9, \"k\": 2, \"bounds\": {\"x_min\": 0, \"x_max\": 1, "
                   "\"y_min\": 0, \"y_max\": 1}, \"tiles\": [[0, 0, 0, 1]]}"),
      ParseError);
  try {
    load_density(tile_doc("[0, 0, 0, 0.5], [1, 1, 0, 0.25], [1, 0, 0, 0.25]"));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("tiles[2]") != std::string::npos);
  }
}

TEST_CASE("files round-trip and report the path on failure") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "tilefit_persistence_test.density").string();
  const SparseDensity d(GridSpec(3, kUnitSquare), {{kRootTile, 0.75}, {{2, 1, 3}, 0.25}});
  save_density_file(d, path);
  CHECK(load_density_file(path) == d);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_density_file(path), ParseError);
}

TEST_CASE("grid export") {
  const SparseDensity root(GridSpec(1, kUnitSquare), {{kRootTile, 1.0}});
  const auto csv = export_grid_csv(root);
  CHECK(csv == "col,row,value\n0,0,0.25\n1,0,0.25\n0,1,0.25\n1,1,0.25\n");

  std::mt19937_64 rng(32);
  const auto d = oracle::random_density(4, 20, rng);
  std::istringstream in(export_grid_csv(d));
  std::string line;
  std::getline(in, line);
  double total = 0.0;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    total += std::stod(line.substr(line.rfind(',') + 1));
    ++rows;
  }
  CHECK(rows == 256);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("tile polygon export") {
  const SparseDensity d(GridSpec(3, {0.0, 8.0, 0.0, 8.0}), {{kRootTile, 0.5}, {{1, 1, 0}, 0.5}});
  const auto doc = nlohmann::json::parse(export_tiles_geojson(d));
  CHECK(doc["type"] == "FeatureCollection");
  REQUIRE(doc["features"].size() == d.nnz());
  const auto& f = doc["features"][1];
  CHECK(f["properties"]["zoom"] == 1);
  CHECK(f["properties"]["col"] == 1);
  CHECK(f["properties"]["row"] == 0);
  CHECK(f["properties"]["weight"].get<double>() == 0.5);
  CHECK(f["properties"]["cell_value"].get<double>() == 0.5 / 16.0);
  const auto ring = f["geometry"]["coordinates"][0];
  double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
  for (const auto& p : ring) {
    x0 = std::min(x0, p[0].get<double>());
    x1 = std::max(x1, p[0].get<double>());
    y0 = std::min(y0, p[1].get<double>());
    y1 = std::max(y1, p[1].get<double>());
  }
  CHECK(x0 == 4.0);
  CHECK(x1 == 8.0);
  CHECK(y0 == 0.0);
  CHECK(y1 == 4.0);
}
