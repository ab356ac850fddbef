#include "tilefit/persistence.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tilefit/density_algebra.hpp"
#include "tilefit/error.hpp"

namespace tilefit {

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("density document: missing field '") + key + "'");
  return *it;
}

double require_real(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError("density document: " + where + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ParseError("density document: " + where + " is not finite");
  return x;
}

std::int64_t require_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ParseError("density document: " + where + " must be an integer");
  return v.get<std::int64_t>();
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, end);
}

std::string save_density(const SparseDensity& d) {
  const auto& b = d.spec().bounds();
  std::ostringstream out;
  out << "{\n";
  out << "  \"format_version\": " << kFormatVersion << ",\n";
  out << "  \"k\": " << d.depth() << ",\n";
  out << "  \"bounds\": {\"x_min\": " << format_real(b.x_min)
      << ", \"x_max\": " << format_real(b.x_max) << ", \"y_min\": " << format_real(b.y_min)
      << ", \"y_max\": " << format_real(b.y_max) << "},\n";
  if (const auto& m = d.metadata()) {
    out << "  \"alpha\": " << format_real(m->alpha) << ",\n";
    out << "  \"delta\": " << format_real(m->delta) << ",\n";
    out << "  \"lambda_star\": " << format_real(m->lambda_star) << ",\n";
  }
  out << "  \"tiles\": [";
  bool first = true;
  for (const auto& [t, w] : d.coeffs()) {
    out << (first ? "\n" : ",\n") << "    [" << t.zoom << ", " << t.col << ", " << t.row << ", "
        << format_real(w) << "]";
    first = false;
  }
  out << (first ? "]\n" : "\n  ]\n");
  out << "}\n";
  return out.str();
}

SparseDensity load_density(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("density document: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("density document: top level must be an object");

  const auto version = require_int(require(doc, "format_version"), "format_version");
  if (version != kFormatVersion) {
    throw ParseError("density document: unsupported format_version " + std::to_string(version));
  }
  const auto depth = require_int(require(doc, "k"), "k");
  if (depth < 0 || depth > kMaxDepth) throw ParseError("density document: k out of range");
  const auto& jb = require(doc, "bounds");
  if (!jb.is_object()) throw ParseError("density document: bounds must be an object");
  Bounds bounds{require_real(require(jb, "x_min"), "bounds.x_min"),
                require_real(require(jb, "x_max"), "bounds.x_max"),
                require_real(require(jb, "y_min"), "bounds.y_min"),
                require_real(require(jb, "y_max"), "bounds.y_max")};
  std::optional<GridSpec> spec;
  try {
    spec.emplace(static_cast<int>(depth), bounds);
  } catch (const ArgumentError& e) {
    throw ParseError(std::string("density document: ") + e.what());
  }

  std::optional<FitMetadata> meta;
  const bool has_alpha = doc.contains("alpha"), has_delta = doc.contains("delta"),
             has_lambda = doc.contains("lambda_star");
  if (has_alpha || has_delta || has_lambda) {
    if (!(has_alpha && has_delta && has_lambda)) {
      throw ParseError("density document: alpha, delta and lambda_star must appear together");
    }
    meta = FitMetadata{require_real(doc["alpha"], "alpha"), require_real(doc["delta"], "delta"),
                       require_real(doc["lambda_star"], "lambda_star")};
  }

  const auto& tiles = require(doc, "tiles");
  if (!tiles.is_array()) throw ParseError("density document: tiles must be an array");
  CoefficientMap coeffs;
  std::optional<TileId> prev;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const std::string where = "tiles[" + std::to_string(i) + "]";
    const auto& row = tiles[i];
    if (!row.is_array() || row.size() != 4) {
      throw ParseError("density document: " + where + " must be [zoom, col, row, weight]");
    }
    const auto zoom = require_int(row[0], where + " zoom");
    const auto col = require_int(row[1], where + " col");
    const auto rw = require_int(row[2], where + " row");
    const double w = require_real(row[3], where + " weight");
    if (zoom < 0 || zoom > depth || col < 0 || rw < 0 || col >= (std::int64_t{1} << zoom) ||
        rw >= (std::int64_t{1} << zoom)) {
      throw ParseError("density document: " + where + " is not a valid tile at k=" +
                       std::to_string(depth));
    }
    if (w == 0.0) throw ParseError("density document: " + where + " has zero weight");
    const TileId t{static_cast<int>(zoom), static_cast<std::uint32_t>(col),
                   static_cast<std::uint32_t>(rw)};
    if (prev && !(*prev < t)) {
      throw ParseError("density document: " + where + (*prev == t ? " duplicates " : " is out of order after ") +
                       prev->to_string());
    }
    prev = t;
    coeffs.emplace(t, w);
  }

  SparseDensity d(*spec, std::move(coeffs), meta);
  if (d.nnz() == 0) throw ParseError("density document: no tiles");
  if (std::abs(d.weight_sum() - 1.0) > 1e-9) {
    throw ParseError("density document: tile weights sum to " + format_real(d.weight_sum()) +
                     ", expected 1");
  }
  if (min_value(d) < -1e-12) throw ParseError("density document: some cell values are negative");
  return d;
}

void save_density_file(const SparseDensity& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << save_density(d);
  if (!out) throw ParseError("failed writing " + path);
}

SparseDensity load_density_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open density file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return load_density(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string export_grid_csv(const SparseDensity& d) {
  const auto values = d.to_grid();
  const std::uint32_t side = d.spec().side();
  std::ostringstream out;
  out << "col,row,value\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << (i % side) << ',' << (i / side) << ',' << format_real(values[i]) << '\n';
  }
  return out.str();
}

std::string export_tiles_geojson(const SparseDensity& d) {
  json features = json::array();
  for (const auto& [t, w] : d.coeffs()) {
    const auto box = d.spec().tile_box(t);
    json ring = json::array({json::array({box.x0, box.y0}), json::array({box.x1, box.y0}),
                             json::array({box.x1, box.y1}), json::array({box.x0, box.y1}),
                             json::array({box.x0, box.y0})});
    json feature = {
        {"type", "Feature"},
        {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring})}}},
        {"properties",
         {{"zoom", t.zoom},
          {"col", t.col},
          {"row", t.row},
          {"weight", w},
          {"cell_value", w / static_cast<double>(tile_cell_count(t, d.depth()))}}}};
    features.push_back(std::move(feature));
  }
  json fc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  return fc.dump(1) + "\n";
}

}  // namespace tilefit
