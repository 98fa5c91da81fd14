#include "driftscan/geojson.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace driftscan {
namespace {

using nlohmann::json;

json load_collection(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(LoadErrorKind::kIo, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array())
    throw SchemaError(path.string() + ": expected a GeoJSON FeatureCollection");
  return doc;
}

Pixel vertex(const json& position, CoordinateSpace space, const GeoTransform& gt,
             int width, int height, const std::filesystem::path& path) {
  if (!position.is_array() || position.size() < 2 || !position[0].is_number() ||
      !position[1].is_number())
    throw SchemaError(path.string() + ": malformed position");
  const Pixel p = to_pixel_index(position[0].get<double>(), position[1].get<double>(),
                                 space, gt);
  if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height)
    throw InvalidArgument(path.string() + ": coordinate outside the scene");
  return p;
}

Label parse_label(const json& props) {
  for (const char* key : {"label", "class"}) {
    if (!props.is_object() || !props.contains(key)) continue;
    const json& v = props[key];
    if (v.is_number()) return v.get<double>() != 0.0 ? Label::kDebris : Label::kOther;
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "debris" || s == "marine_debris" || s == "marine debris") return Label::kDebris;
      if (s == "other") return Label::kOther;
      throw SchemaError("unknown point label '" + s + "'");
    }
  }
  throw SchemaError("point feature lacks a label property");
}

}  // namespace

CoordinateSpace parse_coordinate_space(std::string_view text) {
  if (text == "pixel") return CoordinateSpace::kPixel;
  if (text == "map") return CoordinateSpace::kMap;
  throw InvalidArgument("coordinate space must be 'pixel' or 'map'");
}

Pixel to_pixel_index(double cx, double cy, CoordinateSpace space,
                     const GeoTransform& geotransform) {
  if (space == CoordinateSpace::kMap) {
    const auto px = geotransform.to_pixel(cx, cy);
    cx = px[0];
    cy = px[1];
  }
  if (!std::isfinite(cx) || !std::isfinite(cy))
    throw InvalidArgument("non-finite coordinate");
  return {static_cast<int>(std::floor(cx)), static_cast<int>(std::floor(cy))};
}

LineAnnotationSet read_line_annotations(const std::filesystem::path& path,
                                        CoordinateSpace space, const GeoTransform& gt,
                                        int width, int height) {
  const json doc = load_collection(path);
  LineAnnotationSet set;
  auto add_line = [&](const json& coords) {
    if (!coords.is_array()) throw SchemaError(path.string() + ": malformed LineString");
    Polyline line;
    for (const auto& pos : coords) line.push_back(vertex(pos, space, gt, width, height, path));
    set.lines.push_back(std::move(line));
  };
  for (const auto& f : doc["features"]) {
    if (!f.contains("geometry") || f["geometry"].is_null()) continue;
    const json& g = f["geometry"];
    const std::string type = g.value("type", "");
    if (type == "LineString") {
      add_line(g["coordinates"]);
    } else if (type == "MultiLineString") {
      for (const auto& part : g["coordinates"]) add_line(part);
    }
  }
  set.validate(width, height);
  return set;
}

PointAnnotationSet read_point_annotations(const std::filesystem::path& path,
                                          CoordinateSpace space, const GeoTransform& gt,
                                          int width, int height) {
  const json doc = load_collection(path);
  PointAnnotationSet set;
  for (const auto& f : doc["features"]) {
    if (!f.contains("geometry") || f["geometry"].is_null()) continue;
    if (f["geometry"].value("type", "") != "Point") continue;
    const Pixel p = vertex(f["geometry"]["coordinates"], space, gt, width, height, path);
    set.points.push_back({p, parse_label(f.value("properties", json::object()))});
  }
  set.validate(width, height);
  return set;
}

std::vector<Pixel> read_point_locations(const std::filesystem::path& path,
                                        CoordinateSpace space, const GeoTransform& gt,
                                        int width, int height) {
  const json doc = load_collection(path);
  std::vector<Pixel> out;
  for (const auto& f : doc["features"]) {
    if (!f.contains("geometry") || f["geometry"].is_null()) continue;
    if (f["geometry"].value("type", "") != "Point") continue;
    out.push_back(vertex(f["geometry"]["coordinates"], space, gt, width, height, path));
  }
  return out;
}

}  // namespace driftscan
