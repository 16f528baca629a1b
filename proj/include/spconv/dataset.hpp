#pragma once

#include "spconv/common.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spconv {

enum class CoordinateSystem { PlanarKm, LonLatDegrees };

std::string_view to_string(CoordinateSystem cs);
CoordinateSystem parse_coordinate_system(std::string_view text);

/// One region: centroid plus product at the initial and final period.
struct RegionRecord {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  double p0 = 1.0;
  double pt = 1.0;
};

struct Dataset {
  std::vector<RegionRecord> records;
  double period_length = 1.0;  // T, in years
  CoordinateSystem coordinates = CoordinateSystem::PlanarKm;

  Index size() const { return static_cast<Index>(records.size()); }
  std::vector<std::string> ids() const;
};

/// Checks record count, positivity of products, finiteness, id uniqueness
/// and T > 0. Throws DataError naming the offending region.
void validate(const Dataset& dataset);

/// Reads `id,x,y,p0,pt` CSV (header mandatory). Validation failures throw
/// ParseError carrying the 1-based line number.
Dataset read_csv(std::istream& in, double period_length, CoordinateSystem cs);
Dataset read_csv_file(const std::string& path, double period_length, CoordinateSystem cs);

void write_csv(std::ostream& out, const Dataset& dataset);

/// Reads a GeoJSON FeatureCollection of Point features whose properties
/// carry `id`, `p0` and `pt`.
Dataset read_geojson_points(std::istream& in, double period_length, CoordinateSystem cs);

/// FNV-1a 64 over the canonical CSV form plus T and coordinate system.
std::string dataset_digest(const Dataset& dataset);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
std::optional<double> parse_double(std::string_view text);

}  // namespace spconv
