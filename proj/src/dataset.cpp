#include "spconv/dataset.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace spconv {

std::string_view to_string(CoordinateSystem cs) {
  return cs == CoordinateSystem::PlanarKm ? "planar_km" : "lonlat_degrees";
}

CoordinateSystem parse_coordinate_system(std::string_view text) {
  if (text == "planar_km" || text == "planar") return CoordinateSystem::PlanarKm;
  if (text == "lonlat_degrees" || text == "lonlat") return CoordinateSystem::LonLatDegrees;
  throw DataError("unknown coordinate system '" + std::string(text) +
                  "' (expected planar_km or lonlat_degrees)");
}

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.id);
  return out;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

namespace {

void check_record(const RegionRecord& r, const std::string& where) {
  if (r.id.empty()) throw DataError(where + ": empty region id");
  if (!std::isfinite(r.x) || !std::isfinite(r.y))
    throw DataError(where + ": region '" + r.id + "' has non-finite coordinates");
  if (!(r.p0 > 0.0) || !std::isfinite(r.p0))
    throw DataError(where + ": region '" + r.id + "' has non-positive initial product p0");
  if (!(r.pt > 0.0) || !std::isfinite(r.pt))
    throw DataError(where + ": region '" + r.id + "' has non-positive final product pt");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    auto field = trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (field.size() >= 2 && field.front() == '"' && field.back() == '"')
      field = field.substr(1, field.size() - 2);
    fields.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

void validate(const Dataset& dataset) {
  if (dataset.records.size() < 3)
    throw DataError("dataset needs at least 3 regions, got " +
                    std::to_string(dataset.records.size()));
  if (!(dataset.period_length > 0.0) || !std::isfinite(dataset.period_length))
    throw DataError("period length T must be positive");
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& r = dataset.records[i];
    check_record(r, "region " + std::to_string(i + 1));
    if (!seen.emplace(r.id, i).second) throw DataError("duplicate region id '" + r.id + "'");
  }
}

Dataset read_csv(std::istream& in, double period_length, CoordinateSystem cs) {
  Dataset ds;
  ds.period_length = period_length;
  ds.coordinates = cs;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::unordered_map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (!header_seen) {
      static const char* expected[] = {"id", "x", "y", "p0", "pt"};
      if (fields.size() != 5) throw ParseError("header must be id,x,y,p0,pt", line_no);
      for (int k = 0; k < 5; ++k)
        if (fields[k] != expected[k]) throw ParseError("header must be id,x,y,p0,pt", line_no);
      header_seen = true;
      continue;
    }
    if (fields.size() != 5)
      throw ParseError("expected 5 fields, found " + std::to_string(fields.size()), line_no);
    RegionRecord r;
    r.id = std::string(fields[0]);
    double* targets[] = {&r.x, &r.y, &r.p0, &r.pt};
    static const char* names[] = {"x", "y", "p0", "pt"};
    for (int k = 0; k < 4; ++k) {
      const auto v = parse_double(fields[k + 1]);
      if (!v) throw ParseError("region '" + r.id + "': invalid number in column " + names[k], line_no);
      *targets[k] = *v;
    }
    try {
      check_record(r, "row");
    } catch (const DataError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!seen.emplace(r.id, line_no).second)
      throw ParseError("duplicate region id '" + r.id + "'", line_no);
    ds.records.push_back(std::move(r));
  }
  if (!header_seen) throw ParseError("missing header id,x,y,p0,pt", 0);
  validate(ds);
  return ds;
}

Dataset read_csv_file(const std::string& path, double period_length, CoordinateSystem cs) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input '" + path + "'");
  return read_csv(in, period_length, cs);
}

void write_csv(std::ostream& out, const Dataset& dataset) {
  out << "id,x,y,p0,pt\n";
  for (const auto& r : dataset.records)
    out << r.id << ',' << format_double(r.x) << ',' << format_double(r.y) << ','
        << format_double(r.p0) << ',' << format_double(r.pt) << '\n';
}

Dataset read_geojson_points(std::istream& in, double period_length, CoordinateSystem cs) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid GeoJSON: ") + e.what(), 0);
  }
  if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features"))
    throw DataError("GeoJSON input must be a FeatureCollection");
  Dataset ds;
  ds.period_length = period_length;
  ds.coordinates = cs;
  std::size_t k = 0;
  for (const auto& f : doc["features"]) {
    ++k;
    const std::string where = "feature " + std::to_string(k);
    const auto& geom = f.at("geometry");
    if (geom.value("type", "") != "Point")
      throw DataError(where + ": only Point geometries are accepted");
    const auto& props = f.at("properties");
    RegionRecord r;
    const auto& id = props.at("id");
    r.id = id.is_string() ? id.get<std::string>() : id.dump();
    r.x = geom.at("coordinates").at(0).get<double>();
    r.y = geom.at("coordinates").at(1).get<double>();
    r.p0 = props.at("p0").get<double>();
    r.pt = props.at("pt").get<double>();
    ds.records.push_back(std::move(r));
  }
  validate(ds);
  return ds;
}

std::string dataset_digest(const Dataset& dataset) {
  std::ostringstream canon;
  write_csv(canon, dataset);
  canon << "T=" << format_double(dataset.period_length) << ";cs=" << to_string(dataset.coordinates);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : canon.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xF];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string("fnv1a64:") + buf;
}

}  // namespace spconv
