#include "canyonpl/scene.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "canyonpl/error.hpp"
#include "canyonpl/text_io.hpp"

namespace canyonpl {

namespace {

constexpr double kMaxLinkDistance = 500.0;
constexpr double kDistanceTolerance = 1e-6;

const char* kStreetsHeader = "street_id,width,rx_height,both_sides,rx_wx,rx_wy,rx_wz,axis_x,axis_y";
const char* kLinksHeader = "link_id,street_id,tx_x,tx_y,tx_z,d1d,d3d,pl_db";

double cross(Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool on_segment(Vec2 p, Vec2 a, Vec2 b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

// Closed-segment intersection including touching and collinear overlap.
bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const int d1 = sign(cross(q1, q2, p1));
  const int d2 = sign(cross(q1, q2, p2));
  const int d3 = sign(cross(p1, p2, q1));
  const int d4 = sign(cross(p1, p2, q2));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(p1, q1, q2)) return true;
  if (d2 == 0 && on_segment(p2, q1, q2)) return true;
  if (d3 == 0 && on_segment(q1, p1, p2)) return true;
  if (d4 == 0 && on_segment(q2, p1, p2)) return true;
  return false;
}

void expect_header(std::string_view got, const char* expected, std::size_t line) {
  if (got != expected)
    throw ParseError("unexpected header (expected '" + std::string(expected) + "')", line);
}

}  // namespace

const StreetScene& Dataset::street(const std::string& street_id) const {
  for (const auto& s : streets)
    if (s.meta.street_id == street_id) return s;
  throw InvariantError("unknown street_id '" + street_id + "'");
}

std::vector<std::string> Dataset::street_ids() const {
  std::vector<std::string> ids;
  ids.reserve(streets.size());
  for (const auto& s : streets) ids.push_back(s.meta.street_id);
  return ids;
}

std::vector<std::size_t> Dataset::link_indices(const std::string& street_id) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < links.size(); ++i)
    if (links[i].street_id == street_id) out.push_back(i);
  return out;
}

void validate(const LinkRecord& link) {
  if (!std::isfinite(link.measured_pl)) throw InvariantError("link " + link.link_id + ": non-finite path loss");
  if (!std::isfinite(link.d1d) || !std::isfinite(link.d3d))
    throw InvariantError("link " + link.link_id + ": non-finite distance");
  if (link.d1d <= 0.0) throw InvariantError("link " + link.link_id + ": d1d must be positive");
  if (link.d3d < link.d1d) throw InvariantError("link " + link.link_id + ": d3d < d1d");
  if (link.d3d > kMaxLinkDistance) throw InvariantError("link " + link.link_id + ": d3d exceeds 500 m");
}

void validate(const StreetMeta& street) {
  if (!(street.width > 0.0)) throw InvariantError("street " + street.street_id + ": width must be positive");
  if (!(street.rx_height > 0.0))
    throw InvariantError("street " + street.street_id + ": rx_height must be positive");
  const double n = std::hypot(street.street_axis.x, street.street_axis.y);
  if (std::abs(n - 1.0) > 1e-9)
    throw InvariantError("street " + street.street_id + ": street axis is not a unit vector");
}

bool is_simple_polygon(std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a1 = polygon[i];
    const Vec2 a2 = polygon[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2 b1 = polygon[j];
      const Vec2 b2 = polygon[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // Shared vertex is fine; folding back along the same line is not.
        const Vec2 shared = (j == i + 1) ? a2 : a1;
        const Vec2 other_a = (j == i + 1) ? a1 : a2;
        const Vec2 other_b = (j == i + 1) ? b2 : b1;
        if (sign(cross(shared, other_a, other_b)) == 0) {
          const double dot = (other_a.x - shared.x) * (other_b.x - shared.x) +
                             (other_a.y - shared.y) * (other_b.y - shared.y);
          if (dot > 0.0) return false;
        }
        continue;
      }
      if (segments_intersect(a1, a2, b1, b2)) return false;
    }
  }
  return true;
}

void validate(const BuildingFootprint& footprint) {
  if (!(footprint.height > 0.0)) throw InvariantError("footprint height must be positive");
  if (footprint.polygon.size() < 3) throw InvariantError("footprint needs at least 3 vertices");
  for (const auto& v : footprint.polygon)
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw InvariantError("footprint vertex is not finite");
  if (!is_simple_polygon(footprint.polygon)) throw InvariantError("footprint polygon is self-intersecting");
}

void validate(const Dataset& dataset) {
  std::set<std::string> street_ids;
  for (const auto& s : dataset.streets) {
    validate(s.meta);
    if (!street_ids.insert(s.meta.street_id).second)
      throw InvariantError("duplicate street_id '" + s.meta.street_id + "'");
  }
  std::set<std::string> link_ids;
  for (const auto& l : dataset.links) {
    validate(l);
    if (!street_ids.count(l.street_id)) throw InvariantError("unknown street_id '" + l.street_id + "'");
    if (!link_ids.insert(l.link_id).second) throw InvariantError("duplicate link_id '" + l.link_id + "'");
  }
}

std::vector<StreetMeta> load_streets(const std::filesystem::path& path) {
  std::vector<StreetMeta> out;
  bool header = true;
  text::for_each_record(path, [&](std::string_view line, std::size_t number) {
    if (header) {
      expect_header(line, kStreetsHeader, number);
      header = false;
      return;
    }
    const auto f = text::split(line, ',');
    if (f.size() != 9) throw ParseError("expected 9 fields, got " + std::to_string(f.size()), number);
    StreetMeta s;
    s.street_id = std::string(f[0]);
    if (s.street_id.empty()) throw ParseError("empty street_id", number);
    s.width = text::parse_double(f[1], number, "width");
    s.rx_height = text::parse_double(f[2], number, "rx_height");
    const auto both = text::parse_int(f[3], number, "both_sides");
    if (both != 0 && both != 1) throw ParseError("both_sides must be 0 or 1", number);
    s.buildings_both_sides = both == 1;
    s.rx_world_position = {text::parse_double(f[4], number), text::parse_double(f[5], number),
                           text::parse_double(f[6], number)};
    s.street_axis = {text::parse_double(f[7], number), text::parse_double(f[8], number)};
    try {
      validate(s);
    } catch (const InvariantError& e) {
      throw ParseError(e.what(), number);
    }
    for (const auto& prev : out)
      if (prev.street_id == s.street_id) throw ParseError("duplicate street_id '" + s.street_id + "'", number);
    out.push_back(std::move(s));
  });
  if (header) throw ParseError("missing header", 0);
  return out;
}

std::vector<LinkRecord> load_links(const std::filesystem::path& path, std::span<const StreetMeta> streets) {
  std::map<std::string, const StreetMeta*> by_id;
  for (const auto& s : streets) by_id[s.street_id] = &s;

  std::vector<LinkRecord> out;
  std::map<std::string, std::size_t> seen;
  bool header = true;
  text::for_each_record(path, [&](std::string_view line, std::size_t number) {
    if (header) {
      expect_header(line, kLinksHeader, number);
      header = false;
      return;
    }
    const auto f = text::split(line, ',');
    if (f.size() != 8) throw ParseError("expected 8 fields, got " + std::to_string(f.size()), number);
    LinkRecord l;
    l.link_id = std::string(f[0]);
    l.street_id = std::string(f[1]);
    if (l.link_id.empty()) throw ParseError("empty link_id", number);
    l.tx_position = {text::parse_double(f[2], number, "tx_x"), text::parse_double(f[3], number, "tx_y"),
                     text::parse_double(f[4], number, "tx_z")};
    l.d1d = text::parse_double(f[5], number, "d1d");
    l.d3d = text::parse_double(f[6], number, "d3d");
    l.measured_pl = text::parse_double(f[7], number, "pl_db");

    if (auto it = seen.find(l.link_id); it != seen.end())
      throw ParseError("duplicate link_id '" + l.link_id + "' (first seen at line " +
                           std::to_string(it->second) + ")",
                       number);
    seen[l.link_id] = number;

    const auto street = by_id.find(l.street_id);
    if (street == by_id.end()) throw ParseError("unknown street_id '" + l.street_id + "'", number);
    if (l.d3d < l.d1d) throw ParseError("d3d < d1d", number);
    try {
      validate(l);
    } catch (const InvariantError& e) {
      throw ParseError(e.what(), number);
    }
    const double recomputed = distance(l.tx_position, street->second->rx_street_position());
    if (std::abs(recomputed - l.d3d) > kDistanceTolerance)
      throw ParseError("d3d does not match Tx/Rx positions (stored " + text::format_double(l.d3d) +
                           ", recomputed " + text::format_double(recomputed) + ")",
                       number);
    out.push_back(std::move(l));
  });
  if (header) throw ParseError("missing header", 0);
  return out;
}

PointCloud load_pointcloud(const std::filesystem::path& path) {
  PointCloud cloud;
  cloud.frame = Frame::world;
  text::for_each_record(path, [&](std::string_view line, std::size_t number) {
    const auto f = text::split_ws(line);
    if (f.size() != 3) throw ParseError("expected 3 coordinates", number);
    cloud.points.push_back({text::parse_double(f[0], number, "coordinate"),
                            text::parse_double(f[1], number, "coordinate"),
                            text::parse_double(f[2], number, "coordinate")});
  });
  return cloud;
}

std::vector<BuildingFootprint> load_footprints(const std::filesystem::path& path) {
  std::vector<BuildingFootprint> out;
  text::for_each_record(path, [&](std::string_view line, std::size_t number) {
    const auto semi = line.find(';');
    if (semi == std::string_view::npos) throw ParseError("missing ';' after height", number);
    BuildingFootprint fp;
    fp.height = text::parse_double(line.substr(0, semi), number, "height");
    for (auto vertex : text::split_ws(line.substr(semi + 1))) {
      const auto xy = text::split(vertex, ',');
      if (xy.size() != 2) throw ParseError("vertex must be 'x,y'", number);
      fp.polygon.push_back({text::parse_double(xy[0], number, "x"), text::parse_double(xy[1], number, "y")});
    }
    try {
      validate(fp);
    } catch (const InvariantError& e) {
      throw ParseError(e.what(), number);
    }
    out.push_back(std::move(fp));
  });
  return out;
}

void save_streets(const std::filesystem::path& path, std::span<const StreetMeta> streets) {
  auto out = text::open_for_write(path);
  out << kStreetsHeader << '\n';
  using text::format_double;
  for (const auto& s : streets) {
    out << s.street_id << ',' << format_double(s.width) << ',' << format_double(s.rx_height) << ','
        << (s.buildings_both_sides ? 1 : 0) << ',' << format_double(s.rx_world_position.x) << ','
        << format_double(s.rx_world_position.y) << ',' << format_double(s.rx_world_position.z) << ','
        << format_double(s.street_axis.x) << ',' << format_double(s.street_axis.y) << '\n';
  }
}

void save_links(const std::filesystem::path& path, std::span<const LinkRecord> links) {
  auto out = text::open_for_write(path);
  out << kLinksHeader << '\n';
  using text::format_double;
  for (const auto& l : links) {
    out << l.link_id << ',' << l.street_id << ',' << format_double(l.tx_position.x) << ','
        << format_double(l.tx_position.y) << ',' << format_double(l.tx_position.z) << ','
        << format_double(l.d1d) << ',' << format_double(l.d3d) << ',' << format_double(l.measured_pl) << '\n';
  }
}

void save_pointcloud(const std::filesystem::path& path, const PointCloud& cloud) {
  if (cloud.frame != Frame::world) throw InvariantError("only world-frame clouds are persisted");
  auto out = text::open_for_write(path);
  std::string buf;
  for (const auto& p : cloud.points) {
    buf.clear();
    buf += text::format_double(p.x);
    buf += ' ';
    buf += text::format_double(p.y);
    buf += ' ';
    buf += text::format_double(p.z);
    buf += '\n';
    out << buf;
  }
}

void save_footprints(const std::filesystem::path& path, std::span<const BuildingFootprint> footprints) {
  auto out = text::open_for_write(path);
  for (const auto& fp : footprints) {
    out << text::format_double(fp.height) << ';';
    for (const auto& v : fp.polygon) out << ' ' << text::format_double(v.x) << ',' << text::format_double(v.y);
    out << '\n';
  }
}

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  validate(dataset);
  std::filesystem::create_directories(dir);
  std::vector<StreetMeta> metas;
  for (const auto& s : dataset.streets) {
    metas.push_back(s.meta);
    save_pointcloud(dir / (s.meta.street_id + ".xyz"), s.cloud);
    save_footprints(dir / (s.meta.street_id + ".fpl"), s.footprints);
  }
  save_streets(dir / "streets.csv", metas);
  save_links(dir / "links.csv", dataset.links);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  const auto metas = load_streets(dir / "streets.csv");
  ds.links = load_links(dir / "links.csv", metas);
  for (const auto& m : metas) {
    StreetScene scene;
    scene.meta = m;
    const auto xyz = dir / (m.street_id + ".xyz");
    const auto fpl = dir / (m.street_id + ".fpl");
    if (!std::filesystem::exists(xyz)) throw Error("missing point cloud " + xyz.string());
    scene.cloud = load_pointcloud(xyz);
    if (std::filesystem::exists(fpl)) scene.footprints = load_footprints(fpl);
    ds.streets.push_back(std::move(scene));
  }
  validate(ds);
  return ds;
}

}  // namespace canyonpl
