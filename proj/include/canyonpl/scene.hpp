#pragma once

// Domain data model for street scenes and the text formats used to persist it.
//
// File formats (UTF-8, '#' starts a comment line, blank lines ignored):
//   streets.csv  street_id,width,rx_height,both_sides,rx_wx,rx_wy,rx_wz,axis_x,axis_y
//   links.csv    link_id,street_id,tx_x,tx_y,tx_z,d1d,d3d,pl_db
//   <id>.xyz     one "x y z" triple per line, world frame
//   <id>.fpl     one footprint per line: "height; x1,y1 x2,y2 ..." world frame
//
// Tx positions are stored in the street frame, where the Rx sits at
// (0, 0, rx_height) and +X runs along the street.

#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace canyonpl {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double norm(Vec3 v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

enum class Frame { world, street };

struct LinkRecord {
  std::string link_id;
  std::string street_id;
  Vec3 tx_position;  // street frame
  double measured_pl = 0.0;  // dB
  double d3d = 0.0;
  double d1d = 0.0;
};

struct StreetMeta {
  std::string street_id;
  double width = 0.0;
  double rx_height = 0.0;
  bool buildings_both_sides = false;
  Vec3 rx_world_position;  // ground location of the Rx, world frame
  Vec2 street_axis{1.0, 0.0};

  Vec3 rx_street_position() const { return {0.0, 0.0, rx_height}; }
};

struct PointCloud {
  std::vector<Vec3> points;
  Frame frame = Frame::world;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct BuildingFootprint {
  std::vector<Vec2> polygon;  // world frame
  double height = 0.0;
};

struct StreetScene {
  StreetMeta meta;
  PointCloud cloud;  // world frame
  std::vector<BuildingFootprint> footprints;
};

struct Dataset {
  std::vector<StreetScene> streets;
  std::vector<LinkRecord> links;

  const StreetScene& street(const std::string& street_id) const;
  std::vector<std::string> street_ids() const;
  // Indices into `links` for one street, in file order.
  std::vector<std::size_t> link_indices(const std::string& street_id) const;
};

// Invariant checks. Each throws InvariantError describing the violation.
void validate(const LinkRecord& link);
void validate(const StreetMeta& street);
void validate(const BuildingFootprint& footprint);
void validate(const Dataset& dataset);

// True when no two edges of the closed polygon cross or overlap.
bool is_simple_polygon(std::span<const Vec2> polygon);

std::vector<StreetMeta> load_streets(const std::filesystem::path& path);
// d3d is re-derived from the Tx and the street's Rx and must match within 1e-6 m.
std::vector<LinkRecord> load_links(const std::filesystem::path& path,
                                   std::span<const StreetMeta> streets);
PointCloud load_pointcloud(const std::filesystem::path& path);
std::vector<BuildingFootprint> load_footprints(const std::filesystem::path& path);

void save_streets(const std::filesystem::path& path, std::span<const StreetMeta> streets);
void save_links(const std::filesystem::path& path, std::span<const LinkRecord> links);
void save_pointcloud(const std::filesystem::path& path, const PointCloud& cloud);
void save_footprints(const std::filesystem::path& path,
                     std::span<const BuildingFootprint> footprints);

// Directory layout: streets.csv, links.csv, <street_id>.xyz, <street_id>.fpl.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace canyonpl
