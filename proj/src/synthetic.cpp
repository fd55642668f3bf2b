#include "canyonpl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "canyonpl/error.hpp"
#include "canyonpl/pointcloud.hpp"
#include "canyonpl/rng.hpp"
#include "canyonpl/text_io.hpp"

namespace canyonpl {

void SceneConfig::validate() const {
  auto range = [](double lo, double hi, const char* what) {
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
      throw ConfigError(std::string(what) + " range must be positive with min <= max");
  };
  if (n_streets == 0) throw ConfigError("number of streets must be at least 1");
  range(length_min, length_max, "street length");
  range(width_min, width_max, "street width");
  range(rx_height_min, rx_height_max, "rx height");
  if (length_max > 500.0) throw ConfigError("street length cannot exceed 500 m (the facade patch extent)");
  if (links_min == 0 || links_max < links_min) throw ConfigError("links per street must satisfy 1 <= min <= max");
  if (!(min_link_distance > 0.0) || min_link_distance >= length_min)
    throw ConfigError("minimum link distance must be positive and below the shortest street length");
  if (!(both_sides_probability >= 0.0 && both_sides_probability <= 1.0))
    throw ConfigError("both-sides probability must lie in [0, 1]");
  if (!(tx_height > 0.0)) throw ConfigError("tx height must be positive");
  if (!(density_min >= 0.0) || !(density_max >= density_min) || !std::isfinite(density_max))
    throw ConfigError("clutter density range must satisfy 0 <= min <= max");
  if (!intensity.empty() && intensity.size() != n_streets)
    throw ConfigError("explicit clutter intensities need one value per street");
  for (double v : intensity)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("clutter intensity must be finite and non-negative");
  if (!(point_scale >= 0.0) || !std::isfinite(point_scale)) throw ConfigError("point scale must be non-negative");
  const auto& c = clutter;
  if (c.trees_per_100m < 0 || c.lamps_per_100m < 0 || c.vehicles_per_100m < 0)
    throw ConfigError("clutter densities must be non-negative");
}

namespace {

double mm(double v) { return std::round(v * 1000.0) / 1000.0; }

Vec3 mm(Vec3 v) { return {mm(v.x), mm(v.y), mm(v.z)}; }

std::size_t object_count(double per_100m, double intensity, double extent, Rng& rng) {
  const double expected = per_100m * intensity * extent / 100.0;
  return static_cast<std::size_t>(std::floor(expected + rng.uniform()));
}

std::size_t point_count(std::size_t base, double scale) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(base) * scale));
}

void add_tree(std::vector<Vec3>& pts, double x, double y, std::size_t n, Rng& rng) {
  const Vec3 centre{x, y, rng.uniform(4.0, 7.0)};
  const double rx = rng.uniform(1.5, 3.0);
  const double ry = rng.uniform(1.5, 3.0);
  const double rz = rng.uniform(1.5, 2.5);
  for (std::size_t i = 0; i < n; ++i) {
    double u, v, w, len;
    do {
      u = rng.normal();
      v = rng.normal();
      w = rng.normal();
      len = std::sqrt(u * u + v * v + w * w);
    } while (len < 1e-12);
    pts.push_back({centre.x + rx * u / len, centre.y + ry * v / len, centre.z + rz * w / len});
  }
}

void add_lamp(std::vector<Vec3>& pts, double x, double y, std::size_t n, Rng& rng) {
  const double top = rng.uniform(6.0, 9.0);
  for (std::size_t i = 0; i < n; ++i)
    pts.push_back({x + rng.uniform(-0.05, 0.05), y + rng.uniform(-0.05, 0.05), rng.uniform(0.0, top)});
}

void add_vehicle(std::vector<Vec3>& pts, double x, double y, std::size_t n, Rng& rng) {
  const double len = rng.uniform(4.0, 5.5);
  const double wid = rng.uniform(1.7, 2.0);
  const double hgt = rng.uniform(1.4, 2.2);
  for (std::size_t i = 0; i < n; ++i)
    pts.push_back({x + rng.uniform(-len / 2, len / 2), y + rng.uniform(-wid / 2, wid / 2), rng.uniform(0.0, hgt)});
}

std::string street_name(std::size_t i) {
  std::ostringstream s;
  s << 'S' << std::setw(2) << std::setfill('0') << i + 1;
  return s.str();
}

std::string link_name(const std::string& street, std::size_t i) {
  std::ostringstream s;
  s << street << "-L" << std::setw(3) << std::setfill('0') << i + 1;
  return s.str();
}

}  // namespace

double clutter_points_per_metre(const ClutterDensity& d) {
  return 2.0 * (d.trees_per_100m * static_cast<double>(d.points_per_tree) +
                d.lamps_per_100m * static_cast<double>(d.points_per_lamp) +
                d.vehicles_per_100m * static_cast<double>(d.points_per_vehicle)) /
         100.0;
}

Dataset generate_scene(const SceneConfig& config, std::uint64_t seed) {
  config.validate();
  Dataset out;
  for (std::size_t si = 0; si < config.n_streets; ++si) {
    Rng rng(Rng::derive(seed, si));
    StreetScene street;
    auto& meta = street.meta;
    meta.street_id = street_name(si);
    const double length = rng.uniform(config.length_min, config.length_max);
    meta.width = mm(rng.uniform(config.width_min, config.width_max));
    meta.rx_height = mm(rng.uniform(config.rx_height_min, config.rx_height_max));
    meta.buildings_both_sides = rng.uniform() < config.both_sides_probability;
    meta.rx_world_position = mm(Vec3{rng.uniform(-2000.0, 2000.0), rng.uniform(-2000.0, 2000.0), rng.uniform(0.0, 10.0)});
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    meta.street_axis = {std::cos(heading), std::sin(heading)};
    const double target = rng.uniform(config.density_min, config.density_max);
    const double per_metre = clutter_points_per_metre(config.clutter);
    // Every clutter object stays below the lowest Rx height, so the expected
    // density over the street box is per_metre * intensity / (width * height).
    const double intensity = !config.intensity.empty() ? config.intensity[si]
                             : per_metre > 0.0      ? target * meta.width * meta.rx_height / per_metre
                                                    : 0.0;
    const double half = meta.width / 2.0;

    // Clutter, street frame, over the layout plus a short margin at each end.
    const double x0 = -10.0;
    const double x1 = length + 10.0;
    const auto& d = config.clutter;
    std::vector<Vec3> pts;
    for (double side : {-1.0, 1.0}) {
      const auto trees = object_count(d.trees_per_100m, intensity, x1 - x0, rng);
      for (std::size_t i = 0; i < trees; ++i)
        add_tree(pts, rng.uniform(x0, x1), side * (half - 2.5), point_count(d.points_per_tree, config.point_scale),
                 rng);
      const auto lamps = object_count(d.lamps_per_100m, intensity, x1 - x0, rng);
      for (std::size_t i = 0; i < lamps; ++i)
        add_lamp(pts, rng.uniform(x0, x1), side * (half - 1.0), point_count(d.points_per_lamp, config.point_scale),
                 rng);
      const auto cars = object_count(d.vehicles_per_100m, intensity, x1 - x0, rng);
      for (std::size_t i = 0; i < cars; ++i)
        add_vehicle(pts, rng.uniform(x0, x1), side * (half - 4.5),
                    point_count(d.points_per_vehicle, config.point_scale), rng);
    }
    street.cloud.frame = Frame::world;
    street.cloud.points.reserve(pts.size());
    for (const auto& p : pts) street.cloud.points.push_back(mm(street_to_world(p, meta)));

    // Buildings: a row of rectangles along each built-up side.
    std::vector<double> sides;
    if (meta.buildings_both_sides) sides = {-1.0, 1.0};
    else sides = {rng.uniform() < 0.5 ? -1.0 : 1.0};
    for (double side : sides) {
      double x = x0;
      while (x < x1) {
        const double len = rng.uniform(15.0, 60.0);
        const double depth = rng.uniform(12.0, 30.0);
        const double height = mm(rng.uniform(11.0, 93.0));
        const double ya = side * half;
        const double yb = side * (half + depth);
        BuildingFootprint fp;
        fp.height = height;
        for (Vec2 c : {Vec2{x, ya}, Vec2{x + len, ya}, Vec2{x + len, yb}, Vec2{x, yb}}) {
          const Vec2 w = street_to_world(c, meta);
          fp.polygon.push_back({mm(w.x), mm(w.y)});
        }
        street.footprints.push_back(std::move(fp));
        x += len + rng.uniform(0.0, 4.0);
      }
    }

    // Links on the sidewalk line, Tx at handset height.
    const auto n_links = config.links_min + static_cast<std::size_t>(rng.below(config.links_max - config.links_min + 1));
    const double tx_y = half - 2.0;
    const double dz = meta.rx_height - config.tx_height;
    const double reach = std::sqrt(std::max(0.0, 500.0 * 500.0 - tx_y * tx_y - dz * dz)) - 0.01;
    const double x_max = std::min(length, reach);
    if (x_max <= config.min_link_distance)
      throw ConfigError("street " + meta.street_id + " is too short for its link layout");
    std::vector<Vec3> txs;
    for (std::size_t i = 0; i < n_links; ++i) {
      const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
      txs.push_back(mm(Vec3{rng.uniform(config.min_link_distance, x_max), side * tx_y, config.tx_height}));
    }
    std::sort(txs.begin(), txs.end(), [](const Vec3& a, const Vec3& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    for (std::size_t i = 0; i < txs.size(); ++i) {
      LinkRecord link;
      link.link_id = link_name(meta.street_id, i);
      link.street_id = meta.street_id;
      link.tx_position = txs[i];
      link.d1d = txs[i].x;
      link.d3d = distance(txs[i], meta.rx_street_position());
      out.links.push_back(std::move(link));
    }
    out.streets.push_back(std::move(street));
  }
  validate(out);
  return out;
}

void generate_pl(Dataset& dataset, const FeatureTable& clutter, const GroundTruthPL& truth, std::uint64_t seed) {
  if (clutter.rows() != dataset.links.size()) throw InvariantError("clutter features do not cover every link");
  if (!(truth.noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  if (truth.saturation != 0.0 && !(truth.saturation_scale > 0.0))
    throw ConfigError("saturation scale must be positive");
  const auto cps = static_cast<Eigen::Index>(clutter.column_index("clutter_per_street"));
  const auto cpl = static_cast<Eigen::Index>(clutter.column_index("clutter_per_link"));
  const auto both = static_cast<Eigen::Index>(clutter.column_index("both_sides"));
  Rng rng(seed);
  for (std::size_t i = 0; i < dataset.links.size(); ++i) {
    auto& link = dataset.links[i];
    if (clutter.link_ids[i] != link.link_id) throw InvariantError("clutter rows are not in dataset link order");
    const auto r = static_cast<Eigen::Index>(i);
    double pl = truth.a + 10.0 * truth.n * std::log10(link.d3d) + truth.beta_street * clutter.values(r, cps) +
                truth.beta_link * clutter.values(r, cpl) + truth.gamma_canyon * clutter.values(r, both);
    if (truth.saturation != 0.0) pl += truth.saturation * std::tanh(clutter.values(r, cpl) / truth.saturation_scale);
    if (truth.noise_sigma > 0.0) pl += truth.noise_sigma * rng.normal();
    link.measured_pl = pl;
  }
}

void save_truth(const std::filesystem::path& path, const SceneConfig& c, const GroundTruthPL& t, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["scene"] = {{"n_streets", c.n_streets},
                {"length", {c.length_min, c.length_max}},
                {"width", {c.width_min, c.width_max}},
                {"rx_height", {c.rx_height_min, c.rx_height_max}},
                {"both_sides_probability", c.both_sides_probability},
                {"links", {c.links_min, c.links_max}},
                {"min_link_distance", c.min_link_distance},
                {"tx_height", c.tx_height},
                {"density", {c.density_min, c.density_max}},
                {"explicit_intensity", c.intensity},
                {"point_scale", c.point_scale},
                {"clutter",
                 {{"trees_per_100m", c.clutter.trees_per_100m},
                  {"lamps_per_100m", c.clutter.lamps_per_100m},
                  {"vehicles_per_100m", c.clutter.vehicles_per_100m},
                  {"points_per_tree", c.clutter.points_per_tree},
                  {"points_per_lamp", c.clutter.points_per_lamp},
                  {"points_per_vehicle", c.clutter.points_per_vehicle}}}};
  j["path_loss"] = {{"a", t.a},
                    {"n", t.n},
                    {"beta_street", t.beta_street},
                    {"beta_link", t.beta_link},
                    {"gamma_canyon", t.gamma_canyon},
                    {"noise_sigma", t.noise_sigma},
                    {"saturation", t.saturation},
                    {"saturation_scale", t.saturation_scale}};
  auto out = text::open_for_write(path);
  out << j.dump(2) << '\n';
}

}  // namespace canyonpl
