#include "canyonpl/clutter.hpp"

#include <algorithm>
#include <cmath>

#include "canyonpl/error.hpp"

namespace canyonpl {

StreetClutter prepare_street_clutter(const StreetScene& street, const DenoiseParams& params, bool denoise) {
  StreetClutter out;
  out.cloud = to_street_frame(street.cloud, street.meta);
  if (denoise && out.cloud.size() > params.k) out.cloud = knn_denoise(out.cloud, params);
  out.grid = build_voxel_grid(out.cloud);
  return out;
}

double clutter_per_street(const PointCloud& cloud, const StreetMeta& street, double furthest_tx_1d) {
  if (!(furthest_tx_1d > 0.0)) throw InvariantError("furthest Tx distance must be positive");
  if (cloud.frame != Frame::street) throw InvariantError("clutter-per-street needs a street-frame cloud");
  const Box box{{0.0, -street.width / 2.0, 0.0}, {furthest_tx_1d, street.width / 2.0, street.rx_height}};
  const double volume = box.volume();
  if (!(volume > 0.0)) throw InvariantError("zero clutter volume");
  if (cloud.empty()) return 0.0;
  return static_cast<double>(count_in_box(cloud, box)) / volume;
}

std::size_t clutter_per_link(const VoxelGrid& grid, Vec3 tx, Vec3 rx) {
  std::size_t total = 0;
  for (const auto& cube : traverse_segment(grid, tx, rx)) total += grid.count(cube);
  return total;
}

FeatureTable assemble_clutter(const Dataset& dataset, const std::map<std::string, StreetClutter>& clutter) {
  std::map<std::string, double> density;
  for (const auto& s : dataset.streets) {
    const auto it = clutter.find(s.meta.street_id);
    if (it == clutter.end()) throw InvariantError("no point cloud prepared for street '" + s.meta.street_id + "'");
    double furthest = 0.0;
    for (auto i : dataset.link_indices(s.meta.street_id)) furthest = std::max(furthest, dataset.links[i].d1d);
    density[s.meta.street_id] = furthest > 0.0 ? clutter_per_street(it->second.cloud, s.meta, furthest) : 0.0;
  }

  FeatureTable t;
  for (auto c : kClutterColumns) t.columns.emplace_back(c);
  const auto n = static_cast<Eigen::Index>(dataset.links.size());
  t.values.resize(n, static_cast<Eigen::Index>(kClutterFeatureCount));
  t.target.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& link = dataset.links[static_cast<std::size_t>(r)];
    const auto& street = dataset.street(link.street_id).meta;
    const auto& sc = clutter.at(link.street_id);
    t.link_ids.push_back(link.link_id);
    t.street_ids.push_back(link.street_id);
    t.values(r, 0) = std::log10(link.d3d);
    t.values(r, 1) = std::log10(link.d1d);
    t.values(r, 2) = street.width;
    t.values(r, 3) = static_cast<double>(clutter_per_link(sc.grid, link.tx_position, street.rx_street_position()));
    t.values(r, 4) = density.at(link.street_id);
    t.values(r, 5) = street.rx_height;
    t.values(r, 6) = street.buildings_both_sides ? 1.0 : 0.0;
    t.target[r] = link.measured_pl;
  }
  return t;
}

FeatureTable extract_clutter_features(const Dataset& dataset, const DenoiseParams& params, bool denoise) {
  std::map<std::string, StreetClutter> clutter;
  for (const auto& s : dataset.streets) clutter.emplace(s.meta.street_id, prepare_street_clutter(s, params, denoise));
  return assemble_clutter(dataset, clutter);
}

}  // namespace canyonpl
