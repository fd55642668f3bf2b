#pragma once

// The seven expert street-clutter features per link.

#include <array>
#include <map>
#include <string>
#include <string_view>

#include "canyonpl/features.hpp"
#include "canyonpl/pointcloud.hpp"
#include "canyonpl/scene.hpp"

namespace canyonpl {

// Canonical column order for every clutter matrix, weight vector and report.
enum class ClutterFeature : std::size_t {
  log3d = 0,
  log1d = 1,
  street_width = 2,
  clutter_per_link = 3,
  clutter_per_street = 4,
  rx_height = 5,
  both_sides = 6,
};

inline constexpr std::size_t kClutterFeatureCount = 7;

inline constexpr std::array<std::string_view, kClutterFeatureCount> kClutterColumns = {
    "log3d", "log1d", "street_width", "clutter_per_link", "clutter_per_street", "rx_height", "both_sides"};

// The four most influential clutter features, in canonical order.
inline constexpr std::array<ClutterFeature, 4> kClutter4 = {ClutterFeature::log3d, ClutterFeature::clutter_per_link,
                                                            ClutterFeature::clutter_per_street,
                                                            ClutterFeature::both_sides};

// A street's cloud after alignment (and optionally denoising), with its voxel index.
struct StreetClutter {
  PointCloud cloud;  // street frame
  VoxelGrid grid;
};

StreetClutter prepare_street_clutter(const StreetScene& street, const DenoiseParams& params, bool denoise = true);

// Points per cubic metre inside [0, furthest_tx_1d] x [-w/2, w/2] x [0, rx_height].
double clutter_per_street(const PointCloud& cloud, const StreetMeta& street, double furthest_tx_1d);

// Points inside the 1 m cubes crossed by the Tx-Rx segment.
std::size_t clutter_per_link(const VoxelGrid& grid, Vec3 tx, Vec3 rx);

// One row per dataset link, canonical columns, target = measured path loss.
FeatureTable assemble_clutter(const Dataset& dataset, const std::map<std::string, StreetClutter>& clutter);

// Convenience: prepare every street and assemble.
FeatureTable extract_clutter_features(const Dataset& dataset, const DenoiseParams& params, bool denoise = true);

}  // namespace canyonpl
