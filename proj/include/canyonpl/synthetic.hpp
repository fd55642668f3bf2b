#pragma once

// Seeded synthetic street scenes with a known path-loss generator.
//
// Each street is laid out in its own frame (Rx ground point at the origin,
// +X along the street) and then placed in the world with a random offset and
// heading. Clutter is sampled as point sets: trees are ellipsoidal canopy
// shells, lampposts vertical lines, vehicles solid boxes along the curb.
// Buildings are rectangles lining one or both sides of the street.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "canyonpl/features.hpp"
#include "canyonpl/scene.hpp"

namespace canyonpl {

struct ClutterDensity {
  double trees_per_100m = 10.0;   // per street side
  double lamps_per_100m = 4.0;
  double vehicles_per_100m = 8.0;
  std::size_t points_per_tree = 4000;
  std::size_t points_per_lamp = 200;
  std::size_t points_per_vehicle = 1500;
};

struct SceneConfig {
  std::size_t n_streets = 13;
  double length_min = 250.0;  // extent of the link layout along the street
  double length_max = 480.0;
  double width_min = 15.0;
  double width_max = 38.0;
  double rx_height_min = 15.0;
  double rx_height_max = 54.0;
  double both_sides_probability = 0.5;
  std::size_t links_min = 49;
  std::size_t links_max = 131;
  double min_link_distance = 10.0;  // smallest d1d
  double tx_height = 1.5;
  ClutterDensity clutter;
  // Each street draws a target clutter-per-street density (points per m^3 at
  // point_scale 1) from this range; its clutter multiplier is then set from
  // the street's width and Rx height so the expected density hits the target.
  double density_min = 0.6;
  double density_max = 4.5;
  // Explicit clutter multipliers (one per street) replace the drawn targets.
  std::vector<double> intensity;
  // Multiplies every per-object point count; < 1 gives light test fixtures.
  double point_scale = 1.0;

  void validate() const;  // throws ConfigError
};

// Clutter points per metre of street (both sides) at multiplier 1, point_scale 1.
double clutter_points_per_metre(const ClutterDensity& density);

// pl = A + 10 n log10(d3d) + beta_street*CPS + beta_link*CPL + gamma_canyon*both_sides
//      + saturation*tanh(CPL / saturation_scale) + N(0, noise_sigma^2)
struct GroundTruthPL {
  double a = 46.9;
  double n = 3.1;
  double beta_street = 2.0;
  double beta_link = 0.01;
  double gamma_canyon = -3.0;
  double noise_sigma = 6.3;
  double saturation = 0.0;  // optional nonlinear clutter term, off by default
  double saturation_scale = 100.0;
};

// Streets, clouds, footprints and link geometry. measured_pl is left at 0.
Dataset generate_scene(const SceneConfig& config, std::uint64_t seed);

// Fills measured_pl from clutter features computed on the same dataset
// (rows in dataset link order).
void generate_pl(Dataset& dataset, const FeatureTable& clutter, const GroundTruthPL& truth, std::uint64_t seed);

// Generator parameters and seeds, written next to a synthesized dataset.
void save_truth(const std::filesystem::path& path, const SceneConfig& config, const GroundTruthPL& truth,
                std::uint64_t seed);

}  // namespace canyonpl
