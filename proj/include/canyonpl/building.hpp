#pragma once

// Building footprints -> street-frame height map -> per-link facade patches.

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "canyonpl/scene.hpp"

namespace canyonpl {

inline constexpr Eigen::Index kPatchRows = 500;  // 1 m along the street
inline constexpr Eigen::Index kPatchCols = 40;   // 20 m each side of the centre line
inline constexpr double kPatchHalfWidth = 20.0;

// Building height per 1 m x 1 m street-frame cell. Row i covers x in [i, i+1),
// column j covers y in [-20 + j, -19 + j).
struct HeightMap {
  Eigen::MatrixXd heights = Eigen::MatrixXd::Zero(kPatchRows, kPatchCols);
};

// A kPatchRows x kPatchCols matrix; raw heights in metres or normalized to [0, 1].
struct FacadePatch {
  Eigen::MatrixXd values;
  bool normalized = false;
};

// Cellwise min/max of the training patches.
class GridScaler {
 public:
  static GridScaler fit(std::span<const FacadePatch> train);

  // (v - min) / (max - min), degenerate cells -> 0, result clamped to [0, 1].
  FacadePatch normalize(const FacadePatch& patch) const;
  FacadePatch denormalize(const FacadePatch& patch) const;

  const Eigen::MatrixXd& min() const { return min_; }
  const Eigen::MatrixXd& max() const { return max_; }

  GridScaler() = default;
  GridScaler(Eigen::MatrixXd min, Eigen::MatrixXd max);

 private:
  Eigen::MatrixXd min_;
  Eigen::MatrixXd max_;
};

// Cell value = tallest footprint whose polygon contains the cell centre (even-odd rule).
HeightMap collapse_buildings(std::span<const BuildingFootprint> footprints, const StreetMeta& street);

// Rows below floor(d1d) copy the height map; the remainder is zero padding.
FacadePatch facade_patch(const HeightMap& map, const LinkRecord& link);

bool point_in_polygon(Vec2 p, std::span<const Vec2> polygon);

// Raw patches for every link of the dataset, in link order.
std::vector<FacadePatch> extract_patches(const Dataset& dataset);

// One row per patch: id followed by 500*40 values in row-major order.
void save_patches_csv(const std::filesystem::path& path, std::span<const std::string> ids,
                      std::span<const FacadePatch> patches);

void require_patch_shape(const Eigen::MatrixXd& m);

}  // namespace canyonpl
