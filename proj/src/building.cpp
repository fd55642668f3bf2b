#include "canyonpl/building.hpp"

#include <algorithm>
#include <cmath>

#include "canyonpl/error.hpp"
#include "canyonpl/pointcloud.hpp"
#include "canyonpl/text_io.hpp"

namespace canyonpl {

void require_patch_shape(const Eigen::MatrixXd& m) {
  if (m.rows() != kPatchRows || m.cols() != kPatchCols)
    throw ShapeError("facade patch must be 500 x 40, got " + std::to_string(m.rows()) + " x " +
                     std::to_string(m.cols()));
}

GridScaler::GridScaler(Eigen::MatrixXd min, Eigen::MatrixXd max) : min_(std::move(min)), max_(std::move(max)) {
  require_patch_shape(min_);
  require_patch_shape(max_);
  if ((min_.array() > max_.array()).any()) throw InvariantError("grid scaler min exceeds max");
}

GridScaler GridScaler::fit(std::span<const FacadePatch> train) {
  if (train.empty()) throw InvariantError("grid scaler needs at least one training patch");
  Eigen::MatrixXd lo = train.front().values;
  Eigen::MatrixXd hi = train.front().values;
  for (const auto& p : train) {
    require_patch_shape(p.values);
    if (p.normalized) throw InvariantError("grid scaler must be fitted on raw patches");
    lo = lo.cwiseMin(p.values);
    hi = hi.cwiseMax(p.values);
  }
  return {std::move(lo), std::move(hi)};
}

FacadePatch GridScaler::normalize(const FacadePatch& patch) const {
  require_patch_shape(patch.values);
  if (patch.normalized) throw InvariantError("patch is already normalized");
  FacadePatch out;
  out.normalized = true;
  out.values.resize(kPatchRows, kPatchCols);
  for (Eigen::Index c = 0; c < kPatchCols; ++c) {
    for (Eigen::Index r = 0; r < kPatchRows; ++r) {
      const double range = max_(r, c) - min_(r, c);
      const double v = range > 0.0 ? (patch.values(r, c) - min_(r, c)) / range : 0.0;
      out.values(r, c) = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

FacadePatch GridScaler::denormalize(const FacadePatch& patch) const {
  require_patch_shape(patch.values);
  if (!patch.normalized) throw InvariantError("patch is not normalized");
  FacadePatch out;
  out.values = (patch.values.array() * (max_ - min_).array() + min_.array()).matrix();
  return out;
}

bool point_in_polygon(Vec2 p, std::span<const Vec2> poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

HeightMap collapse_buildings(std::span<const BuildingFootprint> footprints, const StreetMeta& street) {
  HeightMap map;
  for (const auto& fp : footprints) {
    std::vector<Vec2> local;
    local.reserve(fp.polygon.size());
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& v : fp.polygon) {
      const Vec2 s = world_to_street(v, street);
      local.push_back(s);
      xmin = std::min(xmin, s.x);
      xmax = std::max(xmax, s.x);
      ymin = std::min(ymin, s.y);
      ymax = std::max(ymax, s.y);
    }
    // Only cells whose centre can fall inside the bounding box are tested.
    const auto r0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(xmin - 0.5)));
    const auto r1 = std::min<Eigen::Index>(kPatchRows - 1, static_cast<Eigen::Index>(std::ceil(xmax - 0.5)));
    const auto c0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(ymin + kPatchHalfWidth - 0.5)));
    const auto c1 =
        std::min<Eigen::Index>(kPatchCols - 1, static_cast<Eigen::Index>(std::ceil(ymax + kPatchHalfWidth - 0.5)));
    for (Eigen::Index r = r0; r <= r1; ++r) {
      for (Eigen::Index c = c0; c <= c1; ++c) {
        const Vec2 centre{static_cast<double>(r) + 0.5, -kPatchHalfWidth + static_cast<double>(c) + 0.5};
        if (point_in_polygon(centre, local)) map.heights(r, c) = std::max(map.heights(r, c), fp.height);
      }
    }
  }
  return map;
}

FacadePatch facade_patch(const HeightMap& map, const LinkRecord& link) {
  require_patch_shape(map.heights);
  if (!(link.d1d > 0.0)) throw InvariantError("link d1d must be positive");
  if (link.d1d > static_cast<double>(kPatchRows)) throw InvariantError("link d1d exceeds 500 m");
  const auto filled = static_cast<Eigen::Index>(std::floor(link.d1d));
  FacadePatch patch;
  patch.values = Eigen::MatrixXd::Zero(kPatchRows, kPatchCols);
  patch.values.topRows(filled) = map.heights.topRows(filled);
  return patch;
}

std::vector<FacadePatch> extract_patches(const Dataset& dataset) {
  std::vector<HeightMap> maps;
  for (const auto& s : dataset.streets) maps.push_back(collapse_buildings(s.footprints, s.meta));
  std::vector<FacadePatch> out;
  out.reserve(dataset.links.size());
  for (const auto& link : dataset.links) {
    std::size_t idx = 0;
    while (dataset.streets[idx].meta.street_id != link.street_id) ++idx;
    out.push_back(facade_patch(maps[idx], link));
  }
  return out;
}

void save_patches_csv(const std::filesystem::path& path, std::span<const std::string> ids,
                      std::span<const FacadePatch> patches) {
  if (ids.size() != patches.size()) throw InvariantError("patch ids and patches differ in length");
  auto out = text::open_for_write(path);
  out << "link_id";
  for (Eigen::Index r = 0; r < kPatchRows; ++r)
    for (Eigen::Index c = 0; c < kPatchCols; ++c) out << ",c" << r << '_' << c;
  out << '\n';
  for (std::size_t i = 0; i < patches.size(); ++i) {
    require_patch_shape(patches[i].values);
    out << ids[i];
    for (Eigen::Index r = 0; r < kPatchRows; ++r)
      for (Eigen::Index c = 0; c < kPatchCols; ++c) out << ',' << text::format_double(patches[i].values(r, c));
    out << '\n';
  }
}

}  // namespace canyonpl
