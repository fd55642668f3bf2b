#pragma once

// Point-cloud preprocessing and spatial indexing: street-frame alignment,
// statistical kNN outlier removal, a 1 m voxel grid and segment traversal.

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "canyonpl/scene.hpp"

namespace canyonpl {

struct DenoiseParams {
  std::size_t k = 16;
  double alpha = 2.0;
};

struct CubeIndex {
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::int64_t k = 0;

  friend bool operator==(const CubeIndex&, const CubeIndex&) = default;
  friend auto operator<=>(const CubeIndex&, const CubeIndex&) = default;
};

struct CubeIndexHash {
  std::size_t operator()(const CubeIndex& c) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(c.i) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(c.j) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(c.k) + 0x94D049BB133111EBULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// Axis-aligned box; membership is half-open, min <= p < max.
struct Box {
  Vec3 min;
  Vec3 max;

  bool contains(Vec3 p) const {
    return min.x <= p.x && p.x < max.x && min.y <= p.y && p.y < max.y && min.z <= p.z && p.z < max.z;
  }
  double volume() const { return (max.x - min.x) * (max.y - min.y) * (max.z - min.z); }
};

// Sparse occupancy counts over 1 m cubes. Cube (i,j,k) covers
// [origin + (i,j,k), origin + (i+1,j+1,k+1)).
class VoxelGrid {
 public:
  explicit VoxelGrid(Vec3 origin = {}) : origin_(origin) {}

  void add(Vec3 p);
  CubeIndex cube_of(Vec3 p) const;
  std::size_t count(const CubeIndex& c) const;
  std::size_t total() const { return total_; }
  std::size_t occupied_cubes() const { return counts_.size(); }
  Vec3 origin() const { return origin_; }
  const std::unordered_map<CubeIndex, std::size_t, CubeIndexHash>& counts() const { return counts_; }

 private:
  Vec3 origin_;
  std::unordered_map<CubeIndex, std::size_t, CubeIndexHash> counts_;
  std::size_t total_ = 0;
};

// Median-split KD-tree over a borrowed point array.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  // The k nearest points to `query` as (squared distance, index), nearest
  // first. `exclude` is skipped (pass the query's own index, or SIZE_MAX).
  std::vector<std::pair<double, std::size_t>> nearest(Vec3 query, std::size_t k,
                                                      std::size_t exclude = static_cast<std::size_t>(-1)) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = -1;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, Vec3 q, std::size_t k, std::size_t exclude,
              std::vector<std::pair<double, std::size_t>>& heap) const;

  std::span<const Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

Vec3 world_to_street(Vec3 p, const StreetMeta& street);
Vec3 street_to_world(Vec3 p, const StreetMeta& street);
Vec2 world_to_street(Vec2 p, const StreetMeta& street);
Vec2 street_to_world(Vec2 p, const StreetMeta& street);

// Moves the Rx ground location to the origin and rotates about Z so the
// street axis becomes +X.
PointCloud to_street_frame(const PointCloud& cloud, const StreetMeta& street);

// Mean distance from each point to its k nearest neighbours (self excluded).
std::vector<double> knn_mean_distances(const PointCloud& cloud, std::size_t k);

// Statistical outlier removal: drops points whose mean kNN distance exceeds
// mean + alpha * std (population) over the cloud. Order is preserved.
PointCloud knn_denoise(const PointCloud& cloud, const DenoiseParams& params);

VoxelGrid build_voxel_grid(const PointCloud& cloud);

// Cubes crossed by the open segment (a, b), ordered from a to b. When the
// segment passes exactly through an edge or corner the traversal steps X
// before Y before Z, so the zero-length cube touched there is included.
std::vector<CubeIndex> traverse_segment(const VoxelGrid& grid, Vec3 a, Vec3 b);

std::size_t count_in_box(const PointCloud& cloud, const Box& box);
// Grid counts are only exact for boxes aligned to cube boundaries; others throw.
std::size_t count_in_box(const VoxelGrid& grid, const Box& box);

}  // namespace canyonpl
