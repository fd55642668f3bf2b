#include "canyonpl/pointcloud.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "canyonpl/error.hpp"

namespace canyonpl {

namespace {

constexpr std::uint32_t kLeafSize = 12;

double coord(Vec3 p, int axis) { return axis == 0 ? p.x : (axis == 1 ? p.y : p.z); }

std::int64_t floor_index(double v) { return static_cast<std::int64_t>(std::floor(v)); }

bool is_integral(double v) { return std::floor(v) == v; }

}  // namespace

void VoxelGrid::add(Vec3 p) {
  ++counts_[cube_of(p)];
  ++total_;
}

CubeIndex VoxelGrid::cube_of(Vec3 p) const {
  return {floor_index(p.x - origin_.x), floor_index(p.y - origin_.y), floor_index(p.z - origin_.z)};
}

std::size_t VoxelGrid::count(const CubeIndex& c) const {
  const auto it = counts_.find(c);
  return it == counts_.end() ? 0 : it->second;
}

KdTree::KdTree(std::span<const Vec3> points) : points_(points) {
  if (points.size() >= std::numeric_limits<std::uint32_t>::max()) throw Error("point cloud too large");
  order_.resize(points.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  nodes_.reserve(2 * points.size() / kLeafSize + 1);
  if (!points.empty()) build(0, static_cast<std::uint32_t>(points.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, -1, 0.0});
  if (end - begin <= kLeafSize) return id;

  // Split the widest dimension at its median.
  std::array<double, 3> lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity()};
  std::array<double, 3> hi{-lo[0], -lo[1], -lo[2]};
  for (std::uint32_t i = begin; i < end; ++i) {
    const Vec3 p = points_[order_[i]];
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], coord(p, a));
      hi[a] = std::max(hi[a], coord(p, a));
    }
  }
  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
  if (hi[axis] - lo[axis] <= 0.0) return id;  // all points coincide

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = coord(points_[a], axis);
                     const double cb = coord(points_[b], axis);
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = coord(points_[order_[mid]], axis);
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::search(std::int32_t node_id, Vec3 q, std::size_t k, std::size_t exclude,
                    std::vector<std::pair<double, std::size_t>>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      if (idx == exclude) continue;
      const Vec3 d = points_[idx] - q;
      const double d2 = d.x * d.x + d.y * d.y + d.z * d.z;
      const std::pair<double, std::size_t> cand{d2, idx};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  const double diff = coord(q, node.axis) - node.split;
  const std::int32_t near = diff < 0.0 ? node.left : node.right;
  const std::int32_t far = diff < 0.0 ? node.right : node.left;
  search(near, q, k, exclude, heap);
  if (heap.size() < k || diff * diff <= heap.front().first) search(far, q, k, exclude, heap);
}

std::vector<std::pair<double, std::size_t>> KdTree::nearest(Vec3 query, std::size_t k, std::size_t exclude) const {
  std::vector<std::pair<double, std::size_t>> heap;
  if (nodes_.empty() || k == 0) return heap;
  heap.reserve(k + 1);
  search(0, query, k, exclude, heap);
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

Vec3 world_to_street(Vec3 p, const StreetMeta& s) {
  const Vec3 d = p - s.rx_world_position;
  const double ax = s.street_axis.x;
  const double ay = s.street_axis.y;
  return {ax * d.x + ay * d.y, -ay * d.x + ax * d.y, d.z};
}

Vec3 street_to_world(Vec3 p, const StreetMeta& s) {
  const double ax = s.street_axis.x;
  const double ay = s.street_axis.y;
  return Vec3{ax * p.x - ay * p.y, ay * p.x + ax * p.y, p.z} + s.rx_world_position;
}

Vec2 world_to_street(Vec2 p, const StreetMeta& s) {
  const Vec3 r = world_to_street(Vec3{p.x, p.y, s.rx_world_position.z}, s);
  return {r.x, r.y};
}

Vec2 street_to_world(Vec2 p, const StreetMeta& s) {
  const Vec3 r = street_to_world(Vec3{p.x, p.y, 0.0}, s);
  return {r.x, r.y};
}

PointCloud to_street_frame(const PointCloud& cloud, const StreetMeta& street) {
  if (cloud.frame != Frame::world) throw InvariantError("point cloud is already in the street frame");
  PointCloud out;
  out.frame = Frame::street;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(world_to_street(p, street));
  return out;
}

std::vector<double> knn_mean_distances(const PointCloud& cloud, std::size_t k) {
  if (k == 0) throw InvariantError("denoise k must be at least 1");
  if (k >= cloud.size())
    throw InvariantError("denoise k (" + std::to_string(k) + ") must be smaller than the point count (" +
                         std::to_string(cloud.size()) + ")");
  const KdTree tree(cloud.points);
  std::vector<double> means(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = tree.nearest(cloud.points[i], k, i);
    double sum = 0.0;
    for (const auto& [d2, idx] : nn) sum += std::sqrt(d2);
    means[i] = sum / static_cast<double>(k);
  }
  return means;
}

PointCloud knn_denoise(const PointCloud& cloud, const DenoiseParams& params) {
  if (cloud.empty()) throw InvariantError("cannot denoise an empty cloud");
  if (!(params.alpha > 0.0)) throw InvariantError("denoise alpha must be positive");
  const auto means = knn_mean_distances(cloud, params.k);

  double sum = 0.0;
  for (double m : means) sum += m;
  const double mu = sum / static_cast<double>(means.size());
  double sq = 0.0;
  for (double m : means) sq += (m - mu) * (m - mu);
  const double sigma = std::sqrt(sq / static_cast<double>(means.size()));
  const double threshold = mu + params.alpha * sigma;

  PointCloud out;
  out.frame = cloud.frame;
  out.points.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (means[i] <= threshold) out.points.push_back(cloud.points[i]);
  return out;
}

VoxelGrid build_voxel_grid(const PointCloud& cloud) {
  if (cloud.frame != Frame::street) throw InvariantError("voxel grid requires a street-frame cloud");
  VoxelGrid grid;
  for (const auto& p : cloud.points) grid.add(p);
  return grid;
}

std::vector<CubeIndex> traverse_segment(const VoxelGrid& grid, Vec3 a, Vec3 b) {
  if (a == b) throw InvariantError("degenerate segment: endpoints coincide");
  const Vec3 o = grid.origin();
  const std::array<double, 3> start{a.x - o.x, a.y - o.y, a.z - o.z};
  const std::array<double, 3> dir{b.x - a.x, b.y - a.y, b.z - a.z};
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::array<std::int64_t, 3> cell{};
  std::array<int, 3> step{};
  for (int ax = 0; ax < 3; ++ax) {
    // A start exactly on a boundary belongs to the cube the segment enters.
    if (dir[ax] < 0.0 && is_integral(start[ax])) {
      cell[ax] = static_cast<std::int64_t>(start[ax]) - 1;
    } else {
      cell[ax] = floor_index(start[ax]);
    }
    step[ax] = dir[ax] > 0.0 ? 1 : (dir[ax] < 0.0 ? -1 : 0);
  }

  // Parameter along the segment where the next boundary on each axis is hit.
  auto next_crossing = [&](int ax) {
    if (step[ax] == 0) return kInf;
    const double boundary = static_cast<double>(step[ax] > 0 ? cell[ax] + 1 : cell[ax]);
    return (boundary - start[ax]) / dir[ax];
  };

  std::vector<CubeIndex> out;
  std::array<double, 3> t_next{next_crossing(0), next_crossing(1), next_crossing(2)};
  while (true) {
    out.push_back({cell[0], cell[1], cell[2]});
    int ax = 0;
    if (t_next[1] < t_next[ax]) ax = 1;
    if (t_next[2] < t_next[ax]) ax = 2;
    if (!(t_next[ax] < 1.0)) break;
    cell[ax] += step[ax];
    t_next[ax] = next_crossing(ax);
  }
  return out;
}

std::size_t count_in_box(const PointCloud& cloud, const Box& box) {
  if (!(box.min.x < box.max.x && box.min.y < box.max.y && box.min.z < box.max.z))
    throw InvariantError("inverted or empty box");
  return static_cast<std::size_t>(
      std::count_if(cloud.points.begin(), cloud.points.end(), [&](const Vec3& p) { return box.contains(p); }));
}

std::size_t count_in_box(const VoxelGrid& grid, const Box& box) {
  if (!(box.min.x < box.max.x && box.min.y < box.max.y && box.min.z < box.max.z))
    throw InvariantError("inverted or empty box");
  const Vec3 o = grid.origin();
  const Vec3 lo = box.min - o;
  const Vec3 hi = box.max - o;
  for (double v : {lo.x, lo.y, lo.z, hi.x, hi.y, hi.z})
    if (!is_integral(v)) throw InvariantError("grid counts need a box aligned to cube boundaries");
  std::size_t total = 0;
  for (const auto& [c, n] : grid.counts()) {
    if (c.i >= lo.x && c.i < hi.x && c.j >= lo.y && c.j < hi.y && c.k >= lo.z && c.k < hi.z) total += n;
  }
  return total;
}

}  // namespace canyonpl
