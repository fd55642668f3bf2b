#include <doctest.h>

#include <cmath>

#include "canyonpl/building.hpp"
#include "canyonpl/error.hpp"
#include "canyonpl/pointcloud.hpp"

using namespace canyonpl;

namespace {

BuildingFootprint rect(const StreetMeta& s, double x0, double x1, double y0, double y1, double h) {
  BuildingFootprint f;
  f.height = h;
  for (Vec2 p : {Vec2{x0, y0}, Vec2{x1, y0}, Vec2{x1, y1}, Vec2{x0, y1}}) f.polygon.push_back(street_to_world(p, s));
  return f;
}

// Cells whose centre lies strictly inside the street-frame rectangle.
bool centre_inside(Eigen::Index r, Eigen::Index c, double x0, double x1, double y0, double y1) {
  const double x = static_cast<double>(r) + 0.5;
  const double y = -20.0 + static_cast<double>(c) + 0.5;
  return x > x0 && x < x1 && y > y0 && y < y1;
}

}  // namespace

TEST_CASE("collapse without footprints") {
  const StreetMeta s{"S", 20, 30, false, {}, {1, 0}};
  CHECK(collapse_buildings({}, s).heights.isZero());
}

TEST_CASE("collapse a rectangle in an aligned and a rotated street") {
  const double a = 2.1;
  for (const StreetMeta& s : {StreetMeta{"S", 20, 30, false, {}, {1, 0}},
                              StreetMeta{"R", 20, 30, false, {250, -40, 0}, {std::cos(a), std::sin(a)}}}) {
    const std::vector<BuildingFootprint> fps{rect(s, 10, 20, -18, -10, 30)};
    const auto m = collapse_buildings(fps, s).heights;
    std::size_t set = 0;
    for (Eigen::Index r = 0; r < kPatchRows; ++r)
      for (Eigen::Index c = 0; c < kPatchCols; ++c) {
        const double expected = centre_inside(r, c, 10, 20, -18, -10) ? 30.0 : 0.0;
        if (m(r, c) != expected) FAIL_CHECK("cell " << r << "," << c << " in street " << s.street_id);
        set += m(r, c) > 0;
      }
    CHECK(set == 80);
  }
}

TEST_CASE("overlapping footprints keep the taller") {
  const StreetMeta s{"S", 20, 30, false, {}, {1, 0}};
  const std::vector<BuildingFootprint> fps{rect(s, 0, 10, 5, 15, 20), rect(s, 5, 20, 10, 18, 50)};
  const auto m = collapse_buildings(fps, s).heights;
  CHECK(m(2, 27) == 20.0);   // x 2.5, y 7.5
  CHECK(m(7, 32) == 50.0);   // x 7.5, y 12.5: both
  CHECK(m(15, 36) == 50.0);  // x 15.5, y 16.5
  CHECK(m(15, 10) == 0.0);
}

TEST_CASE("point in polygon, even-odd") {
  const std::vector<Vec2> sq{{0, 0}, {4, 0}, {4, 4}, {0, 4}};
  CHECK(point_in_polygon({2, 2}, sq));
  CHECK_FALSE(point_in_polygon({5, 2}, sq));
  const std::vector<Vec2> u{{0, 0}, {6, 0}, {6, 6}, {4, 6}, {4, 2}, {2, 2}, {2, 6}, {0, 6}};
  CHECK(point_in_polygon({1, 5}, u));
  CHECK_FALSE(point_in_polygon({3, 5}, u));
}

TEST_CASE("facade patch padding") {
  HeightMap map;
  map.heights.setConstant(30.0);
  LinkRecord link{"L", "S", {}, 0, 500, 500};
  CHECK(facade_patch(map, link).values.minCoeff() == 30.0);

  link.d1d = 100;
  const auto p = facade_patch(map, link);
  CHECK(p.values.bottomRows(400).isZero());
  CHECK(p.values.topRows(100).minCoeff() == 30.0);
  CHECK_FALSE(p.normalized);

  link.d1d = 50;
  CHECK(facade_patch(map, link).values.sum() == 50.0 * 40.0 * 30.0);

  link.d1d = 50.9;
  CHECK(facade_patch(map, link).values.sum() == 50.0 * 40.0 * 30.0);

  link.d1d = 501;
  CHECK_THROWS_AS(facade_patch(map, link), InvariantError);
}

TEST_CASE("grid scaler") {
  FacadePatch a{Eigen::MatrixXd::Constant(kPatchRows, kPatchCols, 10.0), false};
  FacadePatch b{Eigen::MatrixXd::Constant(kPatchRows, kPatchCols, 30.0), false};
  b.values(0, 0) = 10.0;  // degenerate cell
  const std::vector<FacadePatch> train{a, b};
  const auto g = GridScaler::fit(train);
  CHECK(g.min()(1, 1) == 10.0);
  CHECK(g.max()(1, 1) == 30.0);

  CHECK(g.normalize(a).values(1, 1) == 0.0);
  CHECK(g.normalize(b).values(1, 1) == 1.0);
  CHECK(g.normalize(b).values(0, 0) == 0.0);
  CHECK(g.normalize(b).normalized);

  FacadePatch test{Eigen::MatrixXd::Constant(kPatchRows, kPatchCols, 20.0), false};
  test.values(3, 3) = 95.0;
  test.values(4, 4) = -5.0;
  const auto n = g.normalize(test);
  CHECK(n.values(1, 1) == 0.5);
  CHECK(n.values(3, 3) == 1.0);
  CHECK(n.values(4, 4) == 0.0);
  CHECK(g.denormalize(n).values(1, 1) == 20.0);

  CHECK_THROWS_AS(g.normalize(n), InvariantError);
  CHECK_THROWS_AS(GridScaler::fit(std::vector<FacadePatch>{}), InvariantError);
  CHECK_THROWS_AS(require_patch_shape(Eigen::MatrixXd::Zero(500, 39)), ShapeError);
}
