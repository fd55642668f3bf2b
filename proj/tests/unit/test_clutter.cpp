#include <doctest.h>

#include <cmath>
#include <map>

#include "canyonpl/clutter.hpp"
#include "canyonpl/error.hpp"
#include "canyonpl/features.hpp"
#include "canyonpl/rng.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace canyonpl;

namespace {

PointCloud street_cloud(std::vector<Vec3> pts) {
  PointCloud c;
  c.points = std::move(pts);
  c.frame = Frame::street;
  return c;
}

}  // namespace

TEST_CASE("clutter per street") {
  const StreetMeta s{"S", 20, 15, false, {}, {1, 0}};
  CHECK(clutter_per_street(street_cloud({}), s, 100) == 0.0);

  Rng rng(1);
  std::vector<Vec3> pts;
  for (int i = 0; i < 60000; ++i) pts.push_back({rng.uniform(0, 100), rng.uniform(-10, 10), rng.uniform(0, 15)});
  // Outside the street box: beyond the furthest Tx, behind the Rx, above the Rx.
  pts.push_back({100.5, 0, 1});
  pts.push_back({-0.5, 0, 1});
  pts.push_back({50, 0, 15.5});
  CHECK(clutter_per_street(street_cloud(pts), s, 100) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(clutter_per_street(street_cloud(pts), s, 0), InvariantError);
}

TEST_CASE("clutter per link") {
  const Vec3 rx{0.5, 0.5, 10.5};
  const Vec3 tx{0.5, 0.5, 0.5};
  CHECK(clutter_per_link(VoxelGrid{}, tx, rx) == 0);

  VoxelGrid g;
  for (int i = 0; i < 5; ++i) g.add({0.1 + 0.1 * i, 0.3, 4.2});
  g.add({1.5, 0.5, 4.5});  // neighbouring column, off the segment
  CHECK(clutter_per_link(g, tx, rx) == 5);
}

TEST_CASE("clutter per link matches brute force and integer shifts") {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 400; ++i) pts.push_back({rng.uniform(-2, 8), rng.uniform(-2, 8), rng.uniform(0, 6)});
    const Vec3 a{rng.uniform(-1, 7), rng.uniform(-1, 7), rng.uniform(0, 5)};
    const Vec3 b{rng.uniform(-1, 7), rng.uniform(-1, 7), rng.uniform(0, 5)};
    const auto cloud = street_cloud(pts);
    const auto grid = build_voxel_grid(cloud);
    const std::size_t got = clutter_per_link(grid, a, b);
    CHECK(got == oracle::brute_force_cpl(pts, oracle::as_set(oracle::dense_traversal(a, b)), {}));

    const Vec3 shift{3, -2, 1};
    std::vector<Vec3> moved;
    for (auto p : pts) moved.push_back(p + shift);
    CHECK(clutter_per_link(build_voxel_grid(street_cloud(moved)), a + shift, b + shift) == got);
  }
}

TEST_CASE("assembled clutter columns") {
  Dataset d;
  StreetScene s1;
  s1.meta = {"S1", 20, 61.5, true, {}, {1, 0}};
  StreetScene s2;
  s2.meta = {"S2", 30, 61.5, false, {}, {1, 0}};
  d.streets = {s1, s2};
  d.links = {{"L1", "S1", {80, 0, 1.5}, 110, 100, 80},
             {"L2", "S1", {45, 0, 1.5}, 100, 75, 45},
             {"L3", "S2", {80, 0, 1.5}, 111, 100, 80}};

  std::map<std::string, StreetClutter> clutter;
  for (const auto& s : d.streets) clutter.emplace(s.meta.street_id, prepare_street_clutter(s, {}, true));
  const auto t = assemble_clutter(d, clutter);

  REQUIRE(t.rows() == 3);
  REQUIRE(t.cols() == kClutterFeatureCount);
  for (std::size_t c = 0; c < kClutterFeatureCount; ++c) CHECK(t.columns[c] == kClutterColumns[c]);
  CHECK(t.values(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(t.values(0, 1) == doctest::Approx(std::log10(80.0)).epsilon(1e-15));
  CHECK(t.values(0, 1) == doctest::Approx(1.9031).epsilon(1e-4));
  CHECK(t.values(0, 2) == 20.0);
  CHECK(t.values(0, 6) == 1.0);
  CHECK(t.values(2, 6) == 0.0);
  CHECK(t.values(0, 4) == t.values(1, 4));
  CHECK(t.values(0, 5) == 61.5);
  CHECK(t.target[2] == 111.0);
  CHECK(t.street_ids[2] == "S2");
}

TEST_CASE("standard scaler") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  const auto s = StandardScaler::fit(x);
  CHECK(s.means()[0] == 2.0);
  CHECK(s.stds()[0] == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(s.is_constant(1));
  const auto z = s.transform(x);
  CHECK(z(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(z(1, 0) == 0.0);
  CHECK(z(2, 0) == doctest::Approx(1.2247).epsilon(1e-4));
  CHECK(z.col(1).isZero());

  Eigen::MatrixXd mean_row(1, 2);
  mean_row << 2, 5;
  CHECK(s.transform(mean_row).isZero());

  Eigen::MatrixXd other(2, 2);
  other << 7, 1, -4, 9;
  const auto back = s.inverse_transform(s.transform(other));
  CHECK(back(0, 0) == doctest::Approx(7.0));
  CHECK(back(1, 0) == doctest::Approx(-4.0));
  CHECK_THROWS_AS(s.transform(Eigen::MatrixXd::Zero(1, 3)), ShapeError);
}

TEST_CASE("feature table selection and persistence") {
  FeatureTable t;
  t.link_ids = {"a", "b", "c"};
  t.street_ids = {"S1", "S1", "S2"};
  t.columns = {"f1", "f2"};
  t.values.resize(3, 2);
  t.values << 1.5, -2, 0.1, 3e-7, 12345.678901234, 0;
  t.target = Eigen::Vector3d(100.25, 99, 101.125);

  const std::vector<std::size_t> rows{2, 0};
  const auto r = t.select_rows(rows);
  CHECK(r.link_ids == std::vector<std::string>{"c", "a"});
  CHECK(r.values(0, 0) == 12345.678901234);
  const std::vector<std::string> names{"f2"};
  CHECK(t.select_columns(names).values.col(0) == t.values.col(1));
  CHECK_THROWS_AS(t.column_index("f9"), InvariantError);

  testing::TempDir dir;
  save_feature_table(dir / "t.csv", t);
  const auto back = load_feature_table(dir / "t.csv");
  CHECK(back.columns == t.columns);
  CHECK(back.street_ids == t.street_ids);
  CHECK(back.values == t.values);
  CHECK(back.target == t.target);
}
