#include <doctest.h>

#include <cmath>
#include <string>

#include "canyonpl/error.hpp"
#include "canyonpl/scene.hpp"
#include "canyonpl/synthetic.hpp"
#include "tempdir.hpp"

using namespace canyonpl;

namespace {

const char* kStreets =
    "street_id,width,rx_height,both_sides,rx_wx,rx_wy,rx_wz,axis_x,axis_y\n"
    "S1,20,61.5,1,100,200,0,1,0\n"
    "S2,25,30,0,0,0,0,0,1\n";

std::string links_with(const std::string& rows) {
  return "link_id,street_id,tx_x,tx_y,tx_z,d1d,d3d,pl_db\n" + rows;
}

// Rx at (0, 0, 61.5): these Tx give integral 3D distances.
const char* kGoodRows =
    "L1,S1,80,0,1.5,80,100,110.5\n"
    "L2,S1,45,0,1.5,45,75,101\n"
    "L3,S1,175,0,1.5,175,185,125.25\n";

std::size_t line_of(const auto& fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("well-formed links file parses every row") {
  testing::TempDir dir;
  const auto streets = load_streets(dir.write("streets.csv", kStreets));
  REQUIRE(streets.size() == 2);
  CHECK(streets[0].buildings_both_sides);
  CHECK_FALSE(streets[1].buildings_both_sides);

  const auto links = load_links(dir.write("links.csv", links_with(kGoodRows)), streets);
  REQUIRE(links.size() == 3);
  CHECK(links[0].link_id == "L1");
  CHECK(links[1].d3d == 75.0);
  CHECK(links[2].measured_pl == 125.25);
  CHECK(links[2].tx_position == Vec3{175, 0, 1.5});
}

TEST_CASE("d3d below d1d is reported with its line") {
  testing::TempDir dir;
  const auto streets = load_streets(dir.write("streets.csv", kStreets));
  const auto path = dir.write("links.csv", links_with("L1,S1,80,0,1.5,80,100,110\nL2,S1,200,0,1.5,200,150,110\n"));
  CHECK_THROWS_WITH_AS(load_links(path, streets), "d3d < d1d at line 3", ParseError);
}

TEST_CASE("duplicate link id names the id") {
  testing::TempDir dir;
  const auto streets = load_streets(dir.write("streets.csv", kStreets));
  const auto path = dir.write("links.csv", links_with(std::string(kGoodRows) + "L2,S1,45,0,1.5,45,75,101\n"));
  try {
    load_links(path, streets);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("'L2'") != std::string::npos);
    CHECK(e.line() == 5);
  }
}

TEST_CASE("link loader errors") {
  testing::TempDir dir;
  const auto streets = load_streets(dir.write("streets.csv", kStreets));
  SUBCASE("unknown street") {
    const auto p = dir.write("l.csv", links_with("L1,S9,80,0,1.5,80,100,110\n"));
    CHECK(line_of([&] { load_links(p, streets); }) == 2);
  }
  SUBCASE("stored d3d disagrees with geometry") {
    const auto p = dir.write("l.csv", links_with("L1,S1,80,0,1.5,80,100.01,110\n"));
    CHECK(line_of([&] { load_links(p, streets); }) == 2);
  }
  SUBCASE("d3d within tolerance is accepted") {
    const auto p = dir.write("l.csv", links_with("L1,S1,80,0,1.5,80,100.0000005,110\n"));
    CHECK(load_links(p, streets).size() == 1);
  }
  SUBCASE("short row") {
    const auto p = dir.write("l.csv", "# comment\n" + links_with("\nL1,S1,80,0,1.5,80,100\n"));
    CHECK(line_of([&] { load_links(p, streets); }) == 4);
  }
  SUBCASE("wrong header") {
    const auto p = dir.write("l.csv", "id,street\n");
    CHECK(line_of([&] { load_links(p, streets); }) == 1);
  }
}

TEST_CASE("point cloud loader") {
  testing::TempDir dir;
  SUBCASE("empty file") { CHECK(load_pointcloud(dir.write("a.xyz", "")).empty()); }
  SUBCASE("order preserved") {
    const auto c = load_pointcloud(dir.write("a.xyz", "1 2 3\n# skip\n4 5 6\n-1 0.5 2e1\n"));
    REQUIRE(c.size() == 3);
    CHECK(c.points[0] == Vec3{1, 2, 3});
    CHECK(c.points[1] == Vec3{4, 5, 6});
    CHECK(c.points[2] == Vec3{-1, 0.5, 20});
    CHECK(c.frame == Frame::world);
  }
  SUBCASE("nan coordinate") {
    const auto p = dir.write("a.xyz", "1 2 3\n1 2 nan\n");
    CHECK(line_of([&] { load_pointcloud(p); }) == 2);
  }
  SUBCASE("two coordinates") {
    const auto p = dir.write("a.xyz", "1 2\n");
    CHECK(line_of([&] { load_pointcloud(p); }) == 1);
  }
}

TEST_CASE("footprint loader") {
  testing::TempDir dir;
  SUBCASE("rectangle") {
    const auto f = load_footprints(dir.write("a.fpl", "30; 0,0 10,0 10,5 0,5\n"));
    REQUIRE(f.size() == 1);
    CHECK(f[0].height == 30.0);
    CHECK(f[0].polygon.size() == 4);
  }
  SUBCASE("bow tie") {
    const auto p = dir.write("a.fpl", "30; 0,0 10,10 10,0 0,10\n");
    CHECK_THROWS_WITH_AS(load_footprints(p), doctest::Contains("self-intersecting"), ParseError);
  }
  SUBCASE("zero height") {
    const auto p = dir.write("a.fpl", "0; 0,0 10,0 10,5 0,5\n");
    CHECK(line_of([&] { load_footprints(p); }) == 1);
  }
  SUBCASE("missing separator") {
    const auto p = dir.write("a.fpl", "30; 0,0 1,0 1,1\n30 0,0 10,0 10,5\n");
    CHECK(line_of([&] { load_footprints(p); }) == 2);
  }
}

TEST_CASE("simple polygon test") {
  const std::vector<Vec2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const std::vector<Vec2> bowtie{{0, 0}, {1, 1}, {1, 0}, {0, 1}};
  const std::vector<Vec2> concave{{0, 0}, {4, 0}, {4, 4}, {2, 1}, {0, 4}};
  CHECK(is_simple_polygon(square));
  CHECK_FALSE(is_simple_polygon(bowtie));
  CHECK(is_simple_polygon(concave));
}

TEST_CASE("dataset invariants") {
  Dataset d;
  StreetScene s;
  s.meta = {"S1", 20, 30, false, {}, {1, 0}};
  d.streets.push_back(s);
  LinkRecord l{"L1", "S1", {40, 0, 0}, 100, 50, 40};
  d.links = {l, l};
  CHECK_THROWS_WITH_AS(validate(d), doctest::Contains("duplicate link_id 'L1'"), InvariantError);
  d.links[1].link_id = "L2";
  d.links[1].street_id = "S2";
  CHECK_THROWS_AS(validate(d), InvariantError);
}

TEST_CASE("dataset round trip") {
  SceneConfig config;
  config.n_streets = 3;
  config.links_min = 5;
  config.links_max = 9;
  config.point_scale = 0.01;
  Dataset d = generate_scene(config, 3);
  for (std::size_t i = 0; i < d.links.size(); ++i) d.links[i].measured_pl = 90.0 + 0.123456789 * static_cast<double>(i);

  testing::TempDir dir;
  save_dataset(dir.path(), d);
  const Dataset r = load_dataset(dir.path());

  REQUIRE(r.streets.size() == d.streets.size());
  REQUIRE(r.links.size() == d.links.size());
  for (std::size_t i = 0; i < d.streets.size(); ++i) {
    const auto& a = d.streets[i];
    const auto& b = r.streets[i];
    CHECK(a.meta.street_id == b.meta.street_id);
    CHECK(a.meta.width == doctest::Approx(b.meta.width).epsilon(1e-12));
    CHECK(a.meta.buildings_both_sides == b.meta.buildings_both_sides);
    CHECK(std::abs(a.meta.street_axis.x - b.meta.street_axis.x) < 1e-9);
    REQUIRE(a.cloud.size() == b.cloud.size());
    for (std::size_t p = 0; p < a.cloud.size(); ++p) CHECK(distance(a.cloud.points[p], b.cloud.points[p]) < 1e-9);
    REQUIRE(a.footprints.size() == b.footprints.size());
    for (std::size_t f = 0; f < a.footprints.size(); ++f) {
      CHECK(a.footprints[f].height == doctest::Approx(b.footprints[f].height));
      CHECK(a.footprints[f].polygon.size() == b.footprints[f].polygon.size());
    }
  }
  for (std::size_t i = 0; i < d.links.size(); ++i) {
    CHECK(d.links[i].link_id == r.links[i].link_id);
    CHECK(std::abs(d.links[i].d3d - r.links[i].d3d) < 1e-9);
    CHECK(std::abs(d.links[i].measured_pl - r.links[i].measured_pl) < 1e-9);
    CHECK(distance(d.links[i].tx_position, r.links[i].tx_position) < 1e-9);
  }
}
