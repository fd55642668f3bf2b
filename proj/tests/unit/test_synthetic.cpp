#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "canyonpl/baselines.hpp"
#include "canyonpl/clutter.hpp"
#include "canyonpl/error.hpp"
#include "canyonpl/regressors.hpp"
#include "canyonpl/synthetic.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace canyonpl;

namespace {

SceneConfig small_config() {
  SceneConfig c;
  c.n_streets = 4;
  c.links_min = 10;
  c.links_max = 20;
  c.point_scale = 0.05;
  return c;
}

}  // namespace

TEST_CASE("zero clutter gives empty clouds and zero features") {
  auto c = small_config();
  c.intensity = std::vector<double>(4, 0.0);
  const auto d = generate_scene(c, 2);
  for (const auto& s : d.streets) CHECK(s.cloud.empty());
  const auto t = extract_clutter_features(d, DenoiseParams{});
  CHECK(t.values.col(3).isZero());
  CHECK(t.values.col(4).isZero());

  c.intensity.clear();
  c.density_min = c.density_max = 0.0;
  for (const auto& s : generate_scene(c, 2).streets) CHECK(s.cloud.empty());
}

TEST_CASE("same seed writes identical bytes") {
  const auto c = small_config();
  testing::TempDir a, b;
  save_dataset(a.path(), generate_scene(c, 9));
  save_dataset(b.path(), generate_scene(c, 9));
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(a.path())) {
    const auto name = e.path().filename().string();
    CHECK(testing::read_file(e.path()) == testing::read_file(b / name));
    ++files;
  }
  CHECK(files == 2 + 2 * 4);
  testing::TempDir other;
  save_dataset(other.path(), generate_scene(c, 10));
  CHECK(testing::read_file(a / "links.csv") != testing::read_file(other / "links.csv"));
}

TEST_CASE("layout respects the configured ranges") {
  const auto c = small_config();
  const auto d = generate_scene(c, 5);
  CHECK(d.streets.size() == 4);
  for (const auto& s : d.streets) {
    CHECK(s.meta.width >= 15.0);
    CHECK(s.meta.width <= 38.0);
    CHECK(s.meta.rx_height >= 15.0);
    CHECK(s.meta.rx_height <= 54.0);
    const auto n = d.link_indices(s.meta.street_id).size();
    CHECK(n >= 10);
    CHECK(n <= 20);
    CHECK_FALSE(s.footprints.empty());
  }
  for (const auto& l : d.links) {
    CHECK(l.tx_position.z == 1.5);
    CHECK(l.d1d >= 10.0);
    CHECK(l.d3d <= 500.0);
  }
}

TEST_CASE("density recipe lands clutter-per-street in range") {
  SceneConfig c;
  c.links_min = 5;
  c.links_max = 10;
  for (std::uint64_t seed : {1, 2}) {
    const auto t = extract_clutter_features(generate_scene(c, seed), DenoiseParams{}, false);
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(t.rows()); ++r) {
      CHECK(t.values(r, 4) >= 0.5);
      CHECK(t.values(r, 4) <= 5.0);
    }
  }
}

TEST_CASE("path-loss generator") {
  const auto c = small_config();
  SUBCASE("reduces to the distance law") {
    GroundTruthPL t;
    t.beta_street = t.beta_link = t.gamma_canyon = t.noise_sigma = 0.0;
    const auto s = oracle::synthesize(c, t, 3);
    for (const auto& l : s.dataset.links) CHECK(l.measured_pl == doctest::Approx(46.9 + 31.0 * std::log10(l.d3d)));
  }
  SUBCASE("noise-free targets are linear in the clutter features") {
    GroundTruthPL t;
    t.noise_sigma = 0.0;
    const auto s = oracle::synthesize(c, t, 4);
    const auto scaler = StandardScaler::fit(s.clutter.values);
    const auto x = scaler.transform(s.clutter.values);
    const auto m = fit_elasticnet(x, s.clutter.target, 0.0, 0.5, {200000, 1e-14});
    const Eigen::VectorXd e = m.predict(x) - s.clutter.target;
    CHECK(std::sqrt(e.squaredNorm() / static_cast<double>(e.size())) < 1e-6);
  }
  SUBCASE("noise level is recovered") {
    auto big = c;
    big.n_streets = 10;
    big.links_min = 100;
    big.links_max = 120;
    big.point_scale = 0.01;
    GroundTruthPL t;
    t.beta_street = t.beta_link = t.gamma_canyon = 0.0;
    const auto s = oracle::synthesize(big, t, 5);
    std::vector<double> d, pl;
    for (const auto& l : s.dataset.links) {
      d.push_back(l.d3d);
      pl.push_back(l.measured_pl);
    }
    CHECK(std::abs(fit_slope_intercept(d, pl).sigma - 6.3) < 0.5);
  }
  SUBCASE("missing features") {
    auto d = generate_scene(c, 1);
    auto t = extract_clutter_features(d, DenoiseParams{});
    const std::vector<std::size_t> rows{0, 1};
    CHECK_THROWS_AS(generate_pl(d, t.select_rows(rows), {}, 1), InvariantError);
  }
}

TEST_CASE("config validation") {
  auto c = small_config();
  c.n_streets = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.length_max = 600;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.intensity = {1.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.density_min = 3;
  c.density_max = 2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(clutter_points_per_metre(ClutterDensity{}) == doctest::Approx(1056.0));
}

TEST_CASE("truth file records the generator") {
  testing::TempDir dir;
  GroundTruthPL t;
  t.beta_street = 7.5;
  save_truth(dir / "truth.json", small_config(), t, 77);
  const auto j = nlohmann::json::parse(testing::read_file(dir / "truth.json"));
  CHECK(j.dump().find("7.5") != std::string::npos);
  CHECK(j.dump().find("77") != std::string::npos);
}
