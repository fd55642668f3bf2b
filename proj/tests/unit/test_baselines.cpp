#include <doctest.h>

#include <cmath>
#include <vector>

#include "canyonpl/baselines.hpp"
#include "canyonpl/error.hpp"
#include "canyonpl/rng.hpp"

using namespace canyonpl;

TEST_CASE("slope-intercept evaluation") {
  const SlopeInterceptModel m{46.9, 3.1, 0};
  CHECK(predict_slope_intercept(m, 1.0) == 46.9);
  CHECK(predict_slope_intercept(m, 100.0) == doctest::Approx(108.9).epsilon(1e-14));
  CHECK(predict_slope_intercept({0, 0, 0}, 321.0) == 0.0);
  CHECK_THROWS_AS(predict_slope_intercept(m, 0.0), InvariantError);
}

TEST_CASE("printed single-slope forms") {
  CHECK(gpp_uma_los(1, 1) == 28.0);
  CHECK(gpp_uma_los(100, 28) == doctest::Approx(28 + 44 + 20 * std::log10(28.0)).epsilon(1e-14));
  CHECK(std::abs(gpp_uma_los(100) - 100.9432) < 5e-5);
  CHECK(std::abs(gpp_umi_nlos(100) - 123.8245) < 5e-5);
  for (double d = 1; d < 500; d += 7.5) {
    CHECK(gpp_uma_los(d + 1) > gpp_uma_los(d));
    CHECK(gpp_umi_nlos(d + 1) > gpp_umi_nlos(d));
  }
  CHECK(gpp_uma_los(50, 29) > gpp_uma_los(50, 28));
  CHECK(gpp_umi_nlos(50, 29) > gpp_umi_nlos(50, 28));
  CHECK_THROWS_AS(gpp_umi_nlos(-1), InvariantError);
  CHECK_THROWS_AS(gpp_uma_los(10, 0), InvariantError);
}

TEST_CASE("slope-intercept fit") {
  SUBCASE("noiseless recovery") {
    std::vector<double> d, pl;
    for (double x = 5; x < 500; x *= 1.3) {
      d.push_back(x);
      pl.push_back(46.9 + 31.0 * std::log10(x));
    }
    const auto m = fit_slope_intercept(d, pl);
    CHECK(std::abs(m.a - 46.9) < 1e-9);
    CHECK(std::abs(m.n - 3.1) < 1e-9);
    CHECK(m.sigma < 1e-9);
  }
  SUBCASE("two points interpolate") {
    const std::vector<double> d{10, 200};
    const std::vector<double> pl{80, 121};
    const auto m = fit_slope_intercept(d, pl);
    CHECK(m.sigma == doctest::Approx(0.0));
    CHECK(predict_slope_intercept(m, 200) == doctest::Approx(121.0));
  }
  SUBCASE("residuals are orthogonal to the design") {
    Rng rng(3);
    std::vector<double> d, pl;
    for (int i = 0; i < 300; ++i) {
      d.push_back(rng.uniform(5, 480));
      pl.push_back(50 + 28 * std::log10(d.back()) + rng.normal(0, 6));
    }
    const auto m = fit_slope_intercept(d, pl);
    double s1 = 0, sl = 0, ss = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double r = pl[i] - predict_slope_intercept(m, d[i]);
      s1 += r;
      sl += r * std::log10(d[i]);
      ss += r * r;
    }
    CHECK(std::abs(s1) <= 1e-6 * 300);
    CHECK(std::abs(sl) <= 1e-6 * 300);
    CHECK(m.sigma == doctest::Approx(std::sqrt(ss / 300)).epsilon(1e-12));
  }
  SUBCASE("errors") {
    const std::vector<double> same{20, 20, 20};
    const std::vector<double> pl{1, 2, 3};
    CHECK_THROWS_AS(fit_slope_intercept(same, pl), InvariantError);
    CHECK_THROWS_AS(fit_slope_intercept(std::vector<double>{20}, std::vector<double>{1}), InvariantError);
    CHECK_THROWS_AS(fit_slope_intercept(std::vector<double>{20, 30}, pl), ShapeError);
  }
}
