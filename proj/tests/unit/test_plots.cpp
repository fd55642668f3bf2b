#include <doctest.h>

#include <string>

#include "canyonpl/plots.hpp"

using namespace canyonpl;

namespace {

std::size_t occurrences(const std::string& text, const std::string& what) {
  std::size_t n = 0;
  for (auto p = text.find(what); p != std::string::npos; p = text.find(what, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("scatter has one marker per point") {
  std::vector<ScatterPoint> pts;
  for (int i = 0; i < 37; ++i) pts.push_back({90.0 + i, 95.0 + 0.5 * i});
  const auto svg = render_scatter(pts, "measured vs predicted");
  CHECK(occurrences(svg, "<circle class=\"pt\"") == 37);
  CHECK(occurrences(svg, "class=\"identity\"") == 1);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg == render_scatter(pts, "measured vs predicted"));
}

TEST_CASE("box plot has one box per series") {
  const std::vector<BoxSeries> series{{"elastic-net", {5, 6, 7, 4.5}}, {"lasso", {5.5, 6.5}}, {"svr", {8}}};
  const auto svg = render_box_plot(series, "RMSE", "dB");
  CHECK(occurrences(svg, "<g class=\"box\">") == 3);
  CHECK(svg.find("lasso") != std::string::npos);
  CHECK(svg == render_box_plot(series, "RMSE", "dB"));
}

TEST_CASE("weight bars") {
  std::vector<FeatureWeight> w{{"log3d", 3, 2, 4, {}}, {"both_sides", -1, -2, 0, {}}};
  const auto svg = render_weight_bars(w, "weights");
  CHECK(occurrences(svg, "<g class=\"bar\">") == 2);
  CHECK(svg == render_weight_bars(w, "weights"));
}
