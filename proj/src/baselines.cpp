#include "canyonpl/baselines.hpp"

#include <cmath>

#include "canyonpl/error.hpp"

namespace canyonpl {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvariantError(std::string(what) + " must be positive and finite");
}

}  // namespace

SlopeInterceptModel fit_slope_intercept(std::span<const double> d3d, std::span<const double> pl) {
  if (d3d.size() != pl.size()) throw ShapeError("distances and path losses differ in length");
  if (d3d.size() < 2) throw InvariantError("slope-intercept fit needs at least two links");
  const double count = static_cast<double>(d3d.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < d3d.size(); ++i) {
    require_positive(d3d[i], "distance");
    mx += 10.0 * std::log10(d3d[i]);
    my += pl[i];
  }
  mx /= count;
  my /= count;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < d3d.size(); ++i) {
    const double dx = 10.0 * std::log10(d3d[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (pl[i] - my);
  }
  if (sxx == 0.0) throw InvariantError("slope-intercept fit is singular: all distances are equal");
  SlopeInterceptModel m;
  m.n = sxy / sxx;
  m.a = my - m.n * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < d3d.size(); ++i) {
    const double r = pl[i] - predict_slope_intercept(m, d3d[i]);
    sse += r * r;
  }
  m.sigma = std::sqrt(sse / count);
  return m;
}

double predict_slope_intercept(const SlopeInterceptModel& model, double d3d) {
  require_positive(d3d, "distance");
  return model.a + 10.0 * model.n * std::log10(d3d);
}

double gpp_uma_los(double d3d, double fc) {
  require_positive(d3d, "distance");
  require_positive(fc, "carrier frequency");
  return 28.0 + 22.0 * std::log10(d3d) + 20.0 * std::log10(fc);
}

double gpp_umi_nlos(double d3d, double fc) {
  require_positive(d3d, "distance");
  require_positive(fc, "carrier frequency");
  return 22.4 + 35.3 * std::log10(d3d) + 21.3 * std::log10(fc);
}

}  // namespace canyonpl
