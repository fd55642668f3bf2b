#pragma once

// Closed-form path-loss baselines.

#include <span>

namespace canyonpl {

inline constexpr double kCarrierGHz = 28.0;

// PL = A + 10 n log10(d), sigma = residual RMSE (divide by sample count).
struct SlopeInterceptModel {
  double a = 0.0;
  double n = 0.0;
  double sigma = 0.0;
};

SlopeInterceptModel fit_slope_intercept(std::span<const double> d3d, std::span<const double> pl);
double predict_slope_intercept(const SlopeInterceptModel& model, double d3d);

// Single-slope forms with distance in metres and carrier frequency in GHz.
double gpp_uma_los(double d3d, double fc = kCarrierGHz);
double gpp_umi_nlos(double d3d, double fc = kCarrierGHz);

}  // namespace canyonpl
