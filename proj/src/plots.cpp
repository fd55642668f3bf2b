#include "canyonpl/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "canyonpl/error.hpp"

namespace canyonpl {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 90.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  double px_lo = 0.0;
  double px_hi = 1.0;
  double map(double v) const { return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo); }
};

// Range padded by 5% and widened when degenerate.
std::pair<double, double> padded(double lo, double hi) {
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

double nice_step(double span) {
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

void header(std::ostringstream& s, const std::string& title) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
    << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
    << "</text>\n";
}

void y_ticks(std::ostringstream& s, const Axis& y, const std::string& label) {
  const double step = nice_step(y.hi - y.lo);
  for (double v = std::ceil(y.lo / step) * step; v <= y.hi + 1e-9 * step; v += step) {
    const double py = y.map(v);
    s << "<line x1=\"" << num(kLeft - 4) << "\" y1=\"" << num(py) << "\" x2=\"" << num(kWidth - kRight) << "\" y2=\""
      << num(py) << "\" stroke=\"#e0e0e0\"/>\n";
    s << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py + 4) << "\" text-anchor=\"end\">"
      << num(std::abs(v) < 1e-12 ? 0.0 : v) << "</text>\n";
  }
  s << "<text transform=\"translate(18 " << num((y.px_lo + y.px_hi) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(label) << "</text>\n";
  s << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft) << "\" y2=\""
    << num(kHeight - kBottom) << "\" stroke=\"black\"/>\n";
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

}  // namespace

std::string render_box_plot(std::span<const BoxSeries> series, const std::string& title, const std::string& y_label) {
  if (series.empty()) throw InvariantError("box plot needs at least one series");
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& b : series) {
    if (b.values.empty()) throw InvariantError("box plot series '" + b.label + "' is empty");
    for (double v : b.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const auto [ylo, yhi] = padded(std::min(lo, 0.0), hi);
  const Axis y{ylo, yhi, kHeight - kBottom, kTop};
  std::ostringstream s;
  header(s, title);
  y_ticks(s, y, y_label);
  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::vector<double> v = series[i].values;
    std::sort(v.begin(), v.end());
    const double q1 = quantile(v, 0.25), med = quantile(v, 0.5), q3 = quantile(v, 0.75);
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double half = std::min(30.0, slot * 0.3);
    s << "<g class=\"box\">\n";
    s << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y.map(v.front())) << "\" x2=\"" << num(cx) << "\" y2=\""
      << num(y.map(v.back())) << "\" stroke=\"black\"/>\n";
    s << "<rect x=\"" << num(cx - half) << "\" y=\"" << num(y.map(q3)) << "\" width=\"" << num(2 * half)
      << "\" height=\"" << num(y.map(q1) - y.map(q3)) << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << num(cx - half) << "\" y1=\"" << num(y.map(med)) << "\" x2=\"" << num(cx + half)
      << "\" y2=\"" << num(y.map(med)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    s << "<text transform=\"translate(" << num(cx) << ' ' << num(kHeight - kBottom + 14)
      << ") rotate(30)\" text-anchor=\"start\">" << escape(series[i].label) << "</text>\n";
    s << "</g>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string render_scatter(std::span<const ScatterPoint> points, const std::string& title) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& p : points) {
    lo = std::min({lo, p.measured, p.predicted});
    hi = std::max({hi, p.measured, p.predicted});
  }
  if (points.empty()) {
    lo = 0.0;
    hi = 1.0;
  }
  const auto [a, b] = padded(lo, hi);
  const Axis x{a, b, kLeft, kWidth - kRight};
  const Axis y{a, b, kHeight - kBottom, kTop};
  std::ostringstream s;
  header(s, title);
  y_ticks(s, y, "predicted path loss (dB)");
  s << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << num(kHeight - kBottom + 40)
    << "\" text-anchor=\"middle\">measured path loss (dB)</text>\n";
  s << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kHeight - kBottom) << "\" x2=\"" << num(kWidth - kRight)
    << "\" y2=\"" << num(kHeight - kBottom) << "\" stroke=\"black\"/>\n";
  const double step = nice_step(b - a);
  for (double v = std::ceil(a / step) * step; v <= b + 1e-9 * step; v += step)
    s << "<text x=\"" << num(x.map(v)) << "\" y=\"" << num(kHeight - kBottom + 16) << "\" text-anchor=\"middle\">"
      << num(v) << "</text>\n";
  s << "<line class=\"identity\" x1=\"" << num(x.map(a)) << "\" y1=\"" << num(y.map(a)) << "\" x2=\"" << num(x.map(b))
    << "\" y2=\"" << num(y.map(b)) << "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
  for (const auto& p : points)
    s << "<circle class=\"pt\" cx=\"" << num(x.map(p.measured)) << "\" cy=\"" << num(y.map(p.predicted))
      << "\" r=\"2.5\" fill=\"#3182bd\" fill-opacity=\"0.6\"/>\n";
  s << "</svg>\n";
  return s.str();
}

std::string render_weight_bars(std::span<const FeatureWeight> weights, const std::string& title) {
  if (weights.empty()) throw InvariantError("weight chart needs at least one feature");
  double lo = 0.0, hi = 0.0;
  for (const auto& w : weights) {
    lo = std::min({lo, w.min, w.mean});
    hi = std::max({hi, w.max, w.mean});
  }
  const auto [ylo, yhi] = padded(lo, hi);
  const Axis y{ylo, yhi, kHeight - kBottom, kTop};
  std::ostringstream s;
  header(s, title);
  y_ticks(s, y, "Lasso weight (dB per std)");
  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(weights.size());
  const double zero = y.map(0.0);
  s << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(zero) << "\" x2=\"" << num(kWidth - kRight) << "\" y2=\""
    << num(zero) << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const auto& w = weights[i];
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double half = std::min(25.0, slot * 0.3);
    const double top = std::min(zero, y.map(w.mean));
    s << "<g class=\"bar\">\n";
    s << "<rect x=\"" << num(cx - half) << "\" y=\"" << num(top) << "\" width=\"" << num(2 * half) << "\" height=\""
      << num(std::abs(y.map(w.mean) - zero)) << "\" fill=\"" << (w.mean >= 0 ? "#31a354" : "#de2d26") << "\"/>\n";
    s << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y.map(w.min)) << "\" x2=\"" << num(cx) << "\" y2=\""
      << num(y.map(w.max)) << "\" stroke=\"black\"/>\n";
    s << "<text transform=\"translate(" << num(cx) << ' ' << num(kHeight - kBottom + 14)
      << ") rotate(30)\" text-anchor=\"start\">" << escape(w.feature) << "</text>\n";
    s << "</g>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace canyonpl
