#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. None of them call the library code they are compared against.

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

#include "canyonpl/evaluation.hpp"
#include "canyonpl/pointcloud.hpp"
#include "canyonpl/rng.hpp"
#include "canyonpl/synthetic.hpp"
#include "canyonpl/clutter.hpp"

namespace oracle {

using canyonpl::CubeIndex;
using canyonpl::Vec3;

inline CubeIndex cell_at(Vec3 a, Vec3 b, double t, Vec3 origin) {
  const Vec3 p{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)};
  return {static_cast<std::int64_t>(std::floor(p.x - origin.x)), static_cast<std::int64_t>(std::floor(p.y - origin.y)),
          static_cast<std::int64_t>(std::floor(p.z - origin.z))};
}

inline int axes_changed(const CubeIndex& u, const CubeIndex& v) {
  return (u.i != v.i) + (u.j != v.j) + (u.k != v.k);
}

inline bool adjacent(const CubeIndex& u, const CubeIndex& v) {
  return std::llabs(u.i - v.i) + std::llabs(u.j - v.j) + std::llabs(u.k - v.k) <= 1;
}

// Bisects (t0, t1) until every consecutive pair of cells is face-adjacent. A
// jump that survives down to machine resolution is an exact edge/corner
// crossing; the intermediate cells are then stepped X, then Y, then Z.
inline void refine(Vec3 a, Vec3 b, Vec3 origin, double t0, CubeIndex c0, double t1, CubeIndex c1,
                   std::vector<CubeIndex>& out) {
  if (adjacent(c0, c1)) return;
  const double tm = 0.5 * (t0 + t1);
  if (!(tm > t0 && tm < t1) || t1 - t0 < 1e-15) {
    CubeIndex c = c0;
    if (c.i != c1.i) {
      c.i = c1.i;
      if (c != c1) out.push_back(c);
    }
    if (c.j != c1.j) {
      c.j = c1.j;
      if (c != c1) out.push_back(c);
    }
    return;
  }
  const CubeIndex cm = cell_at(a, b, tm, origin);
  refine(a, b, origin, t0, c0, tm, cm, out);
  if (out.empty() || out.back() != cm) out.push_back(cm);
  refine(a, b, origin, tm, cm, t1, c1, out);
}

// Cubes crossed by the open segment (a, b): dense sampling of t in (0, 1),
// refined by bisection wherever consecutive samples skip a face.
inline std::vector<CubeIndex> dense_traversal(Vec3 a, Vec3 b, Vec3 origin = {}, double step = 1e-4) {
  const auto n = static_cast<std::size_t>(std::ceil(1.0 / step));
  std::vector<CubeIndex> out;
  // Samples just inside both ends stand in for the open interval.
  const double lo = 1e-12;
  const double hi = 1.0 - 1e-12;
  double tp = lo;
  CubeIndex cp = cell_at(a, b, tp, origin);
  out.push_back(cp);
  for (std::size_t s = 1; s <= n; ++s) {
    const double t = s == n ? hi : std::clamp(static_cast<double>(s) / static_cast<double>(n), lo, hi);
    const CubeIndex c = cell_at(a, b, t, origin);
    if (c != cp) {
      refine(a, b, origin, tp, cp, t, c, out);
      if (out.back() != c) out.push_back(c);
    }
    tp = t;
    cp = c;
  }
  return out;
}

inline std::set<CubeIndex> as_set(std::span<const CubeIndex> cubes) { return {cubes.begin(), cubes.end()}; }

// Loops over every point; no spatial index.
inline std::size_t brute_force_cpl(std::span<const Vec3> points, const std::set<CubeIndex>& cubes, Vec3 origin) {
  std::size_t n = 0;
  for (const auto& p : points) {
    const CubeIndex c{static_cast<std::int64_t>(std::floor(p.x - origin.x)),
                      static_cast<std::int64_t>(std::floor(p.y - origin.y)),
                      static_cast<std::int64_t>(std::floor(p.z - origin.z))};
    n += cubes.count(c);
  }
  return n;
}

// Euclidean projection onto {0 <= v <= C, s'v = 0}; bisection on the multiplier.
inline Eigen::VectorXd project_box_hyperplane(const Eigen::VectorXd& v, const Eigen::VectorXd& s, double c) {
  auto at = [&](double lambda) {
    return (v - lambda * s).cwiseMax(0.0).cwiseMin(c).eval();
  };
  double lo = -1.0;
  double hi = 1.0;
  while (s.dot(at(lo)) < 0.0) lo *= 2.0;
  while (s.dot(at(hi)) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (s.dot(at(mid)) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return at(0.5 * (lo + hi));
}

struct SvrDual {
  Eigen::VectorXd beta;  // alpha - alpha*
  double objective = 0.0;
};

// epsilon-SVR dual over v = [alpha; alpha*] by accelerated projected gradient:
//   min 1/2 (a - a*)' K (a - a*) + eps * sum(a + a*) - y'(a - a*)
//   s.t. 0 <= a, a* <= C, sum(a - a*) = 0
inline SvrDual svr_dual_projected_gradient(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double eps, double c,
                                           int iterations = 200000) {
  const Eigen::Index n = y.size();
  Eigen::MatrixXd q(2 * n, 2 * n);
  q << k, -k, -k, k;
  Eigen::VectorXd p(2 * n);
  p << (eps - y.array()).matrix(), (eps + y.array()).matrix();
  Eigen::VectorXd s(2 * n);
  s << Eigen::VectorXd::Ones(n), -Eigen::VectorXd::Ones(n);
  const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double step = 1.0 / std::max(lmax, 1e-12);
  auto f = [&](const Eigen::VectorXd& v) { return 0.5 * v.dot(q * v) + p.dot(v); };
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * n);
  Eigen::VectorXd w = v;
  double tk = 1.0;
  double best = f(v);
  Eigen::VectorXd best_v = v;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd next = project_box_hyperplane(w - step * (q * w + p), s, c);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    w = next + ((tk - 1.0) / tn) * (next - v);
    // Restart momentum whenever the objective goes up.
    const double fn = f(next);
    if (fn > f(v)) {
      w = next;
      tk = 1.0;
    } else {
      tk = tn;
    }
    v = next;
    if (fn < best) {
      best = fn;
      best_v = v;
    }
  }
  return {best_v.head(n) - best_v.tail(n), best};
}

// Central finite-difference gradient of a scalar function.
inline std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& fn,
                                            std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = fn(x);
    x[i] = keep - h;
    const double down = fn(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||, tiny)
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nb), 1e-30});
  return std::sqrt(d) / scale;
}

// Remembers every training target by link id; unseen links get the training mean.
inline canyonpl::Learner memorizer() {
  return {"memorizer", [](const canyonpl::FeatureTable& train, std::uint64_t) -> canyonpl::PredictFn {
            std::unordered_map<std::string, double> seen;
            for (std::size_t i = 0; i < train.rows(); ++i) seen[train.link_ids[i]] = train.target[static_cast<Eigen::Index>(i)];
            const double mean = train.target.mean();
            return [seen, mean](const canyonpl::FeatureTable& rows) {
              Eigen::VectorXd out(static_cast<Eigen::Index>(rows.rows()));
              for (std::size_t i = 0; i < rows.rows(); ++i) {
                const auto it = seen.find(rows.link_ids[i]);
                out[static_cast<Eigen::Index>(i)] = it == seen.end() ? mean : it->second;
              }
              return out;
            };
          }};
}

// A synthesized dataset with its clutter features; targets follow `truth`.
struct Synthetic {
  canyonpl::Dataset dataset;
  canyonpl::FeatureTable clutter;
};

inline Synthetic synthesize(const canyonpl::SceneConfig& config, const canyonpl::GroundTruthPL& truth,
                            std::uint64_t seed) {
  Synthetic s;
  s.dataset = canyonpl::generate_scene(config, seed);
  s.clutter = canyonpl::extract_clutter_features(s.dataset, canyonpl::DenoiseParams{});
  canyonpl::generate_pl(s.dataset, s.clutter, truth, canyonpl::Rng::derive(seed, 1'000'003));
  for (std::size_t i = 0; i < s.dataset.links.size(); ++i)
    s.clutter.target[static_cast<Eigen::Index>(i)] = s.dataset.links[i].measured_pl;
  return s;
}

}  // namespace oracle
