#include "canyonpl/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "canyonpl/blob.hpp"
#include "canyonpl/error.hpp"
#include "canyonpl/rng.hpp"

namespace canyonpl {

std::string to_string(Family f) {
  switch (f) {
    case Family::lasso:
      return "lasso";
    case Family::elastic_net:
      return "elastic-net";
    case Family::random_forest:
      return "random-forest";
    case Family::svr:
      return "svr";
  }
  return "lasso";
}

Family parse_family(const std::string& s) {
  if (s == "lasso") return Family::lasso;
  if (s == "elastic-net" || s == "elasticnet" || s == "elastic_net") return Family::elastic_net;
  if (s == "random-forest" || s == "rf" || s == "random_forest") return Family::random_forest;
  if (s == "svr") return Family::svr;
  throw ConfigError("unknown model family '" + s + "' (expected lasso, elastic-net, random-forest or svr)");
}

namespace {

void check_xy(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Eigen::Index min_rows) {
  if (x.rows() != y.size()) throw ShapeError("feature rows and targets differ in length");
  if (x.rows() < min_rows) throw InvariantError("need at least " + std::to_string(min_rows) + " training rows");
  if (!x.allFinite() || !y.allFinite()) throw InvariantError("training data contains non-finite values");
}

void check_cols(Eigen::Index expected, const Eigen::MatrixXd& x) {
  if (x.cols() != expected)
    throw ShapeError("model expects " + std::to_string(expected) + " features, got " + std::to_string(x.cols()));
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Coordinate descent

Eigen::VectorXd LinearModel::predict(const Eigen::MatrixXd& x) const {
  check_cols(weights.size(), x);
  Eigen::VectorXd out = x * weights;
  out.array() += intercept;
  return out;
}

double elasticnet_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                            double intercept, double alpha, double delta) {
  const Eigen::VectorXd r = (y - x * w).array() - intercept;
  const double n = static_cast<double>(y.size());
  return r.squaredNorm() / (2.0 * n) + alpha * delta * w.lpNorm<1>() + 0.5 * alpha * (1.0 - delta) * w.squaredNorm();
}

LinearModel fit_elasticnet(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, double delta,
                           const CdConfig& cd) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvariantError("alpha must be finite and non-negative");
  if (!(delta >= 0.0 && delta <= 1.0)) throw InvariantError("delta must lie in [0, 1]");
  check_xy(x, y, 2);

  const double n = static_cast<double>(x.rows());
  const Eigen::RowVectorXd xm = x.colwise().mean();
  const double ym = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - xm;
  const Eigen::VectorXd z = xc.colwise().squaredNorm().transpose() / n;
  const double l1 = alpha * delta;
  const double l2 = alpha * (1.0 - delta);

  LinearModel m;
  m.alpha = alpha;
  m.delta = delta;
  m.solver = cd;
  m.weights = Eigen::VectorXd::Zero(x.cols());
  Eigen::VectorXd r = y.array() - ym;
  auto objective = [&] {
    return r.squaredNorm() / (2.0 * n) + l1 * m.weights.lpNorm<1>() + 0.5 * l2 * m.weights.squaredNorm();
  };
  m.objective.push_back(objective());

  for (std::size_t sweep = 0; sweep < cd.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (z[j] == 0.0) continue;  // constant column carries no signal
      const double wj = m.weights[j];
      const double rho = xc.col(j).dot(r) / n + z[j] * wj;
      const double next = soft_threshold(rho, l1) / (z[j] + l2);
      const double d = next - wj;
      if (d != 0.0) {
        r.noalias() -= d * xc.col(j);
        m.weights[j] = next;
        max_change = std::max(max_change, std::abs(d));
      }
    }
    m.sweeps = sweep + 1;
    m.objective.push_back(objective());
    if (max_change < cd.tolerance) {
      m.converged = true;
      break;
    }
  }
  m.intercept = ym - xm.dot(m.weights);
  return m;
}

LinearModel fit_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, const CdConfig& cd) {
  return fit_elasticnet(x, y, alpha, 1.0, cd);
}

// ---------------------------------------------------------------------------
// Random forest

double Tree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  std::int32_t i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = row[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

std::size_t Tree::depth() const {
  std::size_t best = 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    const auto& n = nodes[static_cast<std::size_t>(i)];
    best = std::max(best, d);
    if (n.feature >= 0) {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return best;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t max_depth)
      : x_(x), y_(y), max_depth_(max_depth) {}

  Tree build(std::vector<Eigen::Index> rows) {
    tree_.nodes.clear();
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  std::int32_t grow(std::vector<Eigen::Index>& rows, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double sum = 0.0;
    for (auto r : rows) sum += y_[r];
    const double count = static_cast<double>(rows.size());
    {
      auto& node = tree_.nodes.back();
      node.value = sum / count;
      node.samples = static_cast<std::uint32_t>(rows.size());
    }
    const double mean = sum / count;
    double sse = 0.0;
    for (auto r : rows) sse += (y_[r] - mean) * (y_[r] - mean);
    if (depth >= max_depth_ || rows.size() < 2 || sse == 0.0) return id;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<Eigen::Index> sorted = rows;
    for (Eigen::Index f = 0; f < x_.cols(); ++f) {
      std::stable_sort(sorted.begin(), sorted.end(),
                       [&](Eigen::Index a, Eigen::Index b) { return x_(a, f) < x_(b, f); });
      double ls = 0.0, lq = 0.0;
      double total_q = 0.0;
      for (auto r : sorted) total_q += y_[r] * y_[r];
      for (std::size_t k = 1; k < sorted.size(); ++k) {
        const double v = y_[sorted[k - 1]];
        ls += v;
        lq += v * v;
        const double a = x_(sorted[k - 1], f);
        const double b = x_(sorted[k], f);
        if (!(a < b)) continue;
        const double nl = static_cast<double>(k);
        const double nr = count - nl;
        const double rs = sum - ls;
        const double rq = total_q - lq;
        const double cost = (lq - ls * ls / nl) + (rq - rs * rs / nr);
        if (cost < best_cost) {
          best_cost = cost;
          best_feature = static_cast<int>(f);
          double t = 0.5 * (a + b);
          if (!(t < b)) t = a;
          best_threshold = t;
        }
      }
    }
    if (best_feature < 0) return id;  // every feature constant over the node

    std::vector<Eigen::Index> left, right;
    for (auto r : rows) (x_(r, best_feature) <= best_threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const std::int32_t l = grow(left, depth + 1);
    const std::int32_t rr = grow(right, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = rr;
    return id;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  std::size_t max_depth_;
  Tree tree_;
};

}  // namespace

Eigen::VectorXd ForestModel::predict(const Eigen::MatrixXd& x) const {
  check_cols(n_features, x);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(x.row(i));
    out[i] = s / static_cast<double>(trees.size());
  }
  return out;
}

ForestModel fit_random_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed,
                              const ForestConfig& config) {
  check_xy(x, y, 2);
  if (config.n_trees == 0) throw ConfigError("forest needs at least one tree");
  ForestModel m;
  m.config = config;
  m.seed = seed;
  m.n_features = x.cols();
  TreeBuilder builder(x, y, config.max_depth);
  const auto n = static_cast<std::uint64_t>(x.rows());
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    std::vector<Eigen::Index> rows(n);
    if (config.bootstrap) {
      Rng rng(Rng::derive(seed, t));
      for (auto& r : rows) r = static_cast<Eigen::Index>(rng.below(n));
    } else {
      std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    }
    m.trees.push_back(builder.build(std::move(rows)));
  }
  return m;
}

// ---------------------------------------------------------------------------
// SVR

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma) {
  if (a.cols() != b.cols()) throw ShapeError("kernel operands differ in feature count");
  const Eigen::VectorXd an = a.rowwise().squaredNorm();
  const Eigen::VectorXd bn = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * a * b.transpose();
  d2.colwise() += an;
  d2.rowwise() += bn.transpose();
  return (-gamma * d2.cwiseMax(0.0)).array().exp().matrix();
}

double svr_dual_objective(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                          double epsilon) {
  return 0.5 * beta.dot(kernel * beta) + epsilon * beta.lpNorm<1>() - y.dot(beta);
}

Eigen::VectorXd SvrModel::predict(const Eigen::MatrixXd& x) const {
  if (coef.size() == 0) return Eigen::VectorXd::Constant(x.rows(), bias);
  check_cols(support_vectors.cols(), x);
  Eigen::VectorXd out = rbf_kernel(x, support_vectors, gamma) * coef;
  out.array() += bias;
  return out;
}

SvrModel fit_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c, double gamma, double epsilon,
                 const SmoConfig& smo, SmoObserver observer, void* user) {
  if (!(c > 0.0)) throw InvariantError("SVR penalty C must be positive");
  if (!(gamma > 0.0)) throw InvariantError("RBF gamma must be positive");
  if (!(epsilon >= 0.0)) throw InvariantError("SVR epsilon must be non-negative");
  check_xy(x, y, 1);

  // Two-variable-per-sample dual: beta[i] = alpha_i (sign +1), beta[n+i] =
  // alpha*_i (sign -1); minimize 1/2 b'Qb + p'b s.t. s'b = 0, 0 <= b <= C.
  const Eigen::Index n = x.rows();
  const Eigen::Index m = 2 * n;
  const Eigen::MatrixXd k = rbf_kernel(x, x, gamma);
  auto sign = [n](Eigen::Index i) { return i < n ? 1.0 : -1.0; };
  auto q = [&](Eigen::Index i, Eigen::Index j) { return sign(i) * sign(j) * k(i % n, j % n); };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd p(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    p[i] = epsilon - y[i];
    p[n + i] = epsilon + y[i];
  }
  Eigen::VectorXd g = p;
  constexpr double kTau = 1e-12;

  SvrModel model;
  model.c = c;
  model.gamma = gamma;
  model.epsilon = epsilon;

  std::size_t iter = 0;
  double violation = 0.0;
  for (;; ++iter) {
    // Maximal-violating index i, then second-order choice of j.
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < m; ++t) {
      if (sign(t) > 0) {
        if (beta[t] < c && -g[t] >= gmax) {
          gmax = -g[t];
          i = t;
        }
      } else if (beta[t] > 0 && g[t] >= gmax) {
        gmax = g[t];
        i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < m; ++t) {
      if (sign(t) > 0) {
        if (beta[t] > 0) {
          gmax2 = std::max(gmax2, g[t]);
          const double diff = gmax + g[t];
          if (i >= 0 && diff > 0) {
            double quad = q(i, i) + q(t, t) - 2.0 * sign(i) * q(i, t);
            if (quad <= 0) quad = kTau;
            const double obj = -diff * diff / quad;
            if (obj <= best) {
              best = obj;
              j = t;
            }
          }
        }
      } else if (beta[t] < c) {
        gmax2 = std::max(gmax2, -g[t]);
        const double diff = gmax - g[t];
        if (i >= 0 && diff > 0) {
          double quad = q(i, i) + q(t, t) + 2.0 * sign(i) * q(i, t);
          if (quad <= 0) quad = kTau;
          const double obj = -diff * diff / quad;
          if (obj <= best) {
            best = obj;
            j = t;
          }
        }
      }
    }
    violation = gmax + gmax2;
    if (violation < smo.tolerance || i < 0 || j < 0) break;
    if (iter >= smo.max_iterations) break;

    const double old_i = beta[i];
    const double old_j = beta[j];
    if (sign(i) != sign(j)) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-g[i] - g[j]) / quad;
      const double diff = beta[i] - beta[j];
      beta[i] += delta;
      beta[j] += delta;
      if (diff > 0) {
        if (beta[j] < 0) {
          beta[j] = 0;
          beta[i] = diff;
        }
      } else if (beta[i] < 0) {
        beta[i] = 0;
        beta[j] = -diff;
      }
      if (diff > 0) {
        if (beta[i] > c) {
          beta[i] = c;
          beta[j] = c - diff;
        }
      } else if (beta[j] > c) {
        beta[j] = c;
        beta[i] = c + diff;
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (g[i] - g[j]) / quad;
      const double sum = beta[i] + beta[j];
      beta[i] -= delta;
      beta[j] += delta;
      if (sum > c) {
        if (beta[i] > c) {
          beta[i] = c;
          beta[j] = sum - c;
        }
      } else if (beta[j] < 0) {
        beta[j] = 0;
        beta[i] = sum;
      }
      if (sum > c) {
        if (beta[j] > c) {
          beta[j] = c;
          beta[i] = sum - c;
        }
      } else if (beta[i] < 0) {
        beta[i] = 0;
        beta[j] = sum;
      }
    }
    const double di = beta[i] - old_i;
    const double dj = beta[j] - old_j;
    for (Eigen::Index t = 0; t < m; ++t) g[t] += q(i, t) * di + q(j, t) * dj;
    if (observer) observer(beta, c, user);
  }
  model.iterations = iter;
  model.kkt_violation = std::max(0.0, violation);

  // Bias from free variables, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (Eigen::Index t = 0; t < m; ++t) {
    const double yg = sign(t) * g[t];
    if (beta[t] >= c) {
      if (sign(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (beta[t] <= 0) {
      if (sign(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : 0.5 * (ub + lb);
  model.bias = -rho;
  model.dual_objective = 0.5 * beta.dot(g + p);

  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < n; ++i)
    if (beta[i] - beta[n + i] != 0.0) sv.push_back(i);
  model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  model.coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    model.support_vectors.row(static_cast<Eigen::Index>(s)) = x.row(sv[s]);
    model.coef[static_cast<Eigen::Index>(s)] = beta[sv[s]] - beta[n + sv[s]];
  }
  return model;
}

// ---------------------------------------------------------------------------
// Model dispatch and grid search

std::vector<double> log_grid() {
  std::vector<double> g;
  for (int e = -4; e <= 4; ++e) g.push_back(std::pow(10.0, e));
  return g;
}

Model fit_model(Family family, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyper& hyper,
                std::uint64_t seed, const FitOptions& options) {
  switch (family) {
    case Family::lasso:
      return fit_lasso(x, y, hyper.alpha, options.cd);
    case Family::elastic_net:
      return fit_elasticnet(x, y, hyper.alpha, hyper.delta, options.cd);
    case Family::random_forest:
      return fit_random_forest(x, y, seed, options.forest);
    case Family::svr:
      return fit_svr(x, y, hyper.c, hyper.gamma, hyper.epsilon, options.smo);
  }
  throw ConfigError("unknown model family");
}

Eigen::VectorXd predict(const Model& model, const Eigen::MatrixXd& x) {
  return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, std::span<const Eigen::Index> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& y, std::span<const Eigen::Index> rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = y[rows[i]];
  return out;
}

}  // namespace

GridSearchResult grid_search_cv(Family family, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                std::uint64_t seed, const FitOptions& options) {
  const std::size_t folds = options.cv_folds;
  if (folds < 2) throw ConfigError("grid search needs at least two folds");
  if (x.rows() < static_cast<Eigen::Index>(folds))
    throw InvariantError("grid search needs at least " + std::to_string(folds) + " rows");
  check_xy(x, y, static_cast<Eigen::Index>(folds));

  Hyper base;
  base.delta = family == Family::lasso ? 1.0 : options.delta;
  base.epsilon = options.svr_epsilon;

  GridSearchResult result;
  if (family == Family::random_forest) {
    result.best = base;
    result.model = fit_model(family, x, y, base, seed, options);
    return result;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(order);

  struct Split {
    Eigen::MatrixXd xt, xv;
    Eigen::VectorXd yt, yv;
  };
  std::vector<Split> splits;
  const std::size_t n = order.size();
  std::size_t start = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t len = n / folds + (f < n % folds ? 1 : 0);
    std::vector<Eigen::Index> val(order.begin() + static_cast<std::ptrdiff_t>(start),
                                  order.begin() + static_cast<std::ptrdiff_t>(start + len));
    std::vector<Eigen::Index> tr(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(start));
    tr.insert(tr.end(), order.begin() + static_cast<std::ptrdiff_t>(start + len), order.end());
    splits.push_back({take_rows(x, tr), take_rows(x, val), take_rows(y, tr), take_rows(y, val)});
    start += len;
  }

  auto score = [&](const Hyper& h) {
    double total = 0.0;
    for (std::size_t f = 0; f < splits.size(); ++f) {
      const auto& s = splits[f];
      const Model m = fit_model(family, s.xt, s.yt, h, Rng::derive(seed, f), options);
      const Eigen::VectorXd e = predict(m, s.xv) - s.yv;
      total += std::sqrt(e.squaredNorm() / static_cast<double>(e.size()));
    }
    return total / static_cast<double>(splits.size());
  };

  const auto grid = log_grid();
  result.best_rmse = std::numeric_limits<double>::infinity();
  auto consider = [&](const Hyper& h) {
    const double r = score(h);
    result.table.push_back({h, r});
    if (r < result.best_rmse) {
      result.best_rmse = r;
      result.best = h;
    }
  };
  if (family == Family::svr) {
    for (double c : grid) {
      for (double gamma : grid) {
        Hyper h = base;
        h.c = c;
        h.gamma = gamma;
        consider(h);
      }
    }
  } else {
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
      Hyper h = base;
      h.alpha = *it;
      consider(h);
    }
  }
  result.model = fit_model(family, x, y, result.best, seed, options);
  return result;
}

// ---------------------------------------------------------------------------
// Predictor

Eigen::VectorXd TrainedPredictor::predict(const Eigen::MatrixXd& raw) const {
  check_cols(static_cast<Eigen::Index>(columns.size()), raw);
  return canyonpl::predict(model, scaler.transform(raw));
}

TrainedPredictor train_predictor(Family family, const FeatureTable& train, std::uint64_t seed,
                                 const FitOptions& options) {
  TrainedPredictor p;
  p.family = family;
  p.columns = train.columns;
  p.scaler = StandardScaler::fit(train.values);
  auto gs = grid_search_cv(family, p.scaler.transform(train.values), train.target, seed, options);
  p.hyper = gs.best;
  p.model = std::move(gs.model);
  return p;
}

namespace {

BlobKind kind_of(Family f) {
  switch (f) {
    case Family::lasso:
    case Family::elastic_net:
      return BlobKind::linear_model;
    case Family::random_forest:
      return BlobKind::forest_model;
    case Family::svr:
      return BlobKind::svr_model;
  }
  return BlobKind::linear_model;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void save_predictor(const std::filesystem::path& path, const TrainedPredictor& p) {
  BlobWriter w(kind_of(p.family));
  w.str(to_string(p.family));
  w.u64(p.columns.size());
  for (const auto& c : p.columns) w.str(c);
  w.f64_array(to_vec(p.scaler.means()));
  w.f64_array(to_vec(p.scaler.stds()));
  for (double v : {p.hyper.alpha, p.hyper.delta, p.hyper.c, p.hyper.gamma, p.hyper.epsilon}) w.f64(v);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          w.f64_array(to_vec(m.weights));
          w.f64(m.intercept);
          w.f64(m.alpha);
          w.f64(m.delta);
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          w.u64(m.config.n_trees);
          w.u64(m.config.max_depth);
          w.u64(m.config.bootstrap ? 1 : 0);
          w.u64(m.seed);
          w.u64(static_cast<std::uint64_t>(m.n_features));
          w.u64(m.trees.size());
          for (const auto& t : m.trees) {
            w.u64(t.nodes.size());
            for (const auto& n : t.nodes) {
              w.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(n.feature)));
              w.f64(n.threshold);
              w.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(n.left)));
              w.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(n.right)));
              w.f64(n.value);
              w.u64(n.samples);
            }
          }
        } else {
          w.f64(m.c);
          w.f64(m.gamma);
          w.f64(m.epsilon);
          w.matrix(m.support_vectors);
          w.f64_array(to_vec(m.coef));
          w.f64(m.bias);
        }
      },
      p.model);
  w.save(path);
}

TrainedPredictor load_predictor(const std::filesystem::path& path) {
  const BlobKind kind = BlobReader::peek_kind(path);
  if (kind != BlobKind::linear_model && kind != BlobKind::forest_model && kind != BlobKind::svr_model)
    throw Error(path.string() + " does not hold a regression model");
  auto r = BlobReader::load(path, kind);
  TrainedPredictor p;
  p.family = parse_family(r.str());
  if (kind_of(p.family) != kind) throw Error("model file kind and family disagree");
  const auto ncols = r.u64();
  for (std::uint64_t i = 0; i < ncols; ++i) p.columns.push_back(r.str());
  auto means = from_vec(r.f64_array());
  auto stds = from_vec(r.f64_array());
  p.scaler = StandardScaler(std::move(means), std::move(stds));
  p.hyper.alpha = r.f64();
  p.hyper.delta = r.f64();
  p.hyper.c = r.f64();
  p.hyper.gamma = r.f64();
  p.hyper.epsilon = r.f64();
  if (kind == BlobKind::linear_model) {
    LinearModel m;
    m.weights = from_vec(r.f64_array());
    m.intercept = r.f64();
    m.alpha = r.f64();
    m.delta = r.f64();
    p.model = std::move(m);
  } else if (kind == BlobKind::forest_model) {
    ForestModel m;
    m.config.n_trees = r.u64();
    m.config.max_depth = r.u64();
    m.config.bootstrap = r.u64() != 0;
    m.seed = r.u64();
    m.n_features = static_cast<Eigen::Index>(r.u64());
    const auto ntrees = r.u64();
    for (std::uint64_t t = 0; t < ntrees; ++t) {
      Tree tree;
      const auto nn = r.u64();
      for (std::uint64_t k = 0; k < nn; ++k) {
        TreeNode n;
        n.feature = static_cast<int>(static_cast<std::int64_t>(r.u64()));
        n.threshold = r.f64();
        n.left = static_cast<std::int32_t>(static_cast<std::int64_t>(r.u64()));
        n.right = static_cast<std::int32_t>(static_cast<std::int64_t>(r.u64()));
        n.value = r.f64();
        n.samples = static_cast<std::uint32_t>(r.u64());
        tree.nodes.push_back(n);
      }
      m.trees.push_back(std::move(tree));
    }
    p.model = std::move(m);
  } else {
    SvrModel m;
    m.c = r.f64();
    m.gamma = r.f64();
    m.epsilon = r.f64();
    m.support_vectors = r.matrix();
    m.coef = from_vec(r.f64_array());
    m.bias = r.f64();
    p.model = std::move(m);
  }
  if (!r.at_end()) throw Error("trailing bytes in model file " + path.string());
  if (static_cast<std::size_t>(p.scaler.means().size()) != p.columns.size())
    throw Error("model scaler does not match its feature columns");
  return p;
}

}  // namespace canyonpl
