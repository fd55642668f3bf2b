#pragma once

// Regression families used for path-loss prediction: Lasso and Elastic-net by
// cyclic coordinate descent, a bagged regression forest, and epsilon-SVR with
// an RBF kernel solved by SMO. Inputs are expected to be standardized.

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "canyonpl/features.hpp"

namespace canyonpl {

enum class Family { lasso, elastic_net, random_forest, svr };

std::string to_string(Family f);
Family parse_family(const std::string& s);

// ---------------------------------------------------------------------------
// Linear models

struct CdConfig {
  std::size_t max_sweeps = 1000;
  double tolerance = 1e-8;  // on the largest weight change in a sweep
};

struct LinearModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double alpha = 0.0;
  double delta = 1.0;  // l1 share of the penalty; 1 is Lasso
  CdConfig solver;
  std::size_t sweeps = 0;
  bool converged = false;
  // Objective after each sweep (index 0 is the starting point w = 0).
  std::vector<double> objective;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

// (1/2n)||y - b - Xw||^2 + alpha*delta*||w||_1 + alpha*(1-delta)/2*||w||^2
double elasticnet_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                            double intercept, double alpha, double delta);

LinearModel fit_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, const CdConfig& cd = {});
LinearModel fit_elasticnet(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, double delta = 0.5,
                           const CdConfig& cd = {});

// ---------------------------------------------------------------------------
// Random forest

struct ForestConfig {
  std::size_t n_trees = 20;
  std::size_t max_depth = 25;
  bool bootstrap = true;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;   // x[feature] <= threshold
  std::int32_t right = -1;
  double value = 0.0;       // leaf mean
  std::uint32_t samples = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  std::size_t depth() const;
};

struct ForestModel {
  ForestConfig config;
  std::uint64_t seed = 0;
  Eigen::Index n_features = 0;
  std::vector<Tree> trees;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

ForestModel fit_random_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed,
                              const ForestConfig& config = {});

// ---------------------------------------------------------------------------
// Support-vector regression

struct SmoConfig {
  double tolerance = 1e-3;  // maximal KKT violation at termination
  std::size_t max_iterations = 10'000'000;
};

struct SvrModel {
  double c = 1.0;
  double gamma = 1.0;
  double epsilon = 0.5;
  Eigen::MatrixXd support_vectors;  // one row per support vector
  Eigen::VectorXd coef;             // alpha_i - alpha*_i, each in [-C, C]
  double bias = 0.0;
  // Solver diagnostics.
  std::size_t iterations = 0;
  double kkt_violation = 0.0;
  double dual_objective = 0.0;  // minimization form

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma);

// Dual in minimization form for coefficients beta = alpha - alpha*, with the
// complementary pair assumed (alpha * alpha* = 0):
//   1/2 beta' K beta + epsilon*|beta|_1 - y' beta
double svr_dual_objective(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                          double epsilon);

// Called after every SMO step with the current 2n dual vector
// [alpha_1..alpha_n, alpha*_1..alpha*_n]. Used by tests to watch the box constraints.
using SmoObserver = void (*)(const Eigen::VectorXd& dual, double c, void* user);

SvrModel fit_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c, double gamma, double epsilon = 0.5,
                 const SmoConfig& smo = {}, SmoObserver observer = nullptr, void* user = nullptr);

// ---------------------------------------------------------------------------
// Hyperparameter search and the scaler-bound predictor

struct Hyper {
  double alpha = 0.0;
  double delta = 0.5;
  double c = 0.0;
  double gamma = 0.0;
  double epsilon = 0.5;
};

struct FitOptions {
  double delta = 0.5;
  double svr_epsilon = 0.5;
  CdConfig cd;
  ForestConfig forest;
  SmoConfig smo;
  std::size_t cv_folds = 5;
};

// {1e-4, 1e-3, ..., 1e4}
std::vector<double> log_grid();

using Model = std::variant<LinearModel, ForestModel, SvrModel>;

Model fit_model(Family family, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyper& hyper,
                std::uint64_t seed, const FitOptions& options = {});
Eigen::VectorXd predict(const Model& model, const Eigen::MatrixXd& x);

struct GridPoint {
  Hyper hyper;
  double mean_rmse = 0.0;
};

struct GridSearchResult {
  Hyper best;
  double best_rmse = 0.0;
  std::vector<GridPoint> table;
  Model model;  // refit on every row
};

// Row order is shuffled with `seed`, then cut into contiguous folds. Lasso and
// Elastic-net search alpha; SVR searches (C, gamma). The forest has no grid
// and is fitted directly. Ties go to larger alpha, then smaller C, smaller gamma.
GridSearchResult grid_search_cv(Family family, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                std::uint64_t seed, const FitOptions& options = {});

// A fitted model paired with the scaler of its training features.
struct TrainedPredictor {
  Family family = Family::lasso;
  std::vector<std::string> columns;
  StandardScaler scaler;
  Hyper hyper;
  Model model;

  // `raw` holds unscaled features in `columns` order.
  Eigen::VectorXd predict(const Eigen::MatrixXd& raw) const;
};

TrainedPredictor train_predictor(Family family, const FeatureTable& train, std::uint64_t seed,
                                 const FitOptions& options = {});

void save_predictor(const std::filesystem::path& path, const TrainedPredictor& predictor);
TrainedPredictor load_predictor(const std::filesystem::path& path);

}  // namespace canyonpl
