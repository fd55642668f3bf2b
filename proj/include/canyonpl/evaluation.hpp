#pragma once

// Train/test protocols, RMSE aggregation and the feature-importance analyses.
//
// Every fit inside a fold (feature scaler, grid scaler, autoencoder, model,
// baseline) is checked against the fold's id sets first; a training set that
// contains a test link raises LeakageError and aborts the run.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "canyonpl/autoencoder.hpp"
#include "canyonpl/building.hpp"
#include "canyonpl/features.hpp"
#include "canyonpl/regressors.hpp"
#include "canyonpl/scene.hpp"

namespace canyonpl {

double rmse(std::span<const double> y, std::span<const double> yhat);
double rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

// Population standard deviation (divide by n).
double population_std(std::span<const double> v);

enum class Protocol { links_shuffle_split, street_by_street };

std::string to_string(Protocol p);
Protocol parse_protocol(const std::string& s);

// Row indices refer to dataset link order.
struct Fold {
  std::size_t index = 0;
  std::string label;  // street id, or "shuffle-<k>"
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct SplitPlan {
  Protocol protocol = Protocol::street_by_street;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  std::vector<Fold> folds;
};

// Each iteration shuffles all links; the first floor(0.8 n) train, the rest test.
SplitPlan plan_links_shuffle_split(const Dataset& dataset, std::size_t iterations, std::uint64_t seed);
// One fold per street, testing on that street and training on all others.
SplitPlan plan_street_by_street(const Dataset& dataset);

class FoldSentinel {
 public:
  FoldSentinel(const Fold& fold, std::span<const std::string> link_ids);

  // Throws LeakageError when `ids` holds a test link or a link outside the fold.
  void check(std::span<const std::string> ids, const std::string& what) const;

 private:
  std::string label_;
  std::unordered_set<std::string> train_;
  std::unordered_set<std::string> test_;
};

enum class FeatureSet { clutter, clutter_building, clutter4, clutter4_building };

std::string to_string(FeatureSet f);
FeatureSet parse_feature_set(const std::string& s);
bool uses_building(FeatureSet f);

// Column names of the reduced clutter set, canonical order.
std::vector<std::string> clutter4_columns();

// Returns a predictor for feature rows (target column withheld).
using PredictFn = std::function<Eigen::VectorXd(const FeatureTable& features)>;

// A custom learner. `fit` only ever sees the active fold's training rows.
struct Learner {
  std::string name;
  std::function<PredictFn(const FeatureTable& train, std::uint64_t seed)> fit;
};

struct ProtocolOptions {
  FeatureSet feature_set = FeatureSet::clutter;
  std::vector<Family> families = {Family::elastic_net};
  std::vector<Learner> learners;
  bool baselines = true;
  FitOptions fit;
  std::uint64_t seed = 0;  // grid-search and forest seeds derive from it per fold
  ae::Architecture ae_architecture;
  ae::TrainConfig ae_train;
  std::uint64_t ae_seed = 0;
  std::size_t workers = 1;
};

struct ModelResult {
  std::string model;
  std::vector<double> fold_rmse;
  std::vector<std::string> fold_params;  // selected hyperparameters, per fold
  double mean = 0.0;
  double std = 0.0;
};

struct Prediction {
  std::size_t fold = 0;
  std::string model;
  std::string link_id;
  std::string street_id;
  double d3d = 0.0;
  double measured = 0.0;
  double predicted = 0.0;
};

struct EvaluationReport {
  Protocol protocol = Protocol::street_by_street;
  std::string feature_set;
  std::vector<std::string> columns;
  std::vector<std::string> fold_labels;
  std::vector<std::size_t> train_sizes;
  std::vector<std::size_t> test_sizes;
  std::vector<ModelResult> models;  // families, learners, then baselines
  std::vector<Prediction> predictions;

  const ModelResult& model(const std::string& name) const;
};

inline constexpr const char* kSlopeIntercept = "slope-intercept";
inline constexpr const char* kUmaLos = "3gpp-uma-los";
inline constexpr const char* kUmiNlos = "3gpp-umi-nlos";

// `clutter` has one row per dataset link in dataset order. `raw_patches` (same
// order) is required for feature sets that include building features.
EvaluationReport run_protocol(const SplitPlan& plan, const Dataset& dataset, const FeatureTable& clutter,
                              std::span<const FacadePatch> raw_patches, const ProtocolOptions& options);

struct DistanceBin {
  double bin_end = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;
};

// Errors pooled over folds, grouped into (0,100], ..., (400,500] by d3d.
std::vector<DistanceBin> distance_binned_rmse(std::span<const Prediction> predictions, const std::string& model);

struct FeatureWeight {
  std::string feature;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> per_fold;
};

// Lasso weights (standardized features, alpha grid-searched per fold).
std::vector<FeatureWeight> lasso_importance(const SplitPlan& plan, const FeatureTable& clutter,
                                            const ProtocolOptions& options);

struct FeatureDrop {
  std::string feature;
  double mean_rmse = 0.0;
  double delta = 0.0;  // versus the full feature set
};

struct LeaveOneOut {
  std::string model;
  double full_rmse = 0.0;
  std::vector<FeatureDrop> drops;
};

LeaveOneOut leave_one_feature_out(const SplitPlan& plan, const Dataset& dataset, const FeatureTable& clutter,
                                  Family family, const ProtocolOptions& options);

struct AeRunSummary {
  std::string label;
  std::vector<double> run_rmse;  // one per seed
  double average = 0.0;
  double best = 0.0;
};

// Elastic-net on Clutter+Building features with AE seeds base_seed ... base_seed + n_runs - 1.
std::vector<AeRunSummary> best_of_n_ae(const SplitPlan& plan, const Dataset& dataset, const FeatureTable& clutter,
                                       std::span<const FacadePatch> raw_patches, std::size_t n_runs,
                                       std::uint64_t base_seed, const ProtocolOptions& options);

// Report files: models.csv, folds.csv, predictions.csv, distance_bins.csv, summary.json.
void write_report(const std::filesystem::path& dir, const EvaluationReport& report);
void write_importance(const std::filesystem::path& dir, std::span<const FeatureWeight> weights,
                      const LeaveOneOut* lofo);
void write_ae_runs(const std::filesystem::path& dir, std::span<const AeRunSummary> runs);

}  // namespace canyonpl
