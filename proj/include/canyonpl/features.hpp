#pragma once

// Feature tables shared by every learner, and the per-feature standard scaler.

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace canyonpl {

// Rows are links, in dataset order. `target` is the measured path loss in dB.
struct FeatureTable {
  std::vector<std::string> link_ids;
  std::vector<std::string> street_ids;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;
  Eigen::VectorXd target;

  std::size_t rows() const { return link_ids.size(); }
  std::size_t cols() const { return columns.size(); }

  FeatureTable select_rows(std::span<const std::size_t> rows) const;
  FeatureTable select_columns(std::span<const std::size_t> cols) const;
  FeatureTable select_columns(std::span<const std::string> names) const;
  std::size_t column_index(const std::string& name) const;
};

// Side-by-side join of two tables over the same links (same order).
FeatureTable concat_columns(const FeatureTable& left, const FeatureTable& right);

// CSV layout: link_id,street_id,<feature columns...>,pl_db
void save_feature_table(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable load_feature_table(const std::filesystem::path& path);

// Population-std standardization. Constant columns map to zero.
class StandardScaler {
 public:
  static StandardScaler fit(const Eigen::MatrixXd& train);

  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& z) const;

  const Eigen::VectorXd& means() const { return means_; }
  const Eigen::VectorXd& stds() const { return stds_; }
  bool is_constant(Eigen::Index col) const { return stds_[col] == 0.0; }

  StandardScaler() = default;
  StandardScaler(Eigen::VectorXd means, Eigen::VectorXd stds) : means_(std::move(means)), stds_(std::move(stds)) {}

 private:
  Eigen::VectorXd means_;
  Eigen::VectorXd stds_;
};

}  // namespace canyonpl
