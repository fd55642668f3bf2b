#include "canyonpl/features.hpp"

#include <algorithm>
#include <cmath>

#include "canyonpl/error.hpp"
#include "canyonpl/text_io.hpp"

namespace canyonpl {

FeatureTable FeatureTable::select_rows(std::span<const std::size_t> rows) const {
  FeatureTable out;
  out.columns = columns;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
  out.target.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = static_cast<Eigen::Index>(rows[r]);
    if (rows[r] >= link_ids.size()) throw InvariantError("row index out of range");
    out.link_ids.push_back(link_ids[rows[r]]);
    out.street_ids.push_back(street_ids[rows[r]]);
    out.values.row(static_cast<Eigen::Index>(r)) = values.row(src);
    out.target[static_cast<Eigen::Index>(r)] = target[src];
  }
  return out;
}

FeatureTable FeatureTable::select_columns(std::span<const std::size_t> cols) const {
  FeatureTable out;
  out.link_ids = link_ids;
  out.street_ids = street_ids;
  out.target = target;
  out.values.resize(values.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c] >= columns.size()) throw InvariantError("column index out of range");
    out.columns.push_back(columns[cols[c]]);
    out.values.col(static_cast<Eigen::Index>(c)) = values.col(static_cast<Eigen::Index>(cols[c]));
  }
  return out;
}

FeatureTable FeatureTable::select_columns(std::span<const std::string> names) const {
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(column_index(n));
  return select_columns(idx);
}

std::size_t FeatureTable::column_index(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw InvariantError("no feature column named '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

FeatureTable concat_columns(const FeatureTable& left, const FeatureTable& right) {
  if (left.link_ids != right.link_ids) throw InvariantError("feature tables cover different links");
  FeatureTable out = left;
  out.columns.insert(out.columns.end(), right.columns.begin(), right.columns.end());
  out.values.resize(left.values.rows(), left.values.cols() + right.values.cols());
  out.values << left.values, right.values;
  return out;
}

void save_feature_table(const std::filesystem::path& path, const FeatureTable& t) {
  auto out = text::open_for_write(path);
  out << "link_id,street_id";
  for (const auto& c : t.columns) out << ',' << c;
  out << ",pl_db\n";
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    out << t.link_ids[r] << ',' << t.street_ids[r];
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) out << ',' << text::format_double(t.values(row, c));
    out << ',' << text::format_double(t.target[row]) << '\n';
  }
}

FeatureTable load_feature_table(const std::filesystem::path& path) {
  FeatureTable t;
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  bool header = true;
  text::for_each_record(path, [&](std::string_view line, std::size_t number) {
    const auto f = text::split(line, ',');
    if (header) {
      if (f.size() < 3 || f[0] != "link_id" || f[1] != "street_id" || f.back() != "pl_db")
        throw ParseError("feature header must be link_id,street_id,...,pl_db", number);
      for (std::size_t i = 2; i + 1 < f.size(); ++i) t.columns.emplace_back(f[i]);
      header = false;
      return;
    }
    if (f.size() != t.columns.size() + 3)
      throw ParseError("expected " + std::to_string(t.columns.size() + 3) + " fields", number);
    t.link_ids.emplace_back(f[0]);
    t.street_ids.emplace_back(f[1]);
    std::vector<double> row;
    for (std::size_t i = 2; i + 1 < f.size(); ++i) row.push_back(text::parse_double(f[i], number));
    rows.push_back(std::move(row));
    targets.push_back(text::parse_double(f.back(), number, "pl_db"));
  });
  if (header) throw ParseError("missing header", 0);
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.columns.size()));
  t.target.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c)
      t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    t.target[static_cast<Eigen::Index>(r)] = targets[r];
  }
  return t;
}

StandardScaler StandardScaler::fit(const Eigen::MatrixXd& train) {
  if (train.rows() == 0) throw InvariantError("cannot fit a scaler on zero rows");
  const double n = static_cast<double>(train.rows());
  Eigen::VectorXd means(train.cols());
  Eigen::VectorXd stds(train.cols());
  for (Eigen::Index c = 0; c < train.cols(); ++c) {
    // Fixed summation order keeps fits reproducible.
    double sum = 0.0;
    for (Eigen::Index r = 0; r < train.rows(); ++r) sum += train(r, c);
    const double mu = sum / n;
    double sq = 0.0;
    for (Eigen::Index r = 0; r < train.rows(); ++r) sq += (train(r, c) - mu) * (train(r, c) - mu);
    double sd = std::sqrt(sq / n);
    // Rounding noise on a constant column must still count as constant.
    if (sd <= 1e-12 * std::max(1.0, std::abs(mu))) sd = 0.0;
    means[c] = mu;
    stds[c] = sd;
  }
  return {std::move(means), std::move(stds)};
}

Eigen::MatrixXd StandardScaler::transform(const Eigen::MatrixXd& x) const {
  if (x.cols() != means_.size()) throw ShapeError("scaler feature count mismatch");
  Eigen::MatrixXd z(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (stds_[c] == 0.0) {
      z.col(c).setZero();
    } else {
      z.col(c) = (x.col(c).array() - means_[c]) / stds_[c];
    }
  }
  return z;
}

Eigen::MatrixXd StandardScaler::inverse_transform(const Eigen::MatrixXd& z) const {
  if (z.cols() != means_.size()) throw ShapeError("scaler feature count mismatch");
  Eigen::MatrixXd x(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c) x.col(c) = z.col(c).array() * stds_[c] + means_[c];
  return x;
}

}  // namespace canyonpl
