#include "canyonpl/evaluation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "canyonpl/baselines.hpp"
#include "canyonpl/clutter.hpp"
#include "canyonpl/error.hpp"
#include "canyonpl/rng.hpp"
#include "canyonpl/text_io.hpp"

namespace canyonpl {

double rmse(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw ShapeError("rmse: inputs differ in length");
  if (y.empty()) throw InvariantError("rmse of an empty set");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return std::sqrt(s / static_cast<double>(y.size()));
}

double rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  return rmse(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
              std::span<const double>(yhat.data(), static_cast<std::size_t>(yhat.size())));
}

double population_std(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::string to_string(Protocol p) {
  return p == Protocol::street_by_street ? "street-by-street" : "shuffle-split";
}

Protocol parse_protocol(const std::string& s) {
  if (s == "street-by-street" || s == "street_by_street") return Protocol::street_by_street;
  if (s == "shuffle-split" || s == "links-shuffle-split" || s == "links_shuffle_split")
    return Protocol::links_shuffle_split;
  throw ConfigError("unknown protocol '" + s + "' (expected street-by-street or shuffle-split)");
}

SplitPlan plan_links_shuffle_split(const Dataset& dataset, std::size_t iterations, std::uint64_t seed) {
  const std::size_t n = dataset.links.size();
  if (n < 5) throw InvariantError("shuffle-split needs at least 5 links");
  if (iterations == 0) throw ConfigError("shuffle-split needs at least one iteration");
  SplitPlan plan;
  plan.protocol = Protocol::links_shuffle_split;
  plan.seed = seed;
  plan.iterations = iterations;
  const std::size_t n_train = n * 4 / 5;
  for (std::size_t it = 0; it < iterations; ++it) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(Rng::derive(seed, it));
    rng.shuffle(order);
    Fold f;
    f.index = it;
    f.label = "shuffle-" + std::to_string(it + 1);
    f.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    f.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

SplitPlan plan_street_by_street(const Dataset& dataset) {
  const auto ids = dataset.street_ids();
  if (ids.size() < 2) throw InvariantError("street-by-street needs at least 2 streets");
  SplitPlan plan;
  plan.protocol = Protocol::street_by_street;
  plan.iterations = ids.size();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    Fold f;
    f.index = k;
    f.label = ids[k];
    for (std::size_t i = 0; i < dataset.links.size(); ++i)
      (dataset.links[i].street_id == ids[k] ? f.test : f.train).push_back(i);
    if (f.test.empty()) throw InvariantError("street '" + ids[k] + "' has no links");
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

FoldSentinel::FoldSentinel(const Fold& fold, std::span<const std::string> link_ids) : label_(fold.label) {
  for (auto i : fold.train) train_.insert(link_ids[i]);
  for (auto i : fold.test) test_.insert(link_ids[i]);
}

void FoldSentinel::check(std::span<const std::string> ids, const std::string& what) const {
  for (const auto& id : ids) {
    if (test_.count(id))
      throw LeakageError(what + " in fold " + label_ + " was given test link '" + id + "'");
    if (!train_.count(id))
      throw LeakageError(what + " in fold " + label_ + " was given link '" + id + "' outside the training set");
  }
}

std::string to_string(FeatureSet f) {
  switch (f) {
    case FeatureSet::clutter:
      return "clutter";
    case FeatureSet::clutter_building:
      return "clutter+building";
    case FeatureSet::clutter4:
      return "clutter4";
    case FeatureSet::clutter4_building:
      return "clutter4+building";
  }
  return "clutter";
}

FeatureSet parse_feature_set(const std::string& s) {
  if (s == "clutter") return FeatureSet::clutter;
  if (s == "clutter+building" || s == "clutter_building") return FeatureSet::clutter_building;
  if (s == "clutter4") return FeatureSet::clutter4;
  if (s == "clutter4+building" || s == "clutter4_building") return FeatureSet::clutter4_building;
  throw ConfigError("unknown feature set '" + s +
                    "' (expected clutter, clutter+building, clutter4 or clutter4+building)");
}

bool uses_building(FeatureSet f) { return f == FeatureSet::clutter_building || f == FeatureSet::clutter4_building; }

std::vector<std::string> clutter4_columns() {
  std::vector<std::string> out;
  for (auto f : kClutter4) out.emplace_back(kClutterColumns[static_cast<std::size_t>(f)]);
  return out;
}

const ModelResult& EvaluationReport::model(const std::string& name) const {
  for (const auto& m : models)
    if (m.model == name) return m;
  throw Error("report has no model '" + name + "'");
}

namespace {

// Runs task(i) for i in [0, n) on up to `workers` threads. The first failure
// (lowest index) is rethrown after all threads finish.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string describe(Family family, const Hyper& h, const FitOptions& opt) {
  auto g = [](double v) { return text::format_double(v); };
  switch (family) {
    case Family::lasso:
      return "alpha=" + g(h.alpha);
    case Family::elastic_net:
      return "alpha=" + g(h.alpha) + ";delta=" + g(h.delta);
    case Family::random_forest:
      return "trees=" + std::to_string(opt.forest.n_trees) + ";depth=" + std::to_string(opt.forest.max_depth);
    case Family::svr:
      return "C=" + g(h.c) + ";gamma=" + g(h.gamma) + ";epsilon=" + g(h.epsilon);
  }
  return "";
}

std::vector<std::size_t> all_columns_except(const FeatureTable& t, std::size_t skip) {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < t.cols(); ++c)
    if (c != skip) cols.push_back(c);
  return cols;
}

void check_alignment(const Dataset& dataset, const FeatureTable& clutter) {
  if (clutter.rows() != dataset.links.size()) throw InvariantError("feature table does not cover every link");
  for (std::size_t i = 0; i < dataset.links.size(); ++i)
    if (clutter.link_ids[i] != dataset.links[i].link_id)
      throw InvariantError("feature rows are not in dataset link order");
}

struct FoldOutcome {
  std::vector<double> rmse;
  std::vector<std::string> params;
  std::vector<Prediction> predictions;
};

}  // namespace

EvaluationReport run_protocol(const SplitPlan& plan, const Dataset& dataset, const FeatureTable& clutter,
                              std::span<const FacadePatch> raw_patches, const ProtocolOptions& options) {
  check_alignment(dataset, clutter);
  const bool building = uses_building(options.feature_set);
  if (building && raw_patches.size() != dataset.links.size())
    throw InvariantError("building features need one facade patch per link");
  if (plan.folds.empty()) throw InvariantError("split plan has no folds");

  FeatureTable base = clutter;
  if (options.feature_set == FeatureSet::clutter4 || options.feature_set == FeatureSet::clutter4_building) {
    const auto names = clutter4_columns();
    base = clutter.select_columns(std::span<const std::string>(names));
  }

  std::vector<std::string> names;
  for (auto f : options.families) names.push_back(to_string(f));
  for (const auto& l : options.learners) names.push_back(l.name);
  if (options.baselines) {
    names.emplace_back(kSlopeIntercept);
    names.emplace_back(kUmaLos);
    names.emplace_back(kUmiNlos);
  }
  if (names.empty()) throw ConfigError("no models selected");

  std::vector<FoldOutcome> outcomes(plan.folds.size());
  parallel_for(plan.folds.size(), options.workers, [&](std::size_t fi) {
    const Fold& fold = plan.folds[fi];
    if (fold.train.empty() || fold.test.empty()) throw InvariantError("fold " + fold.label + " is empty");
    const FoldSentinel sentinel(fold, clutter.link_ids);
    const std::uint64_t fold_seed = Rng::derive(options.seed, fold.index);

    FeatureTable train = base.select_rows(fold.train);
    FeatureTable test = base.select_rows(fold.test);
    if (building) {
      std::vector<FacadePatch> train_patches;
      for (auto i : fold.train) train_patches.push_back(raw_patches[i]);
      sentinel.check(train.link_ids, "autoencoder");
      const auto model =
          ae::fit_autoencoder(train_patches, options.ae_architecture, options.ae_train, options.ae_seed);
      std::vector<FacadePatch> test_patches;
      for (auto i : fold.test) test_patches.push_back(raw_patches[i]);
      auto latent_table = [&](const FeatureTable& rows, std::span<const FacadePatch> patches) {
        FeatureTable t;
        t.link_ids = rows.link_ids;
        t.street_ids = rows.street_ids;
        t.target = rows.target;
        t.values = ae::encode_raw(model, patches);
        for (Eigen::Index c = 0; c < t.values.cols(); ++c) t.columns.push_back("ae" + std::to_string(c));
        return t;
      };
      train = concat_columns(train, latent_table(train, train_patches));
      test = concat_columns(test, latent_table(test, test_patches));
    }
    FeatureTable features_only = test;
    features_only.target.setConstant(std::numeric_limits<double>::quiet_NaN());

    FoldOutcome out;
    auto record = [&](const std::string& model, const Eigen::VectorXd& yhat, std::string params) {
      if (yhat.size() != test.target.size()) throw ShapeError(model + " returned the wrong number of predictions");
      out.rmse.push_back(rmse(test.target, yhat));
      out.params.push_back(std::move(params));
      for (std::size_t r = 0; r < fold.test.size(); ++r) {
        const auto& link = dataset.links[fold.test[r]];
        out.predictions.push_back({fold.index, model, link.link_id, link.street_id, link.d3d, link.measured_pl,
                                   yhat[static_cast<Eigen::Index>(r)]});
      }
    };

    for (auto family : options.families) {
      sentinel.check(train.link_ids, to_string(family));
      const auto p = train_predictor(family, train, fold_seed, options.fit);
      record(to_string(family), p.predict(test.values), describe(family, p.hyper, options.fit));
    }
    for (const auto& learner : options.learners) {
      sentinel.check(train.link_ids, learner.name);
      const auto fn = learner.fit(train, fold_seed);
      record(learner.name, fn(features_only), "");
    }
    if (options.baselines) {
      sentinel.check(train.link_ids, kSlopeIntercept);
      std::vector<double> d, pl;
      for (auto i : fold.train) {
        d.push_back(dataset.links[i].d3d);
        pl.push_back(dataset.links[i].measured_pl);
      }
      const auto si = fit_slope_intercept(d, pl);
      Eigen::VectorXd y_si(static_cast<Eigen::Index>(fold.test.size()));
      Eigen::VectorXd y_uma(y_si.size());
      Eigen::VectorXd y_umi(y_si.size());
      for (std::size_t r = 0; r < fold.test.size(); ++r) {
        const double d3d = dataset.links[fold.test[r]].d3d;
        const auto k = static_cast<Eigen::Index>(r);
        y_si[k] = predict_slope_intercept(si, d3d);
        y_uma[k] = gpp_uma_los(d3d);
        y_umi[k] = gpp_umi_nlos(d3d);
      }
      record(kSlopeIntercept, y_si,
             "A=" + text::format_double(si.a) + ";n=" + text::format_double(si.n) +
                 ";sigma=" + text::format_double(si.sigma));
      record(kUmaLos, y_uma, "fc=28");
      record(kUmiNlos, y_umi, "fc=28");
    }
    outcomes[fi] = std::move(out);
  });

  EvaluationReport report;
  report.protocol = plan.protocol;
  report.feature_set = to_string(options.feature_set);
  report.columns = base.columns;
  if (building)
    for (int c = 0; c < options.ae_architecture.latent; ++c) report.columns.push_back("ae" + std::to_string(c));
  for (const auto& f : plan.folds) {
    report.fold_labels.push_back(f.label);
    report.train_sizes.push_back(f.train.size());
    report.test_sizes.push_back(f.test.size());
  }
  for (std::size_t m = 0; m < names.size(); ++m) {
    ModelResult r;
    r.model = names[m];
    for (const auto& o : outcomes) {
      r.fold_rmse.push_back(o.rmse[m]);
      r.fold_params.push_back(o.params[m]);
    }
    r.mean = std::accumulate(r.fold_rmse.begin(), r.fold_rmse.end(), 0.0) / static_cast<double>(r.fold_rmse.size());
    r.std = population_std(r.fold_rmse);
    report.models.push_back(std::move(r));
  }
  for (auto& o : outcomes)
    report.predictions.insert(report.predictions.end(), std::make_move_iterator(o.predictions.begin()),
                              std::make_move_iterator(o.predictions.end()));
  return report;
}

std::vector<DistanceBin> distance_binned_rmse(std::span<const Prediction> predictions, const std::string& model) {
  std::array<double, 5> sse{};
  std::array<std::size_t, 5> count{};
  for (const auto& p : predictions) {
    if (p.model != model) continue;
    if (!(p.d3d > 0.0) || p.d3d > 500.0) throw InvariantError("link distance outside (0, 500] m");
    const auto bin = static_cast<std::size_t>(std::ceil(p.d3d / 100.0)) - 1;
    sse[bin] += (p.measured - p.predicted) * (p.measured - p.predicted);
    ++count[bin];
  }
  std::vector<DistanceBin> out;
  for (std::size_t b = 0; b < 5; ++b)
    if (count[b] > 0)
      out.push_back({100.0 * static_cast<double>(b + 1), std::sqrt(sse[b] / static_cast<double>(count[b])), count[b]});
  return out;
}

std::vector<FeatureWeight> lasso_importance(const SplitPlan& plan, const FeatureTable& clutter,
                                            const ProtocolOptions& options) {
  std::vector<Eigen::VectorXd> weights(plan.folds.size());
  parallel_for(plan.folds.size(), options.workers, [&](std::size_t fi) {
    const Fold& fold = plan.folds[fi];
    const FoldSentinel sentinel(fold, clutter.link_ids);
    const FeatureTable train = clutter.select_rows(fold.train);
    sentinel.check(train.link_ids, "lasso");
    const auto p = train_predictor(Family::lasso, train, Rng::derive(options.seed, fold.index), options.fit);
    weights[fi] = std::get<LinearModel>(p.model).weights;
  });
  std::vector<FeatureWeight> out;
  for (std::size_t c = 0; c < clutter.cols(); ++c) {
    FeatureWeight w;
    w.feature = clutter.columns[c];
    for (const auto& v : weights) w.per_fold.push_back(v[static_cast<Eigen::Index>(c)]);
    w.mean = std::accumulate(w.per_fold.begin(), w.per_fold.end(), 0.0) / static_cast<double>(w.per_fold.size());
    w.min = *std::min_element(w.per_fold.begin(), w.per_fold.end());
    w.max = *std::max_element(w.per_fold.begin(), w.per_fold.end());
    out.push_back(std::move(w));
  }
  return out;
}

LeaveOneOut leave_one_feature_out(const SplitPlan& plan, const Dataset& dataset, const FeatureTable& clutter,
                                  Family family, const ProtocolOptions& options) {
  if (clutter.cols() < 2) throw InvariantError("leave-one-feature-out needs at least two features");
  ProtocolOptions opt = options;
  opt.feature_set = FeatureSet::clutter;
  opt.families = {family};
  opt.learners.clear();
  opt.baselines = false;
  LeaveOneOut out;
  out.model = to_string(family);
  out.full_rmse = run_protocol(plan, dataset, clutter, {}, opt).models.front().mean;
  for (std::size_t c = 0; c < clutter.cols(); ++c) {
    const auto cols = all_columns_except(clutter, c);
    const FeatureTable reduced = clutter.select_columns(std::span<const std::size_t>(cols));
    const double r = run_protocol(plan, dataset, reduced, {}, opt).models.front().mean;
    out.drops.push_back({clutter.columns[c], r, r - out.full_rmse});
  }
  return out;
}

std::vector<AeRunSummary> best_of_n_ae(const SplitPlan& plan, const Dataset& dataset, const FeatureTable& clutter,
                                       std::span<const FacadePatch> raw_patches, std::size_t n_runs,
                                       std::uint64_t base_seed, const ProtocolOptions& options) {
  if (n_runs == 0) throw ConfigError("best-of-n needs at least one autoencoder run");
  ProtocolOptions opt = options;
  if (!uses_building(opt.feature_set)) opt.feature_set = FeatureSet::clutter_building;
  opt.families = {Family::elastic_net};
  opt.learners.clear();
  opt.baselines = false;

  std::vector<AeRunSummary> out(plan.folds.size());
  for (std::size_t f = 0; f < plan.folds.size(); ++f) out[f].label = plan.folds[f].label;
  for (std::size_t r = 0; r < n_runs; ++r) {
    opt.ae_seed = base_seed + r;
    const auto report = run_protocol(plan, dataset, clutter, raw_patches, opt);
    const auto& m = report.models.front();
    for (std::size_t f = 0; f < out.size(); ++f) out[f].run_rmse.push_back(m.fold_rmse[f]);
  }
  for (auto& s : out) {
    s.average = std::accumulate(s.run_rmse.begin(), s.run_rmse.end(), 0.0) / static_cast<double>(s.run_rmse.size());
    s.best = *std::min_element(s.run_rmse.begin(), s.run_rmse.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report files

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

}  // namespace

void write_report(const std::filesystem::path& dir, const EvaluationReport& report) {
  using text::format_double;
  {
    auto out = text::open_for_write(dir / "models.csv");
    out << "model,feature_set,mean_rmse,std_rmse,folds\n";
    for (const auto& m : report.models)
      out << m.model << ',' << report.feature_set << ',' << format_double(m.mean) << ',' << format_double(m.std)
          << ',' << m.fold_rmse.size() << '\n';
  }
  {
    auto out = text::open_for_write(dir / "folds.csv");
    out << "fold,label,model,rmse,train_links,test_links,params\n";
    for (std::size_t f = 0; f < report.fold_labels.size(); ++f)
      for (const auto& m : report.models)
        out << f << ',' << report.fold_labels[f] << ',' << m.model << ',' << format_double(m.fold_rmse[f]) << ','
            << report.train_sizes[f] << ',' << report.test_sizes[f] << ',' << csv_field(m.fold_params[f]) << '\n';
  }
  {
    auto out = text::open_for_write(dir / "predictions.csv");
    out << "fold,model,link_id,street_id,d3d,measured_pl,predicted_pl\n";
    for (const auto& p : report.predictions)
      out << p.fold << ',' << p.model << ',' << p.link_id << ',' << p.street_id << ',' << format_double(p.d3d) << ','
          << format_double(p.measured) << ',' << format_double(p.predicted) << '\n';
  }
  nlohmann::ordered_json bins = nlohmann::ordered_json::array();
  {
    auto out = text::open_for_write(dir / "distance_bins.csv");
    out << "model,bin_end,rmse,links\n";
    for (const auto& m : report.models) {
      for (const auto& b : distance_binned_rmse(report.predictions, m.model)) {
        out << m.model << ',' << format_double(b.bin_end) << ',' << format_double(b.rmse) << ',' << b.count << '\n';
        bins.push_back({{"model", m.model}, {"bin_end", b.bin_end}, {"rmse", b.rmse}, {"links", b.count}});
      }
    }
  }
  nlohmann::ordered_json j;
  j["protocol"] = to_string(report.protocol);
  j["feature_set"] = report.feature_set;
  j["columns"] = report.columns;
  j["folds"] = report.fold_labels;
  j["train_links"] = report.train_sizes;
  j["test_links"] = report.test_sizes;
  auto& models = j["models"] = nlohmann::ordered_json::array();
  for (const auto& m : report.models)
    models.push_back({{"model", m.model},
                      {"mean_rmse", m.mean},
                      {"std_rmse", m.std},
                      {"fold_rmse", m.fold_rmse},
                      {"fold_params", m.fold_params}});
  j["distance_bins"] = bins;
  j["predictions"] = "predictions.csv";
  auto out = text::open_for_write(dir / "summary.json");
  out << j.dump(2) << '\n';
}

void write_importance(const std::filesystem::path& dir, std::span<const FeatureWeight> weights,
                      const LeaveOneOut* lofo) {
  using text::format_double;
  {
    auto out = text::open_for_write(dir / "importance.csv");
    out << "feature,mean_weight,min_weight,max_weight\n";
    for (const auto& w : weights)
      out << w.feature << ',' << format_double(w.mean) << ',' << format_double(w.min) << ','
          << format_double(w.max) << '\n';
  }
  if (lofo) {
    auto out = text::open_for_write(dir / "leave_one_out.csv");
    out << "feature,model,mean_rmse,delta_rmse\n";
    out << "(none)," << lofo->model << ',' << format_double(lofo->full_rmse) << ",0\n";
    for (const auto& d : lofo->drops)
      out << d.feature << ',' << lofo->model << ',' << format_double(d.mean_rmse) << ',' << format_double(d.delta)
          << '\n';
  }
}

void write_ae_runs(const std::filesystem::path& dir, std::span<const AeRunSummary> runs) {
  using text::format_double;
  auto out = text::open_for_write(dir / "ae_runs.csv");
  out << "fold,run,rmse\n";
  for (const auto& s : runs)
    for (std::size_t r = 0; r < s.run_rmse.size(); ++r) out << s.label << ',' << r << ',' << format_double(s.run_rmse[r]) << '\n';
  auto sum = text::open_for_write(dir / "ae_best_of_n.csv");
  sum << "fold,average_rmse,best_rmse\n";
  for (const auto& s : runs) sum << s.label << ',' << format_double(s.average) << ',' << format_double(s.best) << '\n';
}

}  // namespace canyonpl
