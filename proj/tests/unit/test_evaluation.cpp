#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "canyonpl/error.hpp"
#include "canyonpl/evaluation.hpp"
#include "canyonpl/rng.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace canyonpl;

namespace {

const oracle::Synthetic& fixture() {
  static const oracle::Synthetic s = [] {
    SceneConfig c;
    c.n_streets = 5;
    c.links_min = 14;
    c.links_max = 22;
    c.point_scale = 0.05;
    GroundTruthPL t;
    t.noise_sigma = 2.0;
    return oracle::synthesize(c, t, 44);
  }();
  return s;
}

Dataset links_only(std::size_t n) {
  Dataset d;
  StreetScene s;
  s.meta = {"S", 20, 20, false, {}, {1, 0}};
  d.streets.push_back(s);
  for (std::size_t i = 0; i < n; ++i) d.links.push_back({"L" + std::to_string(i), "S", {}, 0, 10, 10});
  return d;
}

}  // namespace

TEST_CASE("rmse") {
  const std::vector<double> y{0, 0};
  const std::vector<double> h{3, 4};
  CHECK(rmse(y, y) == 0.0);
  CHECK(rmse(y, h) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{6, 7, 8};
  CHECK(rmse(a, b) == 5.0);
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), InvariantError);
  CHECK_THROWS_AS(rmse(a, y), ShapeError);
  CHECK(population_std(a) == doctest::Approx(std::sqrt(2.0 / 3.0)));
}

TEST_CASE("shuffle-split plans") {
  const auto d = links_only(1028);
  const auto p = plan_links_shuffle_split(d, 25, 9);
  REQUIRE(p.folds.size() == 25);
  for (const auto& f : p.folds) {
    CHECK(f.train.size() == 822);
    CHECK(f.test.size() == 206);
    std::set<std::size_t> all(f.train.begin(), f.train.end());
    all.insert(f.test.begin(), f.test.end());
    CHECK(all.size() == 1028);
  }
  CHECK(p.folds[0].test != p.folds[1].test);
  const auto q = plan_links_shuffle_split(d, 25, 9);
  for (std::size_t k = 0; k < 25; ++k) CHECK(q.folds[k].test == p.folds[k].test);
  CHECK_THROWS_AS(plan_links_shuffle_split(links_only(4), 1, 1), InvariantError);
}

TEST_CASE("street-by-street partitions the links") {
  const auto& d = fixture().dataset;
  const auto p = plan_street_by_street(d);
  REQUIRE(p.folds.size() == 5);
  std::vector<int> seen(d.links.size(), 0);
  for (const auto& f : p.folds) {
    for (auto i : f.test) {
      ++seen[i];
      CHECK(d.links[i].street_id == f.label);
    }
    for (auto i : f.train) CHECK(d.links[i].street_id != f.label);
    CHECK(f.train.size() + f.test.size() == d.links.size());
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));

  Dataset one = d;
  one.streets.resize(1);
  CHECK_THROWS_AS(plan_street_by_street(one), InvariantError);
}

TEST_CASE("fold sentinel") {
  const auto d = links_only(10);
  Fold f;
  f.label = "x";
  f.train = {0, 1, 2, 3, 4, 5, 6};
  f.test = {7, 8};
  std::vector<std::string> ids;
  for (const auto& l : d.links) ids.push_back(l.link_id);
  const FoldSentinel s(f, ids);
  CHECK_NOTHROW(s.check(std::vector<std::string>{"L0", "L6"}, "scaler"));
  CHECK_THROWS_WITH_AS(s.check(std::vector<std::string>{"L0", "L8"}, "scaler"), doctest::Contains("'L8'"),
                       LeakageError);
  CHECK_THROWS_AS(s.check(std::vector<std::string>{"L9"}, "scaler"), LeakageError);
}

TEST_CASE("distance bins agree with brute force") {
  std::vector<Prediction> preds;
  SUBCASE("single bin") {
    for (int i = 0; i < 4; ++i) preds.push_back({0, "m", "L", "S", 150, 100, 97});
    const auto bins = distance_binned_rmse(preds, "m");
    REQUIRE(bins.size() == 1);
    CHECK(bins[0].bin_end == 200);
    CHECK(bins[0].rmse == 3.0);
  }
  SUBCASE("mixed") {
    Rng rng(2);
    std::map<int, std::pair<double, int>> ref;
    for (int i = 0; i < 300; ++i) {
      const double d = rng.uniform(1, 400);
      const double e = rng.normal(0, 5);
      preds.push_back({0, "m", "L", "S", d, 100, 100 + e});
      preds.push_back({0, "other", "L", "S", d, 100, 0});
      int b = 100;
      while (d > b) b += 100;
      ref[b].first += e * e;
      ref[b].second += 1;
    }
    preds.push_back({0, "m", "L", "S", 100, 100, 104});
    ref[100].first += 16;
    ref[100].second += 1;
    const auto bins = distance_binned_rmse(preds, "m");
    REQUIRE(bins.size() == ref.size());
    std::size_t k = 0;
    for (const auto& [end, acc] : ref) {
      CHECK(bins[k].bin_end == end);
      CHECK(bins[k].count == static_cast<std::size_t>(acc.second));
      CHECK(bins[k].rmse == doctest::Approx(std::sqrt(acc.first / acc.second)).epsilon(1e-12));
      ++k;
    }
    CHECK(bins.back().bin_end == 400);
  }
  SUBCASE("out of range") {
    preds.push_back({0, "m", "L", "S", 500.5, 1, 1});
    CHECK_THROWS_AS(distance_binned_rmse(preds, "m"), InvariantError);
  }
}

TEST_CASE("protocol report structure") {
  const auto& s = fixture();
  const auto plan = plan_street_by_street(s.dataset);
  ProtocolOptions opt;
  opt.families = {Family::elastic_net, Family::lasso};
  const auto r = run_protocol(plan, s.dataset, s.clutter, {}, opt);

  CHECK(r.fold_labels.size() == 5);
  std::vector<std::string> names;
  for (const auto& m : r.models) names.push_back(m.model);
  CHECK(names == std::vector<std::string>{"elastic-net", "lasso", kSlopeIntercept, kUmaLos, kUmiNlos});
  for (const auto& m : r.models) {
    REQUIRE(m.fold_rmse.size() == 5);
    CHECK(m.mean == doctest::Approx(std::accumulate(m.fold_rmse.begin(), m.fold_rmse.end(), 0.0) / 5).epsilon(1e-12));
    CHECK(m.std == doctest::Approx(population_std(m.fold_rmse)).epsilon(1e-12));
  }

  // Every model predicts exactly the same test links in every fold.
  std::map<std::string, std::multiset<std::pair<std::size_t, std::string>>> rows;
  for (const auto& p : r.predictions) rows[p.model].insert({p.fold, p.link_id});
  for (const auto& [model, set] : rows) CHECK(set == rows.at("elastic-net"));
  CHECK(rows.at("elastic-net").size() == s.dataset.links.size());

  testing::TempDir dir;
  write_report(dir.path(), r);
  for (auto f : {"models.csv", "folds.csv", "predictions.csv", "distance_bins.csv", "summary.json"})
    CHECK(std::filesystem::exists(dir / f));
  CHECK(r.model(kUmaLos).model == kUmaLos);
  CHECK_THROWS_AS(r.model("nothing"), Error);
}

TEST_CASE("clutter4 columns") {
  CHECK(clutter4_columns() ==
        std::vector<std::string>{"log3d", "clutter_per_link", "clutter_per_street", "both_sides"});
  const auto& s = fixture();
  ProtocolOptions opt;
  opt.feature_set = FeatureSet::clutter4;
  opt.baselines = false;
  const auto r = run_protocol(plan_street_by_street(s.dataset), s.dataset, s.clutter, {}, opt);
  CHECK(r.columns == clutter4_columns());
  CHECK(parse_feature_set(to_string(FeatureSet::clutter4_building)) == FeatureSet::clutter4_building);
}

TEST_CASE("workers do not change results") {
  const auto& s = fixture();
  const auto plan = plan_links_shuffle_split(s.dataset, 4, 3);
  ProtocolOptions opt;
  opt.families = {Family::elastic_net, Family::random_forest};
  opt.seed = 12;
  const auto a = run_protocol(plan, s.dataset, s.clutter, {}, opt);
  opt.workers = 3;
  const auto b = run_protocol(plan, s.dataset, s.clutter, {}, opt);
  for (std::size_t m = 0; m < a.models.size(); ++m) CHECK(a.models[m].fold_rmse == b.models[m].fold_rmse);
  REQUIRE(a.predictions.size() == b.predictions.size());
  for (std::size_t i = 0; i < a.predictions.size(); ++i) CHECK(a.predictions[i].predicted == b.predictions[i].predicted);
}

TEST_CASE("memorizer cannot see test links") {
  const auto& s = fixture();
  const auto plan = plan_street_by_street(s.dataset);
  ProtocolOptions opt;
  opt.families = {};
  opt.learners = {oracle::memorizer()};
  opt.baselines = false;
  const auto r = run_protocol(plan, s.dataset, s.clutter, {}, opt);
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto& fold = plan.folds[f];
    double mean = 0;
    for (auto i : fold.train) mean += s.clutter.target[static_cast<Eigen::Index>(i)];
    mean /= static_cast<double>(fold.train.size());
    double sse = 0;
    for (auto i : fold.test) sse += std::pow(s.clutter.target[static_cast<Eigen::Index>(i)] - mean, 2);
    CHECK(r.models[0].fold_rmse[f] == doctest::Approx(std::sqrt(sse / static_cast<double>(fold.test.size()))));
    CHECK(r.models[0].fold_rmse[f] > 1.0);
  }
}

TEST_CASE("lasso importance recovers generator signs") {
  // Street-level columns are only identifiable with many more streets than columns.
  SceneConfig c;
  c.n_streets = 13;
  c.links_min = 10;
  c.links_max = 16;
  c.point_scale = 0.05;
  GroundTruthPL t;
  t.noise_sigma = 0.0;
  t.beta_street = 4.0;
  t.beta_link = 0.05;
  t.gamma_canyon = -6.0;
  const auto s = oracle::synthesize(c, t, 61);
  const auto w = lasso_importance(plan_street_by_street(s.dataset), s.clutter, {});
  REQUIRE(w.size() == 7);
  auto get = [&](const std::string& name) {
    return *std::find_if(w.begin(), w.end(), [&](const FeatureWeight& f) { return f.feature == name; });
  };
  CHECK(get("log3d").min > 0);
  CHECK(get("clutter_per_street").min > 0);
  CHECK(get("clutter_per_link").min > 0);
  CHECK(get("both_sides").max < 0);
  for (const auto& f : w) CHECK(std::abs(f.mean) <= std::abs(get("log3d").mean));
}

TEST_CASE("single autoencoder run: best equals average") {
  const auto& s = fixture();
  Dataset d = s.dataset;
  d.streets.resize(3);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < d.links.size(); ++i)
    for (const auto& st : d.streets)
      if (st.meta.street_id == d.links[i].street_id) keep.push_back(i);
  std::vector<LinkRecord> links;
  for (auto i : keep) links.push_back(d.links[i]);
  d.links = links;
  const auto clutter = s.clutter.select_rows(keep);
  const auto patches = extract_patches(d);

  ProtocolOptions opt;
  opt.ae_train.epochs = 1;
  opt.ae_train.batch_size = 4;
  const auto runs = best_of_n_ae(plan_street_by_street(d), d, clutter, patches, 1, 7, opt);
  REQUIRE(runs.size() == 3);
  for (const auto& r : runs) {
    CHECK(r.run_rmse.size() == 1);
    CHECK(r.best == r.average);
  }
  CHECK_THROWS_AS(best_of_n_ae(plan_street_by_street(d), d, clutter, patches, 0, 7, opt), ConfigError);
}
