// canyonpl: command-line front end for the path-loss pipeline.
//
//   canyonpl synth       --out DIR [--streets N] [--seed S] ...
//   canyonpl featurize   --data DIR --out FILE [--feature-set SET] [--ae-model FILE]
//   canyonpl train-ae    --data DIR --out FILE [--epochs E] [--ae-seed S]
//   canyonpl train       --features FILE --out FILE [--family F]
//   canyonpl evaluate    --data DIR --out DIR [--protocol P] [--families F,...]
//   canyonpl importance  --data DIR --out DIR
//   canyonpl report      --in DIR [--in DIR ...] --out DIR
//
// Every subcommand accepts --config FILE, a JSON object whose keys are the
// long flag names. Flags given on the command line win over the file.
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "canyonpl/autoencoder.hpp"
#include "canyonpl/building.hpp"
#include "canyonpl/clutter.hpp"
#include "canyonpl/error.hpp"
#include "canyonpl/evaluation.hpp"
#include "canyonpl/plots.hpp"
#include "canyonpl/regressors.hpp"
#include "canyonpl/rng.hpp"
#include "canyonpl/synthetic.hpp"
#include "canyonpl/text_io.hpp"

namespace fs = std::filesystem;
using namespace canyonpl;

namespace {

struct DenoiseFlags {
  std::size_t k = 16;
  double alpha = 2.0;
  bool off = false;

  void add(CLI::App* app) {
    app->add_option("--knn-k", k, "Neighbours for outlier removal")->capture_default_str();
    app->add_option("--knn-alpha", alpha, "Outlier threshold in standard deviations")->capture_default_str();
    app->add_flag("--no-denoise", off, "Skip kNN outlier removal");
  }
  DenoiseParams params() const {
    if (k == 0) throw ConfigError("--knn-k must be positive");
    if (!(alpha >= 0.0)) throw ConfigError("--knn-alpha must be non-negative");
    return {k, alpha};
  }
};

struct AeFlags {
  std::size_t epochs = 100;
  std::size_t batch_size = 16;
  double learning_rate = 0.0012;
  std::string variant = "grouped";
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--epochs", epochs, "Autoencoder training epochs")->capture_default_str();
    app->add_option("--batch-size", batch_size, "Autoencoder mini-batch size")->capture_default_str();
    app->add_option("--learning-rate", learning_rate, "Adam learning rate")->capture_default_str();
    app->add_option("--variant", variant, "Encoder variant: grouped, single or serial")->capture_default_str();
    app->add_option("--ae-seed", seed, "Autoencoder initialisation and shuffling seed")->capture_default_str();
  }
  ae::TrainConfig train() const {
    if (epochs == 0) throw ConfigError("--epochs must be positive");
    if (batch_size == 0) throw ConfigError("--batch-size must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("--learning-rate must be positive");
    ae::TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.learning_rate = learning_rate;
    return c;
  }
  ae::Architecture architecture() const {
    ae::Architecture a;
    a.variant = ae::parse_variant(variant);
    return a;
  }
};

struct FitFlags {
  double delta = 0.5;
  double svr_epsilon = 0.5;

  void add(CLI::App* app) {
    app->add_option("--delta", delta, "Elastic-net l1 share")->capture_default_str();
    app->add_option("--svr-epsilon", svr_epsilon, "SVR tube half-width in dB")->capture_default_str();
  }
  FitOptions options() const {
    if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("--delta must lie in [0, 1]");
    if (!(svr_epsilon >= 0.0)) throw ConfigError("--svr-epsilon must be non-negative");
    FitOptions o;
    o.delta = delta;
    o.svr_epsilon = svr_epsilon;
    return o;
  }
};

// Reads --config and fills every option the command line left unset.
void apply_config(CLI::App* app, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "config") throw ConfigError("config files cannot nest --config");
    if (key == "command") {
      if (!value.is_string() || value.get<std::string>() != app->get_name())
        throw ConfigError("config file is for command '" + value.dump() + "', not '" + app->get_name() + "'");
      continue;
    }
    CLI::Option* opt = app->get_option_no_throw("--" + key);
    if (!opt) throw ConfigError("unknown config key '" + key + "' for command " + app->get_name());
    if (opt->count() > 0) continue;
    auto add = [&](const nlohmann::json& v) {
      if (v.is_string()) opt->add_result(v.get<std::string>());
      else if (v.is_boolean()) opt->add_result(v.get<bool>() ? "true" : "false");
      else if (v.is_number()) opt->add_result(v.dump());
      else throw ConfigError("config key '" + key + "' has an unsupported value");
    };
    if (value.is_array()) {
      for (const auto& v : value) add(v);
    } else {
      add(value);
    }
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
}

std::size_t resolve_workers(const std::optional<long long>& flag) {
  long long w = 1;
  if (flag) {
    w = *flag;
  } else if (const char* env = std::getenv("CANYONPL_WORKERS"); env && *env) {
    try {
      w = text::parse_int(env, 0, "CANYONPL_WORKERS");
    } catch (const Error&) {
      throw ConfigError(std::string("CANYONPL_WORKERS must be a positive integer, got '") + env + "'");
    }
  }
  if (w < 1) throw ConfigError("worker count must be at least 1");
  return static_cast<std::size_t>(w);
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string(flag) + " is required");
}

std::vector<FacadePatch> patches_if(bool needed, const Dataset& data) {
  return needed ? extract_patches(data) : std::vector<FacadePatch>{};
}

void print_report(const EvaluationReport& r) {
  std::cout << to_string(r.protocol) << ", " << r.fold_labels.size() << " folds, feature set " << r.feature_set
            << '\n';
  for (const auto& m : r.models) {
    char line[128];
    std::snprintf(line, sizeof line, "  %-18s %7.3f +/- %6.3f dB\n", m.model.c_str(), m.mean, m.std);
    std::cout << line;
  }
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error("missing column '" + name + "'");
  }
};

CsvTable read_csv(const fs::path& path) {
  CsvTable t;
  text::for_each_record(path, [&](std::string_view line, std::size_t number) {
    std::vector<std::string> f;
    for (auto s : text::split(line, ',')) f.emplace_back(s);
    if (t.header.empty()) {
      t.header = std::move(f);
      return;
    }
    if (f.size() != t.header.size()) throw ParseError("expected " + std::to_string(t.header.size()) + " fields", number);
    t.rows.push_back(std::move(f));
  });
  return t;
}

void write_text(const fs::path& path, const std::string& s) {
  auto out = text::open_for_write(path);
  out << s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Street-canyon path-loss toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config;
  std::optional<long long> workers;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON file with flag values");
    sub->add_option("--workers", workers, "Parallel folds/runs (default: $CANYONPL_WORKERS or 1)");
  };

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene dataset");
  SceneConfig scene;
  GroundTruthPL truth;
  DenoiseFlags synth_dn;
  std::string synth_out;
  std::uint64_t synth_seed = 1;
  long long n_streets = 13;
  std::vector<double> intensities;
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--streets", n_streets, "Number of streets")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Scene and noise seed")->capture_default_str();
  synth->add_option("--links-min", scene.links_min, "Fewest links per street")->capture_default_str();
  synth->add_option("--links-max", scene.links_max, "Most links per street")->capture_default_str();
  synth->add_option("--length-min", scene.length_min, "Shortest street layout (m)")->capture_default_str();
  synth->add_option("--length-max", scene.length_max, "Longest street layout (m)")->capture_default_str();
  synth->add_option("--both-sides-probability", scene.both_sides_probability)->capture_default_str();
  synth->add_option("--density-min", scene.density_min, "Lowest target clutter-per-street (points/m^3)")
      ->capture_default_str();
  synth->add_option("--density-max", scene.density_max, "Highest target clutter-per-street (points/m^3)")
      ->capture_default_str();
  synth->add_option("--intensity", intensities, "Explicit clutter multiplier per street");
  synth->add_option("--point-scale", scene.point_scale, "Scales points per clutter object")->capture_default_str();
  synth->add_option("--pl-a", truth.a, "Path-loss intercept A (dB)")->capture_default_str();
  synth->add_option("--pl-n", truth.n, "Path-loss exponent n")->capture_default_str();
  synth->add_option("--beta-street", truth.beta_street, "dB per point/m^3 of street clutter")->capture_default_str();
  synth->add_option("--beta-link", truth.beta_link, "dB per point on the link")->capture_default_str();
  synth->add_option("--gamma-canyon", truth.gamma_canyon, "dB for buildings on both sides")->capture_default_str();
  synth->add_option("--noise-sigma", truth.noise_sigma, "Shadowing std (dB)")->capture_default_str();
  synth->add_option("--saturation", truth.saturation, "Amplitude of the tanh clutter term (dB)")->capture_default_str();
  synth->add_option("--saturation-scale", truth.saturation_scale)->capture_default_str();
  synth_dn.add(synth);
  common(synth);

  // featurize
  auto* featurize = app.add_subcommand("featurize", "Compute a feature table for a dataset");
  std::string feat_data, feat_out, feat_set = "clutter", feat_model, feat_patches;
  DenoiseFlags feat_dn;
  featurize->add_option("--data", feat_data, "Dataset directory");
  featurize->add_option("--out", feat_out, "Output CSV");
  featurize->add_option("--feature-set", feat_set, "clutter, clutter+building, clutter4, clutter4+building")
      ->capture_default_str();
  featurize->add_option("--ae-model", feat_model, "Trained autoencoder (building sets)");
  featurize->add_option("--patches-out", feat_patches, "Also write raw facade patches to this CSV");
  feat_dn.add(featurize);
  common(featurize);

  // train-ae
  auto* train_ae = app.add_subcommand("train-ae", "Train the facade-patch autoencoder");
  std::string ae_data, ae_out;
  AeFlags ae_flags;
  train_ae->add_option("--data", ae_data, "Dataset directory");
  train_ae->add_option("--out", ae_out, "Output model file");
  ae_flags.add(train_ae);
  common(train_ae);

  // train
  auto* train = app.add_subcommand("train", "Fit a path-loss model on a feature table");
  std::string train_features, train_out, train_family = "elastic-net";
  std::uint64_t train_seed = 0;
  FitFlags train_fit;
  train->add_option("--features", train_features, "Feature CSV from featurize");
  train->add_option("--out", train_out, "Output model file");
  train->add_option("--family", train_family, "lasso, elastic-net, random-forest or svr")->capture_default_str();
  train->add_option("--seed", train_seed, "Grid-search and forest seed")->capture_default_str();
  train_fit.add(train);
  common(train);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Run a train/test protocol");
  std::string eval_data, eval_out, eval_protocol = "street-by-street", eval_set = "clutter";
  std::vector<std::string> eval_families{"elastic-net"};
  std::size_t eval_iterations = 25, eval_ae_runs = 1;
  std::uint64_t eval_seed = 0;
  DenoiseFlags eval_dn;
  AeFlags eval_ae;
  FitFlags eval_fit;
  evaluate->add_option("--data", eval_data, "Dataset directory");
  evaluate->add_option("--out", eval_out, "Report directory");
  evaluate->add_option("--protocol", eval_protocol, "street-by-street or shuffle-split")->capture_default_str();
  evaluate->add_option("--iterations", eval_iterations, "Shuffle-split iterations")->capture_default_str();
  evaluate->add_option("--feature-set", eval_set)->capture_default_str();
  evaluate->add_option("--families", eval_families, "Model families")->delimiter(',')->capture_default_str();
  evaluate->add_option("--seed", eval_seed, "Split, grid-search and forest seed")->capture_default_str();
  evaluate->add_option("--ae-runs", eval_ae_runs, "Autoencoder runs for best-of-n (building sets)")
      ->capture_default_str();
  eval_dn.add(evaluate);
  eval_ae.add(evaluate);
  eval_fit.add(evaluate);
  common(evaluate);

  // importance
  auto* importance = app.add_subcommand("importance", "Lasso weights and leave-one-feature-out");
  std::string imp_data, imp_out, imp_protocol = "street-by-street", imp_family = "elastic-net";
  std::size_t imp_iterations = 25;
  std::uint64_t imp_seed = 0;
  DenoiseFlags imp_dn;
  FitFlags imp_fit;
  importance->add_option("--data", imp_data, "Dataset directory");
  importance->add_option("--out", imp_out, "Output directory");
  importance->add_option("--protocol", imp_protocol)->capture_default_str();
  importance->add_option("--iterations", imp_iterations)->capture_default_str();
  importance->add_option("--family", imp_family, "Family for leave-one-feature-out")->capture_default_str();
  importance->add_option("--seed", imp_seed)->capture_default_str();
  imp_dn.add(importance);
  imp_fit.add(importance);
  common(importance);

  // report
  auto* report = app.add_subcommand("report", "Render SVG figures from evaluation output");
  std::vector<std::string> rep_in;
  std::string rep_out, rep_model;
  report->add_option("--in", rep_in, "Evaluation/importance directories");
  report->add_option("--out", rep_out, "Output directory");
  report->add_option("--model", rep_model, "Model shown in the scatter plot (default: lowest mean RMSE)");
  common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    apply_config(sub, config);
    const std::size_t n_workers = resolve_workers(workers);

    if (sub == synth) {
      require(synth_out, "--out");
      if (n_streets < 1) throw ConfigError("--streets must be at least 1");
      scene.n_streets = static_cast<std::size_t>(n_streets);
      scene.intensity = intensities;
      const auto dn = synth_dn.params();
      Dataset data = generate_scene(scene, synth_seed);
      const FeatureTable clutter = extract_clutter_features(data, dn, !synth_dn.off);
      generate_pl(data, clutter, truth, Rng::derive(synth_seed, 1'000'003));
      save_dataset(synth_out, data);
      save_truth(fs::path(synth_out) / "truth.json", scene, truth, synth_seed);
      std::cout << "wrote " << data.streets.size() << " streets, " << data.links.size() << " links to " << synth_out
                << '\n';
    } else if (sub == featurize) {
      require(feat_data, "--data");
      require(feat_out, "--out");
      const FeatureSet set = parse_feature_set(feat_set);
      if (uses_building(set) && feat_model.empty())
        throw ConfigError("--ae-model is required for feature set " + feat_set);
      const auto dn = feat_dn.params();
      const Dataset data = load_dataset(feat_data);
      FeatureTable table = extract_clutter_features(data, dn, !feat_dn.off);
      if (set == FeatureSet::clutter4 || set == FeatureSet::clutter4_building) {
        const auto names = clutter4_columns();
        table = table.select_columns(std::span<const std::string>(names));
      }
      const bool need_patches = uses_building(set) || !feat_patches.empty();
      const auto patches = patches_if(need_patches, data);
      if (uses_building(set)) {
        const auto model = ae::load_autoencoder(feat_model);
        FeatureTable latent;
        latent.link_ids = table.link_ids;
        latent.street_ids = table.street_ids;
        latent.target = table.target;
        latent.values = ae::encode_raw(model, patches);
        for (Eigen::Index c = 0; c < latent.values.cols(); ++c) latent.columns.push_back("ae" + std::to_string(c));
        table = concat_columns(table, latent);
      }
      save_feature_table(feat_out, table);
      if (!feat_patches.empty()) save_patches_csv(feat_patches, table.link_ids, patches);
      std::cout << "wrote " << table.rows() << " rows x " << table.cols() << " features to " << feat_out << '\n';
    } else if (sub == train_ae) {
      require(ae_data, "--data");
      require(ae_out, "--out");
      const auto cfg = ae_flags.train();
      const auto arch = ae_flags.architecture();
      const Dataset data = load_dataset(ae_data);
      const auto patches = extract_patches(data);
      const auto model = ae::fit_autoencoder(patches, arch, cfg, ae_flags.seed);
      ae::save_autoencoder(ae_out, model);
      std::cout << "trained on " << patches.size() << " patches, final loss " << model.curve.train.back();
      if (!model.curve.validation.empty()) std::cout << ", validation " << model.curve.validation.back();
      std::cout << "\nwrote " << ae_out << '\n';
    } else if (sub == train) {
      require(train_features, "--features");
      require(train_out, "--out");
      const Family family = parse_family(train_family);
      const auto opts = train_fit.options();
      const FeatureTable table = load_feature_table(train_features);
      const auto p = train_predictor(family, table, train_seed, opts);
      save_predictor(train_out, p);
      std::cout << to_string(family) << " on " << table.rows() << " rows, training RMSE "
                << rmse(table.target, p.predict(table.values)) << " dB\nwrote " << train_out << '\n';
    } else if (sub == evaluate) {
      require(eval_data, "--data");
      require(eval_out, "--out");
      ProtocolOptions opt;
      opt.feature_set = parse_feature_set(eval_set);
      opt.families.clear();
      for (const auto& f : eval_families) opt.families.push_back(parse_family(f));
      opt.fit = eval_fit.options();
      opt.seed = eval_seed;
      opt.ae_train = eval_ae.train();
      opt.ae_architecture = eval_ae.architecture();
      opt.ae_seed = eval_ae.seed;
      opt.workers = n_workers;
      const Protocol protocol = parse_protocol(eval_protocol);
      if (eval_ae_runs == 0) throw ConfigError("--ae-runs must be at least 1");
      const auto dn = eval_dn.params();
      const Dataset data = load_dataset(eval_data);
      const FeatureTable clutter = extract_clutter_features(data, dn, !eval_dn.off);
      const auto patches = patches_if(uses_building(opt.feature_set), data);
      const SplitPlan plan = protocol == Protocol::street_by_street
                                 ? plan_street_by_street(data)
                                 : plan_links_shuffle_split(data, eval_iterations, eval_seed);
      const auto rep = run_protocol(plan, data, clutter, patches, opt);
      write_report(eval_out, rep);
      print_report(rep);
      if (eval_ae_runs > 1 && uses_building(opt.feature_set)) {
        const auto runs = best_of_n_ae(plan, data, clutter, patches, eval_ae_runs, opt.ae_seed, opt);
        write_ae_runs(eval_out, runs);
        std::cout << "best-of-" << eval_ae_runs << " autoencoder runs written to ae_best_of_n.csv\n";
      }
      std::cout << "wrote report to " << eval_out << '\n';
    } else if (sub == importance) {
      require(imp_data, "--data");
      require(imp_out, "--out");
      ProtocolOptions opt;
      opt.fit = imp_fit.options();
      opt.seed = imp_seed;
      opt.workers = n_workers;
      const Family family = parse_family(imp_family);
      const Protocol protocol = parse_protocol(imp_protocol);
      const auto dn = imp_dn.params();
      const Dataset data = load_dataset(imp_data);
      const FeatureTable clutter = extract_clutter_features(data, dn, !imp_dn.off);
      const SplitPlan plan = protocol == Protocol::street_by_street
                                 ? plan_street_by_street(data)
                                 : plan_links_shuffle_split(data, imp_iterations, imp_seed);
      const auto weights = lasso_importance(plan, clutter, opt);
      const auto lofo = leave_one_feature_out(plan, data, clutter, family, opt);
      write_importance(imp_out, weights, &lofo);
      for (std::size_t i = 0; i < weights.size(); ++i) {
        char line[160];
        std::snprintf(line, sizeof line, "  %-20s weight %8.3f [%8.3f, %8.3f]  drop %+7.3f dB\n",
                      weights[i].feature.c_str(), weights[i].mean, weights[i].min, weights[i].max,
                      lofo.drops[i].delta);
        std::cout << line;
      }
      std::cout << "wrote importance tables to " << imp_out << '\n';
    } else if (sub == report) {
      if (rep_in.empty()) throw ConfigError("--in is required");
      require(rep_out, "--out");
      std::vector<BoxSeries> boxes;
      std::vector<FeatureWeight> weights;
      nlohmann::ordered_json combined = nlohmann::ordered_json::array();
      fs::path scatter_dir;
      std::string scatter_model = rep_model;
      double best_mean = INFINITY;
      for (const auto& dir : rep_in) {
        const fs::path summary = fs::path(dir) / "summary.json";
        if (fs::exists(summary)) {
          std::ifstream in(summary);
          const auto j = nlohmann::json::parse(in);
          const std::string set = j.at("feature_set");
          for (const auto& m : j.at("models")) {
            const std::string name = m.at("model");
            boxes.push_back({name + " [" + set + "]", m.at("fold_rmse").get<std::vector<double>>()});
            combined.push_back({{"source", dir},
                                {"model", name},
                                {"feature_set", set},
                                {"protocol", j.at("protocol")},
                                {"mean_rmse", m.at("mean_rmse")},
                                {"std_rmse", m.at("std_rmse")}});
            const bool baseline = name == kSlopeIntercept || name == kUmaLos || name == kUmiNlos;
            if (rep_model.empty() && !baseline && m.at("mean_rmse").get<double>() < best_mean && scatter_dir.empty()) {
              best_mean = m.at("mean_rmse").get<double>();
              scatter_model = name;
            }
          }
          if (scatter_dir.empty()) scatter_dir = dir;
        }
        const fs::path imp = fs::path(dir) / "importance.csv";
        if (fs::exists(imp) && weights.empty()) {
          const auto t = read_csv(imp);
          for (const auto& r : t.rows) {
            FeatureWeight w;
            w.feature = r[t.col("feature")];
            w.mean = text::parse_double(r[t.col("mean_weight")], 0);
            w.min = text::parse_double(r[t.col("min_weight")], 0);
            w.max = text::parse_double(r[t.col("max_weight")], 0);
            weights.push_back(w);
          }
        }
      }
      if (boxes.empty() && weights.empty())
        throw ConfigError("no summary.json or importance.csv found in the --in directories");
      std::vector<std::string> written;
      if (!boxes.empty()) {
        write_text(fs::path(rep_out) / "rmse_boxplot.svg",
                   render_box_plot(boxes, "Per-fold RMSE", "RMSE (dB)"));
        written.push_back("rmse_boxplot.svg");
        if (scatter_model.empty()) scatter_model = kSlopeIntercept;
        const auto t = read_csv(scatter_dir / "predictions.csv");
        std::vector<ScatterPoint> pts;
        for (const auto& r : t.rows)
          if (r[t.col("model")] == scatter_model)
            pts.push_back({text::parse_double(r[t.col("measured_pl")], 0),
                           text::parse_double(r[t.col("predicted_pl")], 0)});
        if (pts.empty()) throw ConfigError("no predictions for model '" + scatter_model + "'");
        write_text(fs::path(rep_out) / "scatter.svg",
                   render_scatter(pts, "Measured vs predicted path loss (" + scatter_model + ")"));
        written.push_back("scatter.svg");
      }
      if (!weights.empty()) {
        write_text(fs::path(rep_out) / "weights.svg", render_weight_bars(weights, "Lasso feature weights"));
        written.push_back("weights.svg");
      }
      nlohmann::ordered_json out;
      out["rows"] = combined;
      out["scatter_model"] = scatter_model;
      out["figures"] = written;
      write_text(fs::path(rep_out) / "report.json", out.dump(2) + "\n");
      for (const auto& w : written) std::cout << "wrote " << (fs::path(rep_out) / w).string() << '\n';
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "canyonpl: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "canyonpl: error: " << e.what() << '\n';
    return 1;
  }
}
