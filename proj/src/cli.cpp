#include "cfs/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "cfs/classify.hpp"
#include "cfs/eval.hpp"
#include "cfs/random.hpp"
#include "cfs/select.hpp"

namespace cfs {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo: return 3;
    case ErrorKind::kConfig: return 4;
    case ErrorKind::kInput:
    case ErrorKind::kDimension:
    case ErrorKind::kDegenerate:
    case ErrorKind::kDomain: return 5;
  }
  return 1;
}

json to_json(const SynthConfig& c) {
  return {{"n_base", c.n_base},
          {"latent_dim", c.latent_dim},
          {"latent_irrelevant", c.latent_irrelevant},
          {"surface_observed", c.surface_observed},
          {"surface_irrelevant", c.surface_irrelevant},
          {"twin_noise", c.twin_noise},
          {"outcome_weight_scale", c.outcome_weight_scale},
          {"treatment_weight", c.treatment_weight},
          {"bias", c.bias},
          {"map_scale", c.map_scale},
          {"observation_noise", c.observation_noise}};
}

SynthConfig synth_config_from_json(const json& j) {
  SynthConfig c;
  if (!j.is_object()) throw Error(ErrorKind::kConfig, "synth config must be a JSON object");
  const json defaults = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw Error(ErrorKind::kConfig, "synth config: unknown key '" + key + "'");
  }
  try {
    c.n_base = j.value("n_base", c.n_base);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.latent_irrelevant = j.value("latent_irrelevant", c.latent_irrelevant);
    c.surface_observed = j.value("surface_observed", c.surface_observed);
    c.surface_irrelevant = j.value("surface_irrelevant", c.surface_irrelevant);
    c.twin_noise = j.value("twin_noise", c.twin_noise);
    c.outcome_weight_scale = j.value("outcome_weight_scale", c.outcome_weight_scale);
    c.treatment_weight = j.value("treatment_weight", c.treatment_weight);
    c.bias = j.value("bias", c.bias);
    c.map_scale = j.value("map_scale", c.map_scale);
    c.observation_noise = j.value("observation_noise", c.observation_noise);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("synth config: ") + e.what());
  }
  return c;
}

json synth_metadata(const SyntheticDataset& ds, const SynthConfig& config) {
  const GroundTruth& t = ds.truth();
  json twins = json::array();
  for (const auto& [a, b] : t.twin_pairs) twins.push_back({a, b});
  json latent = json::array();
  for (Eigen::Index i = 0; i < t.latent.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(t.latent.cols()));
    for (Eigen::Index j = 0; j < t.latent.cols(); ++j) row[static_cast<std::size_t>(j)] = t.latent(i, j);
    latent.push_back(row);
  }
  return {{"schema_version", 1},
          {"kind", to_string(ds.kind)},
          {"seed", ds.seed},
          {"synth_config", to_json(config)},
          {"treatment_index", t.treatment_index},
          {"causal_indices", t.causal_indices},
          {"irrelevant_indices", t.irrelevant_indices},
          {"twin_pairs", twins},
          {"latent", latent}};
}

GroundTruth ground_truth_from_json(const json& meta) {
  try {
    GroundTruth t;
    t.treatment_index = meta.at("treatment_index").get<std::size_t>();
    t.causal_indices = meta.at("causal_indices").get<std::vector<std::size_t>>();
    t.irrelevant_indices = meta.at("irrelevant_indices").get<std::vector<std::size_t>>();
    for (const auto& p : meta.at("twin_pairs")) t.twin_pairs.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
    if (meta.contains("latent")) {
      const auto& rows = meta.at("latent");
      const auto n = static_cast<Eigen::Index>(rows.size());
      const auto k = n ? static_cast<Eigen::Index>(rows[0].size()) : Eigen::Index{0};
      t.latent.resize(n, k);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != k) throw Error(ErrorKind::kInput, "metadata: ragged latent matrix");
        for (Eigen::Index j = 0; j < k; ++j) t.latent(i, j) = row[static_cast<std::size_t>(j)].get<double>();
      }
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInput, std::string("metadata: ") + e.what());
  }
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::string& path, ErrorKind parse_kind) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(parse_kind, path + ": " + e.what());
  }
}

void write_file(const std::string& path, const std::string& content) {
  const fs::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv)
      : start_(std::chrono::steady_clock::now()) {
    j_ = {{"schema_version", 1},
          {"command", std::move(command)},
          {"argv", std::move(argv)},
          {"version", kVersion},
          {"config", json::object()},
          {"seeds", json::object()},
          {"inputs", json::object()},
          {"outputs", json::array()}};
  }

  void input(const std::string& path) { j_["inputs"][path] = "fnv1a64:" + hex64(fnv1a64(read_file(path))); }
  void output(const std::string& path) { j_["outputs"].push_back(path); }
  void config(json c) { j_["config"] = std::move(c); }
  void seed(const std::string& name, std::uint64_t value) { j_["seeds"][name] = value; }

  void write(const std::string& path) {
    j_["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_file(path, j_.dump(2) + "\n");
  }

 private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool is_jsonl(const std::string& path) { return fs::path(path).extension() == ".jsonl"; }

// Features named by a report (with alpha), "all", or a comma list.
std::vector<std::string> resolve_features(const std::string& selector, double alpha,
                                          const std::vector<std::string>& available) {
  std::vector<std::string> names;
  if (selector.empty() || selector == "all") {
    names = available;
  } else if (fs::path(selector).extension() == ".json") {
    names = select_by_alpha(read_feature_report(selector), alpha);
  } else {
    names = split_list(selector);
  }
  if (names.empty()) throw Error(ErrorKind::kDegenerate, "no features selected");
  return names;
}

Eigen::MatrixXd columns_by_name(const FeatureMatrix& m, const std::vector<std::string>& names) {
  Eigen::MatrixXd out(m.values.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto idx = m.index_of(names[j]);
    if (!idx) throw Error(ErrorKind::kInput, "feature not present in data: " + names[j]);
    out.col(static_cast<Eigen::Index>(j)) = m.values.col(static_cast<Eigen::Index>(*idx));
  }
  return out;
}

struct TrainTest {
  FeatureMatrix train;
  std::vector<int> train_labels;
  FeatureMatrix test;
  std::vector<int> test_labels;
};

// Corpora share the training vocabulary and IDF weights.
TrainTest load_train_test(const std::string& train_path, const std::string& test_path, std::size_t min_df) {
  TrainTest tt;
  if (is_jsonl(train_path) != is_jsonl(test_path)) {
    throw Error(ErrorKind::kInput, "train and test must both be corpora or both be CSV datasets");
  }
  if (is_jsonl(train_path)) {
    const auto train = read_jsonl_corpus(train_path);
    const auto test = read_jsonl_corpus(test_path);
    TokenizedCorpus train_docs, test_docs;
    for (const auto& r : train) {
      train_docs.push_back(tokenize(r.text));
      tt.train_labels.push_back(r.label);
    }
    for (const auto& r : test) {
      test_docs.push_back(tokenize(r.text));
      tt.test_labels.push_back(r.label);
    }
    const Vocabulary vocab = build_vocabulary(train_docs, min_df);
    tt.train = tfidf_matrix(train_docs, vocab);
    tt.test = tfidf_matrix(test_docs, vocab);
  } else {
    LabeledDataset a = read_dataset_csv(train_path);
    LabeledDataset b = read_dataset_csv(test_path);
    tt.train = std::move(a.features);
    tt.train_labels = std::move(a.labels);
    tt.test = std::move(b.features);
    tt.test_labels = std::move(b.labels);
  }
  return tt;
}

void print_error(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  err << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
}

}  // namespace

LabeledDataset load_dataset(const std::string& path, const std::string& meta_path, std::size_t min_doc_freq) {
  LabeledDataset data;
  if (is_jsonl(path)) {
    CorpusOptions opts;
    opts.min_doc_freq = min_doc_freq;
    data = corpus_dataset(read_jsonl_corpus(path), opts);
  } else {
    data = read_dataset_csv(path);
  }
  if (!meta_path.empty()) data.truth = ground_truth_from_json(read_json_file(meta_path, ErrorKind::kInput));
  return data;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Causal feature selection by matching on learned representations", "cfs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::size_t threads = 0;
  auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", threads, "Worker threads (default: CFS_THREADS or all cores)");
  };

  // synth-gen
  std::string kind_name, out_path, synth_config_path;
  std::uint64_t seed = 0;
  auto* synth = app.add_subcommand("synth-gen", "Generate a synthetic dataset with ground truth");
  synth->add_option("--kind", kind_name, "latent or surface")->required();
  synth->add_option("--seed", seed, "Root seed");
  synth->add_option("--out", out_path, "Output directory")->required();
  synth->add_option("--synth-config", synth_config_path, "JSON with generator constants");

  // select
  std::string data_path, meta_path, config_path, csv_path;
  std::size_t min_df = 1;
  auto* sel = app.add_subcommand("select", "Run causal feature selection");
  sel->add_option("--data", data_path, "Corpus (.jsonl) or dataset CSV")->required();
  sel->add_option("--meta", meta_path, "Ground-truth metadata JSON");
  sel->add_option("--config", config_path, "Selection config JSON")->required();
  sel->add_option("--out", out_path, "Report JSON")->required();
  sel->add_option("--csv", csv_path, "Also write the report as CSV");
  sel->add_option("--min-df", min_df, "Minimum document frequency for corpus terms");
  add_threads(sel);

  // classify
  std::string train_path, test_path, features_arg, model_name = "rf";
  double alpha = 0.05;
  std::size_t n_trees = 100;
  auto* cls = app.add_subcommand("classify", "Train and evaluate a classifier on selected features");
  cls->add_option("--train", train_path, "Training corpus or CSV")->required();
  cls->add_option("--test", test_path, "Test corpus or CSV")->required();
  cls->add_option("--features", features_arg, "report.json, comma-separated names, or 'all'");
  cls->add_option("--alpha", alpha, "Significance level applied to a report");
  cls->add_option("--model", model_name, "logreg, logreg_l1 or rf");
  cls->add_option("--n-trees", n_trees, "Random forest size");
  cls->add_option("--seed", seed, "Training seed");
  cls->add_option("--out", out_path, "Metrics JSON")->required();
  cls->add_option("--min-df", min_df, "Minimum document frequency for corpus terms");
  add_threads(cls);

  // eval
  auto* ev = app.add_subcommand("eval", "Experiment harness");
  ev->require_subcommand(1);
  std::size_t replicas = 50;
  std::string methods, refit_name = "exact", binarize_name = "above_mean";
  auto* rc = ev->add_subcommand("rc", "Rank correctness over synthetic replicas");
  rc->add_option("--replicas", replicas, "Number of replicas");
  rc->add_option("--methods", methods, "Comma-separated method names")->required();
  rc->add_option("--kind", kind_name, "latent or surface")->required();
  rc->add_option("--seed", seed, "Root seed");
  rc->add_option("--refit", refit_name, "exact or shared_model");
  rc->add_option("--binarize", binarize_name, "nonzero or above_mean");
  rc->add_option("--synth-config", synth_config_path, "JSON with generator constants");
  rc->add_option("--out", out_path, "Output JSON")->required();
  add_threads(rc);

  std::string grid_path;
  std::size_t folds = 5;
  auto* ncv = ev->add_subcommand("nested-cv", "Leave-one-out outer loop, k-fold inner grid search");
  ncv->add_option("--data", data_path, "Corpus (.jsonl) or dataset CSV")->required();
  ncv->add_option("--grid", grid_path, "Grid JSON")->required();
  ncv->add_option("--features", features_arg, "report.json, comma-separated names, or 'all'");
  ncv->add_option("--alpha", alpha, "Significance level applied to a report");
  ncv->add_option("--folds", folds, "Inner folds");
  ncv->add_option("--seed", seed, "Root seed");
  ncv->add_option("--min-df", min_df, "Minimum document frequency for corpus terms");
  ncv->add_option("--out", out_path, "Output JSON")->required();
  add_threads(ncv);

  std::vector<std::string> report_paths, dataset_tags;
  std::string lexicon_path;
  std::size_t top = 100;
  auto* prof = ev->add_subcommand("profile", "Lexicon-category profiles and stability");
  prof->add_option("--report", report_paths, "Feature report JSON (repeatable)")->required();
  prof->add_option("--dataset", dataset_tags, "Dataset tag per report (repeatable)");
  prof->add_option("--lexicon", lexicon_path, "Lexicon JSON")->required();
  prof->add_option("--top", top, "Number of top-ranked words");
  prof->add_option("--out", out_path, "Output JSON")->required();

  // replay
  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("--manifest", manifest_path, "Manifest JSON")->required();

  std::vector<std::string> argv_copy = args;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    print_error(err, "usage_error", e.what(), 2);
    return 2;
  }

  try {
    if (*synth) {
      Manifest m("synth-gen", argv_copy);
      const SynthKind kind = parse_synth_kind(kind_name);
      SynthConfig sc;
      if (!synth_config_path.empty()) {
        m.input(synth_config_path);
        sc = synth_config_from_json(read_json_file(synth_config_path, ErrorKind::kConfig));
      }
      const SyntheticDataset ds = generate(kind, seed, sc);
      const fs::path dir(out_path);
      std::ostringstream csv;
      write_dense_csv(ds.data.features, csv, &ds.data.labels);
      write_file((dir / "dataset.csv").string(), csv.str());
      write_file((dir / "meta.json").string(), synth_metadata(ds, sc).dump() + "\n");
      m.config({{"kind", kind_name}, {"synth_config", to_json(sc)}});
      m.seed("root", seed);
      m.output((dir / "dataset.csv").string());
      m.output((dir / "meta.json").string());
      m.write((dir / "manifest.json").string());
      return 0;
    }
    if (*sel) {
      Manifest m("select", argv_copy);
      m.input(data_path);
      if (!meta_path.empty()) m.input(meta_path);
      m.input(config_path);
      SelectionConfig config = read_selection_config(config_path);
      if (threads > 0) config.threads = threads;
      const LabeledDataset data = load_dataset(data_path, meta_path, min_df);
      const FeatureReport report = run_selection(data, config);
      write_file(out_path, to_json(report).dump(2) + "\n");
      m.output(out_path);
      if (!csv_path.empty()) {
        std::ostringstream csv;
        write_report_csv(report, csv);
        write_file(csv_path, csv.str());
        m.output(csv_path);
      }
      m.config(to_json(config));
      m.seed("root", config.seed);
      m.write(out_path + ".manifest.json");
      out << "tested " << report.n_tested() << ", skipped " << report.n_skipped() << ", selected "
          << select_by_alpha(report, config.alpha).size() << " at alpha " << config.alpha << "\n";
      return 0;
    }
    if (*cls) {
      Manifest m("classify", argv_copy);
      m.input(train_path);
      m.input(test_path);
      if (fs::path(features_arg).extension() == ".json") m.input(features_arg);
      const ClassifierKind kind = parse_classifier_kind(model_name);
      const TrainTest tt = load_train_test(train_path, test_path, min_df);
      const auto names = resolve_features(features_arg, alpha, tt.train.feature_names);
      ClassifierParams params;
      params.n_trees = n_trees;
      params.threads = threads;
      const ClassifierModel model =
          train(kind, columns_by_name(tt.train, names), tt.train_labels, params, seed);
      const Metrics metrics = evaluate(tt.test_labels, predict(model, columns_by_name(tt.test, names)));
      json result = {{"model", to_string(kind)}, {"n_features", names.size()}, {"features", names},
                     {"metrics", to_json(metrics)}};
      if (kind == ClassifierKind::kRandomForest) {
        result["oob_accuracy"] = std::isnan(model.oob_accuracy) ? json(nullptr) : json(model.oob_accuracy);
      }
      write_file(out_path, result.dump(2) + "\n");
      m.output(out_path);
      m.config({{"model", model_name}, {"alpha", alpha}, {"features", features_arg}, {"n_trees", n_trees}});
      m.seed("root", seed);
      m.write(out_path + ".manifest.json");
      out << "f1 " << metrics.f1 << " precision " << metrics.precision << " recall " << metrics.recall << "\n";
      return 0;
    }
    if (*rc) {
      Manifest m("eval rc", argv_copy);
      RcExperimentConfig c;
      c.kind = parse_synth_kind(kind_name);
      c.replicas = replicas;
      c.seed = seed;
      c.methods = split_list(methods);
      if (refit_name == "exact") c.refit = RefitMode::kExact;
      else if (refit_name == "shared_model") c.refit = RefitMode::kSharedModel;
      else throw Error(ErrorKind::kConfig, "unknown refit mode: " + refit_name);
      c.binarize = parse_binarize_rule(binarize_name);
      c.threads = threads;
      if (!synth_config_path.empty()) {
        m.input(synth_config_path);
        c.synth = synth_config_from_json(read_json_file(synth_config_path, ErrorKind::kConfig));
      }
      const RcExperimentResult r = run_rc_experiment(c);
      json results = json::array();
      for (const auto& x : r.results) results.push_back(to_json(x));
      json comparisons = json::array();
      for (std::size_t a = 0; a < r.results.size(); ++a) {
        for (std::size_t b = a + 1; b < r.results.size(); ++b) {
          if (r.results[a].n_replicas() < 2) continue;
          const TestResult t = compare_methods(r.results[a], r.results[b]);
          comparisons.push_back({{"a", r.results[a].method}, {"b", r.results[b].method}, {"statistic", t.statistic},
                                 {"p_value", t.p_value}, {"degenerate", t.degenerate}});
        }
      }
      const json doc = {{"kind", kind_name}, {"replicas", replicas}, {"seed", seed}, {"refit", refit_name},
                        {"results", results}, {"irrelevant_index", r.irrelevant_index},
                        {"comparisons", comparisons}};
      write_file(out_path, doc.dump(2) + "\n");
      m.output(out_path);
      m.config({{"kind", kind_name}, {"methods", c.methods}, {"replicas", replicas}, {"refit", refit_name},
                {"binarize", binarize_name}, {"synth_config", to_json(c.synth)}});
      m.seed("root", seed);
      m.write(out_path + ".manifest.json");
      for (const auto& x : r.results) out << x.method << " rc " << x.rc << "\n";
      return 0;
    }
    if (*ncv) {
      Manifest m("eval nested-cv", argv_copy);
      m.input(data_path);
      m.input(grid_path);
      if (fs::path(features_arg).extension() == ".json") m.input(features_arg);
      const auto grid = parse_grid(read_json_file(grid_path, ErrorKind::kConfig));
      const LabeledDataset data = load_dataset(data_path, "", min_df);
      const auto names = resolve_features(features_arg, alpha, data.features.feature_names);
      const NestedCvResult r =
          nested_cv(columns_by_name(data.features, names), data.labels, grid, folds, seed, threads);
      json doc = to_json(r);
      doc["features"] = names;
      write_file(out_path, doc.dump(2) + "\n");
      m.output(out_path);
      m.config({{"grid", read_json_file(grid_path, ErrorKind::kConfig)}, {"folds", folds}, {"alpha", alpha},
                {"features", features_arg}});
      m.seed("root", seed);
      m.write(out_path + ".manifest.json");
      out << "f1 " << r.metrics.f1 << " over " << r.outer_fits << " outer fits\n";
      return 0;
    }
    if (*prof) {
      Manifest m("eval profile", argv_copy);
      m.input(lexicon_path);
      const Lexicon lexicon = read_lexicon(lexicon_path);
      if (!dataset_tags.empty() && dataset_tags.size() != 1 && dataset_tags.size() != report_paths.size()) {
        throw Error(ErrorKind::kConfig, "give one --dataset tag, or one per --report");
      }
      std::vector<CategoryProfile> profiles;
      for (std::size_t i = 0; i < report_paths.size(); ++i) {
        m.input(report_paths[i]);
        const FeatureReport report = read_feature_report(report_paths[i]);
        std::vector<std::string> words;
        for (const auto& f : report.features) {
          if (words.size() == top) break;
          if (f.tested()) words.push_back(f.name);
        }
        const std::string tag = dataset_tags.empty() ? "data" : dataset_tags[dataset_tags.size() == 1 ? 0 : i];
        profiles.push_back(category_profile(report.method, tag, words, lexicon));
      }
      json doc = {{"profiles", json::array()}, {"stability", stability(profiles)}};
      for (const auto& p : profiles) doc["profiles"].push_back(to_json(p));
      write_file(out_path, doc.dump(2) + "\n");
      m.output(out_path);
      m.config({{"top", top}, {"datasets", dataset_tags}});
      m.write(out_path + ".manifest.json");
      return 0;
    }
    if (*replay) {
      const json manifest = read_json_file(manifest_path, ErrorKind::kInput);
      std::vector<std::string> recorded;
      try {
        recorded = manifest.at("argv").get<std::vector<std::string>>();
      } catch (const json::exception& e) {
        throw Error(ErrorKind::kInput, std::string("manifest: ") + e.what());
      }
      if (!recorded.empty() && recorded.front() == "replay") {
        throw Error(ErrorKind::kInput, "manifest records a replay");
      }
      return run_cli(recorded, out, err);
    }
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    print_error(err, to_string(e.kind()), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    print_error(err, "internal_error", e.what(), 1);
    return 1;
  }
  return 0;
}

}  // namespace cfs
