#include "cfs/eval.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <regex>
#include <set>

#include "cfs/error.hpp"
#include "cfs/parallel.hpp"
#include "cfs/random.hpp"

namespace cfs {

using Eigen::Index;
using Eigen::MatrixXd;
using nlohmann::json;

json to_json(const RCResult& r) {
  return {{"method", r.method}, {"rc", r.rc}, {"n_replicas", r.n_replicas()}, {"outcomes", r.outcomes}};
}

namespace {

double p_or_inf(const FeatureReport& report, std::size_t index) {
  for (const auto& f : report.features) {
    if (f.index == index) return f.p_value.value_or(INFINITY);
  }
  throw Error(ErrorKind::kInput, "report has no feature with index " + std::to_string(index));
}

}  // namespace

double rank_outcome(const FeatureReport& report, std::size_t treatment_index, std::size_t irrelevant_index) {
  const double pt = p_or_inf(report, treatment_index);
  const double po = p_or_inf(report, irrelevant_index);
  if (pt < po) return 1.0;
  if (pt == po) return 0.5;
  return 0.0;
}

std::size_t sample_irrelevant(const GroundTruth& truth, std::uint64_t seed, std::size_t replica) {
  if (truth.irrelevant_indices.empty()) throw Error(ErrorKind::kInput, "ground truth has no irrelevant features");
  Rng rng = make_rng(seed, "rc-replica", replica);
  std::uniform_int_distribution<std::size_t> pick(0, truth.irrelevant_indices.size() - 1);
  return truth.irrelevant_indices[pick(rng)];
}

RCResult rank_correctness(const std::string& method, const std::vector<FeatureReport>& reports,
                          const std::vector<GroundTruth>& truths, std::uint64_t seed) {
  if (reports.size() != truths.size()) throw Error(ErrorKind::kInput, "rank_correctness: reports and truths differ in count");
  if (reports.empty()) throw Error(ErrorKind::kInput, "rank_correctness: no replicas");
  RCResult r;
  r.method = method;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    r.outcomes.push_back(rank_outcome(reports[i], truths[i].treatment_index, sample_irrelevant(truths[i], seed, i)));
  }
  r.rc = std::accumulate(r.outcomes.begin(), r.outcomes.end(), 0.0) / static_cast<double>(r.outcomes.size());
  return r;
}

SelectionConfig method_selection_config(const std::string& method, const RcExperimentConfig& config) {
  SelectionConfig c;
  c.binarize = config.binarize;
  c.beta = config.beta;
  c.refit = config.refit;
  c.reducer_options = config.reducer_options;
  c.threads = 1;
  c.reducer = "none";
  if (method == "cfs-pm") {
    c.strategy = MatchStrategy::kGroundTruth;
  } else if (method == "cfs-lm") {
    c.strategy = MatchStrategy::kLatentNnm;
    c.reducer = "provided";
  } else if (method == "cfs-rm") {
    c.strategy = MatchStrategy::kRandom;
  } else if (method == "cfs-nm") {
    c.strategy = MatchStrategy::kSurfaceNnm;
  } else if (method == "psm") {
    c.strategy = MatchStrategy::kPsm;
  } else if (method == "mdm") {
    c.strategy = MatchStrategy::kMdm;
  } else {
    static const std::regex pattern("cfs-(npca|spca|grp|mbdl|lda)([0-9]+)");
    std::smatch m;
    if (!std::regex_match(method, m, pattern)) throw Error(ErrorKind::kConfig, "unknown method: " + method);
    c.strategy = MatchStrategy::kLatentNnm;
    c.reducer = m[1].str();
    c.k = std::stoul(m[2].str());
  }
  c.validate();
  return c;
}

RcExperimentResult run_rc_experiment(const RcExperimentConfig& config) {
  if (config.replicas == 0) throw Error(ErrorKind::kConfig, "rc: replicas must be >= 1");
  if (config.methods.empty()) throw Error(ErrorKind::kConfig, "rc: no methods");
  std::vector<std::optional<SelectionConfig>> selection(config.methods.size());
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    if (config.methods[m] != "l1") selection[m] = method_selection_config(config.methods[m], config);
  }

  const std::size_t n_methods = config.methods.size();
  std::vector<std::vector<double>> outcomes(n_methods, std::vector<double>(config.replicas));
  RcExperimentResult result;
  result.irrelevant_index.resize(config.replicas);

  parallel_for(config.replicas, config.threads, [&](std::size_t r) {
    const SyntheticDataset ds = generate(config.kind, derive_seed(config.seed, "replica", r), config.synth);
    const GroundTruth& truth = ds.truth();
    const std::size_t xo = sample_irrelevant(truth, config.seed, r);
    result.irrelevant_index[r] = xo;
    const auto& names = ds.data.features.feature_names;
    for (std::size_t m = 0; m < n_methods; ++m) {
      FeatureReport report;
      if (!selection[m]) {
        report = l1_feature_rank(ds.data.features, ds.data.labels, config.l1_penalty);
      } else {
        SelectionConfig c = *selection[m];
        c.seed = derive_seed(config.seed, "selection", r);
        c.candidates = std::vector<std::string>{names[truth.treatment_index], names[xo]};
        report = run_selection(ds.data, c);
      }
      outcomes[m][r] = rank_outcome(report, truth.treatment_index, xo);
    }
  });

  for (std::size_t m = 0; m < n_methods; ++m) {
    RCResult rc;
    rc.method = config.methods[m];
    rc.outcomes = std::move(outcomes[m]);
    rc.rc = std::accumulate(rc.outcomes.begin(), rc.outcomes.end(), 0.0) / static_cast<double>(config.replicas);
    result.results.push_back(std::move(rc));
  }
  return result;
}

TestResult compare_methods(const RCResult& a, const RCResult& b) {
  if (a.n_replicas() != b.n_replicas()) throw Error(ErrorKind::kInput, "compare_methods: replica counts differ");
  return paired_t_test({a.outcomes, b.outcomes});
}

// --- nested cross-validation ---------------------------------------------------

std::vector<GridPoint> parse_grid(const json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorKind::kConfig, "grid must be a nonempty array");
  std::vector<GridPoint> grid;
  static const std::set<std::string> allowed = {"model", "l2", "l1", "n_trees", "max_features", "max_depth",
                                                "min_samples_split"};
  try {
    for (const auto& e : j) {
      if (!e.is_object()) throw Error(ErrorKind::kConfig, "grid entries must be objects");
      for (const auto& [key, value] : e.items()) {
        if (!allowed.count(key)) throw Error(ErrorKind::kConfig, "grid: unknown key '" + key + "'");
      }
      GridPoint g;
      g.kind = parse_classifier_kind(e.at("model").get<std::string>());
      g.params.l2 = e.value("l2", g.params.l2);
      g.params.l1 = e.value("l1", g.params.l1);
      g.params.n_trees = e.value("n_trees", g.params.n_trees);
      g.params.max_features = e.value("max_features", g.params.max_features);
      g.params.max_depth = e.value("max_depth", g.params.max_depth);
      g.params.min_samples_split = e.value("min_samples_split", g.params.min_samples_split);
      grid.push_back(g);
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::kConfig, std::string("grid: ") + ex.what());
  }
  return grid;
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<std::size_t>& samples,
                                                       const std::vector<int>& y, std::size_t k,
                                                       std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::kConfig, "folds: k must be >= 2");
  std::vector<std::size_t> by_class[2];
  for (auto s : samples) by_class[y[s] == 1].push_back(s);
  if (by_class[0].size() < 2 || by_class[1].size() < 2) {
    throw Error(ErrorKind::kDegenerate, "cannot build stratified folds: a class has fewer than two samples");
  }
  if (samples.size() < k) throw Error(ErrorKind::kDegenerate, "cannot build stratified folds: fewer samples than folds");
  Rng rng = make_rng(seed, "folds");
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t slot = 0;
  for (auto& cls : by_class) {
    std::shuffle(cls.begin(), cls.end(), rng);
    for (auto s : cls) folds[slot++ % k].push_back(s);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

namespace {

MatrixXd take_rows(const MatrixXd& x, const std::vector<std::size_t>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(static_cast<Index>(rows[i]));
  return out;
}

std::vector<int> take(const std::vector<int>& y, const std::vector<std::size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

void assert_disjoint(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b, const char* what) {
  std::vector<std::size_t> sa = a, sb = b, common;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  if (!common.empty()) throw Error(ErrorKind::kDomain, std::string("nested_cv leakage: ") + what);
}

}  // namespace

NestedCvResult nested_cv(const MatrixXd& x, const std::vector<int>& y, const std::vector<GridPoint>& grid,
                         std::size_t inner_folds, std::uint64_t seed, std::size_t threads) {
  const std::size_t n = y.size();
  if (static_cast<std::size_t>(x.rows()) != n) throw Error(ErrorKind::kDimension, "nested_cv: label count mismatch");
  if (grid.empty()) throw Error(ErrorKind::kConfig, "nested_cv: empty grid");
  if (n < inner_folds + 1) throw Error(ErrorKind::kDegenerate, "nested_cv: too few samples for the inner folds");

  NestedCvResult result;
  result.predictions.assign(n, 0);
  result.chosen.assign(n, 0);
  std::vector<std::size_t> checks(n, 0);

  parallel_for(n, threads, [&](std::size_t held_out) {
    std::vector<std::size_t> outer_train;
    for (std::size_t i = 0; i < n; ++i) {
      if (i != held_out) outer_train.push_back(i);
    }
    const std::vector<std::size_t> held{held_out};
    assert_disjoint(outer_train, held, "held-out sample in outer training set");
    ++checks[held_out];
    const auto folds = stratified_folds(outer_train, y, inner_folds, derive_seed(seed, "outer", held_out));

    std::size_t best = 0;
    double best_f1 = -1.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      ClassifierParams params = grid[g].params;
      params.threads = 1;
      std::vector<int> truth, pred;
      for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<std::size_t> fit_rows;
        for (std::size_t o = 0; o < folds.size(); ++o) {
          if (o != f) fit_rows.insert(fit_rows.end(), folds[o].begin(), folds[o].end());
        }
        assert_disjoint(fit_rows, folds[f], "inner validation fold in inner training set");
        assert_disjoint(fit_rows, held, "held-out sample in inner training set");
        assert_disjoint(folds[f], held, "held-out sample in inner validation fold");
        checks[held_out] += 3;
        const ClassifierModel model = train(grid[g].kind, take_rows(x, fit_rows), take(y, fit_rows), params,
                                            derive_seed(seed, "inner-model", held_out * grid.size() + g));
        const auto p = predict(model, take_rows(x, folds[f]));
        const auto t = take(y, folds[f]);
        pred.insert(pred.end(), p.begin(), p.end());
        truth.insert(truth.end(), t.begin(), t.end());
      }
      const double f1 = evaluate(truth, pred).f1;
      if (f1 > best_f1) {
        best_f1 = f1;
        best = g;
      }
    }
    GridPoint chosen = grid[best];
    chosen.params.threads = 1;
    const ClassifierModel model = train(chosen.kind, take_rows(x, outer_train), take(y, outer_train),
                                        chosen.params, derive_seed(seed, "outer-model", held_out));
    result.predictions[held_out] = predict(model, take_rows(x, held)).front();
    result.chosen[held_out] = best;
  });

  result.outer_fits = n;
  result.leakage_checks = std::accumulate(checks.begin(), checks.end(), std::size_t{0});
  result.metrics = evaluate(y, result.predictions);
  return result;
}

json to_json(const NestedCvResult& r) {
  return {{"metrics", to_json(r.metrics)}, {"predictions", r.predictions}, {"chosen", r.chosen},
          {"outer_fits", r.outer_fits}, {"leakage_checks", r.leakage_checks}};
}

// --- lexicon profiles ------------------------------------------------------------

std::vector<std::string> Lexicon::categories() const {
  std::set<std::string> all;
  for (const auto& [w, cats] : exact) all.insert(cats.begin(), cats.end());
  for (const auto& [p, cats] : prefixes) all.insert(cats.begin(), cats.end());
  return {all.begin(), all.end()};
}

std::vector<std::string> Lexicon::categories_of(const std::string& word) const {
  std::set<std::string> out;
  if (auto it = exact.find(word); it != exact.end()) out.insert(it->second.begin(), it->second.end());
  for (const auto& [prefix, cats] : prefixes) {
    if (word.compare(0, prefix.size(), prefix) == 0) out.insert(cats.begin(), cats.end());
  }
  return {out.begin(), out.end()};
}

Lexicon parse_lexicon(const json& j) {
  if (!j.is_object() || j.empty()) throw Error(ErrorKind::kInput, "lexicon must be a nonempty JSON object");
  Lexicon lex;
  try {
    for (const auto& [key, value] : j.items()) {
      auto cats = value.get<std::vector<std::string>>();
      if (!key.empty() && key.back() == '*') {
        lex.prefixes.emplace_back(key.substr(0, key.size() - 1), std::move(cats));
      } else {
        lex.exact.emplace(key, std::move(cats));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInput, std::string("lexicon: ") + e.what());
  }
  return lex;
}

Lexicon read_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read lexicon " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInput, "lexicon " + path + ": " + e.what());
  }
  return parse_lexicon(j);
}

CategoryProfile category_profile(const std::string& method, const std::string& dataset,
                                 const std::vector<std::string>& top_words, const Lexicon& lexicon) {
  CategoryProfile p;
  p.method = method;
  p.dataset = dataset;
  p.top_words = top_words;
  for (const auto& c : lexicon.categories()) p.percent[c] = 0.0;
  if (top_words.empty()) return p;
  std::map<std::string, std::size_t> counts;
  for (const auto& w : top_words) {
    for (const auto& c : lexicon.categories_of(w)) ++counts[c];
  }
  for (const auto& [c, count] : counts) {
    p.percent[c] = 100.0 * static_cast<double>(count) / static_cast<double>(top_words.size());
  }
  return p;
}

json to_json(const CategoryProfile& p) {
  return {{"method", p.method}, {"dataset", p.dataset}, {"top_words", p.top_words}, {"percent", p.percent}};
}

std::map<std::string, double> stability(const std::vector<CategoryProfile>& profiles) {
  if (profiles.empty()) throw Error(ErrorKind::kInput, "stability: no profiles");
  // method -> dataset -> category -> percent
  std::map<std::string, std::map<std::string, std::map<std::string, double>>> grid;
  for (const auto& p : profiles) {
    auto& slot = grid[p.method][p.dataset];
    if (!slot.empty()) throw Error(ErrorKind::kInput, "stability: duplicate profile for " + p.method + "/" + p.dataset);
    slot = p.percent;
    if (slot.empty()) throw Error(ErrorKind::kInput, "stability: profile without categories");
  }
  const auto& reference = grid.begin()->second;
  for (const auto& [method, datasets] : grid) {
    bool same = datasets.size() == reference.size();
    for (auto a = datasets.begin(), b = reference.begin(); same && a != datasets.end(); ++a, ++b) {
      same = a->first == b->first && a->second.size() == b->second.size() &&
             std::equal(a->second.begin(), a->second.end(), b->second.begin(),
                        [](const auto& u, const auto& v) { return u.first == v.first; });
    }
    if (!same) throw Error(ErrorKind::kInput, "stability: method " + method + " covers a different grid");
  }

  const double n_methods = static_cast<double>(grid.size());
  std::map<std::string, double> sb;
  for (const auto& [method, datasets] : grid) sb[method] = 0.0;
  std::size_t cells = 0;
  for (const auto& [dataset, cats] : reference) {
    for (const auto& [cat, unused] : cats) {
      double consensus = 0.0;
      for (const auto& [method, datasets] : grid) consensus += datasets.at(dataset).at(cat);
      consensus /= n_methods;
      for (const auto& [method, datasets] : grid) {
        const double dev = consensus - datasets.at(dataset).at(cat);
        sb[method] += dev * dev;
      }
      ++cells;
    }
  }
  for (auto& [method, value] : sb) value /= static_cast<double>(cells);
  return sb;
}

}  // namespace cfs
