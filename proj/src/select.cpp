#include "cfs/select.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>
#include <set>

#include "cfs/error.hpp"
#include "cfs/parallel.hpp"
#include "cfs/random.hpp"

namespace cfs {

using Eigen::Index;
using Eigen::MatrixXd;
using nlohmann::json;

std::string to_string(BinarizeRule rule) {
  return rule == BinarizeRule::kNonzero ? "nonzero" : "above_mean";
}

BinarizeRule parse_binarize_rule(const std::string& name) {
  if (name == "nonzero") return BinarizeRule::kNonzero;
  if (name == "above_mean") return BinarizeRule::kAboveMean;
  throw Error(ErrorKind::kConfig, "unknown binarize rule: " + name);
}

namespace {

std::string to_string(RefitMode m) { return m == RefitMode::kExact ? "exact" : "shared_model"; }

RefitMode parse_refit(const std::string& s) {
  if (s == "exact") return RefitMode::kExact;
  if (s == "shared_model") return RefitMode::kSharedModel;
  throw Error(ErrorKind::kConfig, "unknown refit mode: " + s);
}

std::string to_string(OutcomeTest t) {
  switch (t) {
    case OutcomeTest::kAuto: return "auto";
    case OutcomeTest::kMcNemar: return "mcnemar";
    case OutcomeTest::kPairedT: return "t";
  }
  return "auto";
}

OutcomeTest parse_test(const std::string& s) {
  if (s == "auto") return OutcomeTest::kAuto;
  if (s == "mcnemar") return OutcomeTest::kMcNemar;
  if (s == "t") return OutcomeTest::kPairedT;
  throw Error(ErrorKind::kConfig, "unknown test: " + s);
}

bool uses_reducer(const SelectionConfig& c) { return c.strategy == MatchStrategy::kLatentNnm; }

json reducer_options_json(const ReducerOptions& o) {
  return {{"spca_l1", o.spca_l1}, {"spca_max_iter", o.spca_max_iter}, {"spca_tol", o.spca_tol},
          {"mbdl_batch_size", o.mbdl_batch_size}, {"mbdl_epochs", o.mbdl_epochs}, {"mbdl_l1", o.mbdl_l1},
          {"lasso_max_sweeps", o.lasso_max_sweeps}, {"lasso_tol", o.lasso_tol},
          {"lda_alpha", o.lda_alpha}, {"lda_beta", o.lda_beta}, {"lda_sweeps", o.lda_sweeps},
          {"lda_average_last", o.lda_average_last}, {"lda_inference_sweeps", o.lda_inference_sweeps},
          {"lda_round_inputs", o.lda_round_inputs}};
}

template <typename T>
void read_key(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::kConfig, where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw Error(ErrorKind::kConfig, where + ": unknown key '" + key + "'");
  }
}

ReducerOptions reducer_options_from_json(const json& j) {
  ReducerOptions o;
  std::set<std::string> allowed;
  const json defaults = reducer_options_json(o);
  for (const auto& [key, value] : defaults.items()) allowed.insert(key);
  reject_unknown(j, allowed, "reducer_options");
  read_key(j, "spca_l1", o.spca_l1);
  read_key(j, "spca_max_iter", o.spca_max_iter);
  read_key(j, "spca_tol", o.spca_tol);
  read_key(j, "mbdl_batch_size", o.mbdl_batch_size);
  read_key(j, "mbdl_epochs", o.mbdl_epochs);
  read_key(j, "mbdl_l1", o.mbdl_l1);
  read_key(j, "lasso_max_sweeps", o.lasso_max_sweeps);
  read_key(j, "lasso_tol", o.lasso_tol);
  read_key(j, "lda_alpha", o.lda_alpha);
  read_key(j, "lda_beta", o.lda_beta);
  read_key(j, "lda_sweeps", o.lda_sweeps);
  read_key(j, "lda_average_last", o.lda_average_last);
  read_key(j, "lda_inference_sweeps", o.lda_inference_sweeps);
  read_key(j, "lda_round_inputs", o.lda_round_inputs);
  return o;
}

MatrixXd drop_column(const MatrixXd& x, std::size_t col) {
  const Index c = static_cast<Index>(col);
  MatrixXd out(x.rows(), x.cols() - 1);
  out.leftCols(c) = x.leftCols(c);
  out.rightCols(x.cols() - c - 1) = x.rightCols(x.cols() - c - 1);
  return out;
}

}  // namespace

void SelectionConfig::validate() const {
  if (schema_version != 1) throw Error(ErrorKind::kConfig, "unsupported schema_version");
  if (!(alpha > 0 && alpha < 1)) throw Error(ErrorKind::kConfig, "alpha must lie in (0, 1)");
  if (!(beta >= -1 && beta <= 1)) throw Error(ErrorKind::kConfig, "beta must lie in [-1, 1]");
  if (!(psm_caliper >= 0)) throw Error(ErrorKind::kConfig, "psm_caliper must be >= 0");
  if (!(psm_l2 > 0)) throw Error(ErrorKind::kConfig, "psm_l2 must be > 0");
  if (!(mdm_reg > 0)) throw Error(ErrorKind::kConfig, "mdm_reg must be > 0");
  if (uses_reducer(*this)) {
    if (reducer == "none") throw Error(ErrorKind::kConfig, "latent_nnm needs a reducer");
    if (reducer != "provided") {
      parse_reducer_method(reducer);
      if (k < 1) throw Error(ErrorKind::kConfig, "k must be >= 1");
    }
  } else if (reducer != "none" && reducer != "provided") {
    parse_reducer_method(reducer);
  }
}

json to_json(const SelectionConfig& c) {
  json j = {
      {"schema_version", c.schema_version},
      {"reducer", c.reducer},
      {"k", c.k},
      {"strategy", to_string(c.strategy)},
      {"beta", c.beta},
      {"psm_caliper", std::isinf(c.psm_caliper) ? json(nullptr) : json(c.psm_caliper)},
      {"psm_l2", c.psm_l2},
      {"mdm_reg", c.mdm_reg},
      {"alpha", c.alpha},
      {"binarize", to_string(c.binarize)},
      {"refit", to_string(c.refit)},
      {"seed", c.seed},
      {"with_replacement", c.with_replacement},
      {"test", to_string(c.test)},
      {"mcnemar",
       {{"continuity_correction", c.mcnemar.continuity_correction},
        {"counting", c.mcnemar.counting == McNemarCounting::kDiscordantPairs ? "discordant" : "marginal"}}},
      {"candidates", c.candidates ? json(*c.candidates) : json(nullptr)},
      {"reducer_options", reducer_options_json(c.reducer_options)},
      {"threads", c.threads},
  };
  return j;
}

SelectionConfig selection_config_from_json(const json& j) {
  SelectionConfig c;
  try {
    reject_unknown(j, {"schema_version", "reducer", "k", "strategy", "beta", "psm_caliper", "psm_l2", "mdm_reg",
                       "alpha", "binarize", "refit", "seed", "with_replacement", "test", "mcnemar",
                       "candidates", "reducer_options", "threads"},
                   "config");
    if (!j.contains("schema_version")) throw Error(ErrorKind::kConfig, "config: schema_version is required");
    read_key(j, "schema_version", c.schema_version);
    read_key(j, "reducer", c.reducer);
    read_key(j, "k", c.k);
    if (j.contains("strategy")) c.strategy = parse_match_strategy(j.at("strategy").get<std::string>());
    read_key(j, "beta", c.beta);
    if (j.contains("psm_caliper")) {
      c.psm_caliper = j.at("psm_caliper").is_null() ? INFINITY : j.at("psm_caliper").get<double>();
    }
    read_key(j, "psm_l2", c.psm_l2);
    read_key(j, "mdm_reg", c.mdm_reg);
    read_key(j, "alpha", c.alpha);
    if (j.contains("binarize")) c.binarize = parse_binarize_rule(j.at("binarize").get<std::string>());
    if (j.contains("refit")) c.refit = parse_refit(j.at("refit").get<std::string>());
    read_key(j, "seed", c.seed);
    read_key(j, "with_replacement", c.with_replacement);
    if (j.contains("test")) c.test = parse_test(j.at("test").get<std::string>());
    if (j.contains("mcnemar")) {
      const json& m = j.at("mcnemar");
      reject_unknown(m, {"continuity_correction", "counting"}, "mcnemar");
      read_key(m, "continuity_correction", c.mcnemar.continuity_correction);
      if (m.contains("counting")) {
        const auto s = m.at("counting").get<std::string>();
        if (s == "discordant") c.mcnemar.counting = McNemarCounting::kDiscordantPairs;
        else if (s == "marginal") c.mcnemar.counting = McNemarCounting::kMarginal;
        else throw Error(ErrorKind::kConfig, "unknown mcnemar counting: " + s);
      }
    }
    if (j.contains("candidates") && !j.at("candidates").is_null()) {
      c.candidates = j.at("candidates").get<std::vector<std::string>>();
    }
    if (j.contains("reducer_options")) c.reducer_options = reducer_options_from_json(j.at("reducer_options"));
    read_key(j, "threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

SelectionConfig read_selection_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, "config " + path + ": " + e.what());
  }
  return selection_config_from_json(j);
}

std::size_t FeatureReport::n_tested() const {
  return static_cast<std::size_t>(std::count_if(features.begin(), features.end(),
                                                [](const FeatureResult& f) { return f.tested(); }));
}

std::size_t FeatureReport::n_skipped() const { return features.size() - n_tested(); }

const FeatureResult* FeatureReport::find(std::string_view name) const {
  for (const auto& f : features) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

void rank_features(FeatureReport& report) {
  std::stable_sort(report.features.begin(), report.features.end(),
                   [](const FeatureResult& a, const FeatureResult& b) {
                     if (a.tested() != b.tested()) return a.tested();
                     if (a.tested() && *a.p_value != *b.p_value) return *a.p_value < *b.p_value;
                     if (a.name != b.name) return a.name < b.name;
                     return a.index < b.index;
                   });
}

std::vector<std::string> ranked_names(const FeatureReport& report) {
  std::vector<std::string> out;
  out.reserve(report.features.size());
  for (const auto& f : report.features) out.push_back(f.name);
  return out;
}

std::vector<std::string> select_by_alpha(const FeatureReport& report, double alpha) {
  FeatureReport sorted = report;
  rank_features(sorted);
  std::vector<std::string> out;
  for (const auto& f : sorted.features) {
    if (f.tested() && *f.p_value <= alpha) out.push_back(f.name);
  }
  return out;
}

FeatureReport run_selection(const LabeledDataset& data, const SelectionConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  data.validate();
  const std::size_t n = data.n_samples();
  const std::size_t d = data.n_features();
  if (n == 0) throw Error(ErrorKind::kInput, "empty dataset");
  if (d < 2) throw Error(ErrorKind::kInput, "selection needs at least two features");

  const MatrixXd& x = data.features.values;
  const bool latent = uses_reducer(config);
  const bool provided = latent && config.reducer == "provided";
  std::optional<ReducerMethod> method;
  if (latent && !provided) method = parse_reducer_method(config.reducer);
  if (provided && (!data.truth || data.truth->latent.rows() != static_cast<Index>(n))) {
    throw Error(ErrorKind::kInput, "reducer 'provided' needs a dataset with a latent matrix");
  }
  if (config.strategy == MatchStrategy::kGroundTruth && !data.truth) {
    throw Error(ErrorKind::kInput, "ground_truth matching needs twin pairs");
  }
  // LDA consumes raw counts when the dataset carries them.
  const MatrixXd& reducer_input =
      (method == ReducerMethod::kLda && data.counts) ? *data.counts : x;

  std::vector<bool> is_candidate(d, true);
  if (config.candidates) {
    std::fill(is_candidate.begin(), is_candidate.end(), false);
    for (const auto& name : *config.candidates) {
      const auto idx = data.features.index_of(name);
      if (!idx) throw Error(ErrorKind::kConfig, "candidate feature not in dataset: " + name);
      is_candidate[*idx] = true;
    }
  }

  std::optional<ReducerModel> shared;
  if (method && config.refit == RefitMode::kSharedModel) {
    shared = fit(*method, reducer_input, config.k, derive_seed(config.seed, "shared-model"),
                 config.reducer_options);
  }

  const std::vector<int>& y = data.labels;
  std::vector<FeatureResult> results(d);
  auto run_one = [&](std::size_t t) {
    FeatureResult& r = results[t];
    r.name = data.features.feature_names[t];
    r.index = t;
    if (!is_candidate[t]) {
      r.skip_reason = "not a candidate";
      return;
    }
    const std::uint64_t feature_seed = derive_seed(config.seed, "feature", t);
    const Eigen::VectorXd column = x.col(static_cast<Index>(t));
    const BinarizedTreatment treat =
        binarize_treatment({column.data(), static_cast<std::size_t>(column.size())}, config.binarize);
    if (treat.degenerate) {
      r.skip_reason = "degenerate treatment";
      return;
    }
    const GroupSplit split = split_groups(treat.values);

    MatchPairList pairs;
    switch (config.strategy) {
      case MatchStrategy::kLatentNnm: {
        MatrixXd rep;
        if (provided) {
          rep = data.truth->latent;
        } else if (shared) {
          rep = transform(*shared, reducer_input, t);
        } else {
          rep = fit(*method, drop_column(reducer_input, t), config.k,
                    derive_seed(feature_seed, "reducer"), config.reducer_options)
                    .training_latent;
        }
        pairs = nnm_match(split, rep, {config.beta, config.with_replacement}, MatchStrategy::kLatentNnm);
        break;
      }
      case MatchStrategy::kSurfaceNnm:
        pairs = nnm_match(split, drop_column(x, t), {config.beta, config.with_replacement},
                          MatchStrategy::kSurfaceNnm);
        break;
      case MatchStrategy::kPsm: {
        const MatrixXd rest = drop_column(x, t);
        const PropensityModel pm = fit_propensity(rest, treat.values, config.psm_l2);
        pairs = psm_match(split, pm.scores(rest), config.psm_caliper);
        break;
      }
      case MatchStrategy::kMdm:
        pairs = mdm_match(split, drop_column(x, t), config.mdm_reg);
        break;
      case MatchStrategy::kRandom:
        pairs = random_match(split, derive_seed(feature_seed, "match"));
        break;
      case MatchStrategy::kGroundTruth:
        pairs = ground_truth_match(split, data.truth->twin_pairs, n);
        break;
    }
    r.n_pairs = pairs.pairs.size();
    if (pairs.pairs.empty()) {
      r.skip_reason = "no surviving pairs";
      return;
    }
    PairedOutcomes po;
    po.treated.reserve(r.n_pairs);
    po.control.reserve(r.n_pairs);
    for (const auto& p : pairs.pairs) {
      po.treated.push_back(y[p.treated]);
      po.control.push_back(y[p.control]);
    }
    TestResult tr;
    if (config.test == OutcomeTest::kPairedT) {
      if (r.n_pairs < 2) {
        r.skip_reason = "too few pairs for t-test";
        return;
      }
      tr = paired_t_test(po);
    } else {
      tr = mcnemar(po, config.mcnemar);
    }
    r.p_value = tr.p_value;
    r.statistic = tr.statistic;
    r.direction = tr.direction;
    r.tn = tr.tn;
    r.cp = tr.cp;
    r.degenerate = tr.degenerate;
  };
  parallel_for(d, config.threads, run_one);

  FeatureReport report;
  report.method = config.strategy == MatchStrategy::kLatentNnm ? "cfs-" + config.reducer
                                                               : "cfs-" + to_string(config.strategy);
  report.config = to_json(config);
  report.config.erase("threads");  // results do not depend on it
  report.features = std::move(results);
  rank_features(report);
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

json to_json(const FeatureReport& report) {
  json features = json::array();
  for (const auto& f : report.features) {
    features.push_back({{"name", f.name},
                        {"index", f.index},
                        {"p_value", f.p_value ? json(*f.p_value) : json(nullptr)},
                        {"statistic", f.statistic},
                        {"direction", f.direction},
                        {"n_pairs", f.n_pairs},
                        {"tn", f.tn},
                        {"cp", f.cp},
                        {"degenerate", f.degenerate},
                        {"skip_reason", f.skip_reason.empty() ? json(nullptr) : json(f.skip_reason)}});
  }
  return {{"schema_version", 1},
          {"method", report.method},
          {"config", report.config},
          {"n_features", report.features.size()},
          {"n_tested", report.n_tested()},
          {"n_skipped", report.n_skipped()},
          {"ranking_degenerate", report.ranking_degenerate},
          {"features", features}};
}

FeatureReport feature_report_from_json(const json& j) {
  try {
    FeatureReport r;
    r.method = j.at("method").get<std::string>();
    r.config = j.value("config", json::object());
    r.ranking_degenerate = j.value("ranking_degenerate", false);
    for (const auto& f : j.at("features")) {
      FeatureResult fr;
      fr.name = f.at("name").get<std::string>();
      fr.index = f.at("index").get<std::size_t>();
      if (!f.at("p_value").is_null()) fr.p_value = f.at("p_value").get<double>();
      fr.statistic = f.value("statistic", 0.0);
      fr.direction = f.value("direction", 0);
      fr.n_pairs = f.value("n_pairs", std::size_t{0});
      fr.tn = f.value("tn", std::size_t{0});
      fr.cp = f.value("cp", std::size_t{0});
      fr.degenerate = f.value("degenerate", false);
      if (f.contains("skip_reason") && !f.at("skip_reason").is_null()) fr.skip_reason = f.at("skip_reason");
      r.features.push_back(std::move(fr));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInput, std::string("report json: ") + e.what());
  }
}

FeatureReport read_feature_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read report " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInput, "report " + path + ": " + e.what());
  }
  return feature_report_from_json(j);
}

void write_report_csv(const FeatureReport& report, std::ostream& out) {
  out << "feature,p_value,statistic,direction,n_pairs,skip_reason\n";
  const auto old = out.precision(17);
  for (const auto& f : report.features) {
    out << f.name << ',';
    if (f.p_value) out << *f.p_value;
    out << ',' << f.statistic << ',' << f.direction << ',' << f.n_pairs << ',' << f.skip_reason << '\n';
  }
  out.precision(old);
}

}  // namespace cfs
