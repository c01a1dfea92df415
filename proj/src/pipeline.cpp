#include "emgsens/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "emgsens/csv.hpp"
#include "emgsens/dataset.hpp"
#include "emgsens/errors.hpp"
#include "emgsens/mice.hpp"
#include "emgsens/report.hpp"
#include "emgsens/spls.hpp"
#include "emgsens/util.hpp"
#include "emgsens/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace emgsens {

namespace {

json feature_config_to_json(const FeatureConfig& f) {
  json j;
  j["zc_threshold"] = f.zc_threshold;
  j["ssc_threshold"] = f.ssc_threshold;
  j["wam_threshold"] = f.wam_threshold;
  j["hfd_kmax"] = f.hfd_kmax;
  j["fr_bands"] = {f.fr_low_lo_hz, f.fr_low_hi_hz, f.fr_high_lo_hz, f.fr_high_hi_hz};
  j["spectrum"] =
      f.spectrum == FeatureConfig::Spectrum::Welch ? "welch" : "periodogram";
  j["welch_segments"] = f.welch_segments;
  j["wpt_log_floor"] = f.wpt_log_floor;
  return j;
}

void feature_config_from_json(const json& j, FeatureConfig& f) {
  if (j.contains("zc_threshold")) f.zc_threshold = j.at("zc_threshold").get<double>();
  if (j.contains("ssc_threshold")) f.ssc_threshold = j.at("ssc_threshold").get<double>();
  if (j.contains("wam_threshold")) f.wam_threshold = j.at("wam_threshold").get<double>();
  if (j.contains("hfd_kmax")) f.hfd_kmax = j.at("hfd_kmax").get<int>();
  if (j.contains("fr_bands")) {
    const auto b = j.at("fr_bands").get<std::vector<double>>();
    if (b.size() != 4) throw ConfigError("features.fr_bands needs 4 edges");
    f.fr_low_lo_hz = b[0];
    f.fr_low_hi_hz = b[1];
    f.fr_high_lo_hz = b[2];
    f.fr_high_hi_hz = b[3];
  }
  if (j.contains("spectrum")) {
    const std::string s = j.at("spectrum").get<std::string>();
    if (s == "periodogram") {
      f.spectrum = FeatureConfig::Spectrum::Periodogram;
    } else if (s == "welch") {
      f.spectrum = FeatureConfig::Spectrum::Welch;
    } else {
      throw ConfigError("features.spectrum must be periodogram or welch");
    }
  }
  if (j.contains("welch_segments")) f.welch_segments = j.at("welch_segments").get<int>();
  if (j.contains("wpt_log_floor")) f.wpt_log_floor = j.at("wpt_log_floor").get<double>();
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

}  // namespace

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("cannot parse config: ") + e.what());
  }
  PipelineConfig c;
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    if (d.contains("path")) c.dataset_path = d.at("path").get<std::string>();
    if (d.contains("synthetic")) {
      c.synthetic = true;
      c.synth = synth_spec_from_json_text(d.at("synthetic").dump());
    }
  }
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("jobs")) c.jobs = j.at("jobs").get<int>();
  if (j.contains("window_fraction")) c.window_fraction = j.at("window_fraction").get<double>();
  if (j.contains("features")) feature_config_from_json(j.at("features"), c.features);
  if (j.contains("mice")) {
    const auto& m = j.at("mice");
    if (m.contains("iterations")) c.mice_iterations = m.at("iterations").get<int>();
    if (m.contains("noise")) c.mice_noise = m.at("noise").get<bool>();
  }
  if (j.contains("lmm")) {
    const auto& l = j.at("lmm");
    if (l.contains("max_iter")) c.lmm.max_iter = l.at("max_iter").get<int>();
    if (l.contains("grad_tol")) c.lmm.grad_tol = l.at("grad_tol").get<double>();
  }
  if (j.contains("audit")) {
    const auto& a = j.at("audit");
    if (a.contains("alpha")) c.audit.alpha = a.at("alpha").get<double>();
    if (a.contains("eta2_min")) c.audit.eta2_min = a.at("eta2_min").get<double>();
    if (a.contains("fdr_family")) {
      const std::string fam = a.at("fdr_family").get<std::string>();
      if (fam == "joint") {
        c.audit.fdr_per_demographic = false;
      } else if (fam == "per-demographic") {
        c.audit.fdr_per_demographic = true;
      } else {
        throw ConfigError("audit.fdr_family must be joint or per-demographic");
      }
    }
  }
  if (j.contains("spls")) {
    const auto& s = j.at("spls");
    if (s.contains("keep_x")) c.spls_keep_x = s.at("keep_x").get<int>();
    if (s.contains("components")) c.spls_components = s.at("components").get<int>();
    if (s.contains("folds")) c.spls_folds = s.at("folds").get<int>();
  }
  c.validate();
  return c;
}

void PipelineConfig::validate() const {
  if (dataset_path.empty() && !synthetic) {
    throw ConfigError("config: either dataset.path or dataset.synthetic is required");
  }
  if (!dataset_path.empty() && synthetic) {
    throw ConfigError("config: dataset.path and dataset.synthetic are exclusive");
  }
  if (window_fraction <= 0.0 || window_fraction > 1.0) {
    throw ConfigError("config: window_fraction must be in (0, 1]");
  }
  if (mice_iterations < 1) throw ConfigError("config: mice.iterations must be >= 1");
  if (lmm.max_iter < 1) throw ConfigError("config: lmm.max_iter must be >= 1");
  if (lmm.grad_tol <= 0.0) throw ConfigError("config: lmm.grad_tol must be positive");
  if (audit.alpha <= 0.0 || audit.alpha >= 1.0) {
    throw ConfigError("config: audit.alpha must be in (0, 1)");
  }
  if (audit.eta2_min < 0.0 || audit.eta2_min >= 1.0) {
    throw ConfigError("config: audit.eta2_min must be in [0, 1)");
  }
  if (spls_keep_x < 1) throw ConfigError("config: spls.keep_x must be >= 1");
  if (spls_components < 1) throw ConfigError("config: spls.components must be >= 1");
  if (spls_folds < 2) throw ConfigError("config: spls.folds must be >= 2");
  if (features.hfd_kmax < 2) throw ConfigError("config: features.hfd_kmax must be >= 2");
  if (synthetic) synth.validate();
}

std::string PipelineConfig::to_canonical_json() const {
  json j;
  if (synthetic) {
    j["dataset"]["synthetic"] = json::parse(synth_spec_to_json_text(synth));
  } else {
    j["dataset"]["path"] = dataset_path;
  }
  j["seed"] = seed;
  j["window_fraction"] = window_fraction;
  j["features"] = feature_config_to_json(features);
  j["mice"] = {{"iterations", mice_iterations}, {"noise", mice_noise}};
  j["lmm"] = {{"max_iter", lmm.max_iter}, {"grad_tol", lmm.grad_tol}};
  j["audit"] = {{"alpha", audit.alpha},
                {"eta2_min", audit.eta2_min},
                {"fdr_family", audit.fdr_per_demographic ? "per-demographic" : "joint"}};
  j["spls"] = {{"keep_x", spls_keep_x},
               {"components", spls_components},
               {"folds", spls_folds}};
  return j.dump();  // nlohmann orders keys, so this form is canonical
}

std::string PipelineConfig::config_hash() const {
  return to_hex(fnv1a64(to_canonical_json()));
}

Pipeline::Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  hash_ = cfg_.config_hash();
}

const std::vector<std::string>& Pipeline::stage_names() {
  static const std::vector<std::string> names = {
      "synth", "ingest", "impute", "extract", "fit", "audit", "pls", "report"};
  return names;
}

std::string Pipeline::manifest_path() const {
  if (cfg_.synthetic) return cfg_.out_dir + "/dataset/manifest.json";
  return cfg_.dataset_path;
}

std::string Pipeline::stamp_comment() const {
  return std::string("# ") + kToolName + " " + kVersion + " config=" + hash_;
}

std::vector<std::string> Pipeline::stage_outputs(const std::string& name) const {
  const std::string& o = cfg_.out_dir;
  if (name == "synth") {
    return {o + "/dataset/manifest.json", o + "/ground_truth.json"};
  }
  if (name == "ingest") return {o + "/ingest_summary.json"};
  if (name == "impute") {
    return {o + "/demographics_imputed.csv", o + "/imputation_report.json"};
  }
  if (name == "extract") return {o + "/features.csv", o + "/features.json"};
  if (name == "fit") return {o + "/lmm_results.csv", o + "/lmm_variance.csv"};
  if (name == "audit") {
    return {o + "/sensitivity.csv", o + "/feature_summary.csv",
            o + "/effect_sizes.json"};
  }
  if (name == "pls") {
    return {o + "/spls_loadings.csv", o + "/spls_q2.csv", o + "/cim_layout.json"};
  }
  if (name == "report") {
    return {o + "/fig1_ranking.svg", o + "/fig1_ranking.csv",
            o + "/fig2_effect_sizes.svg", o + "/fig2_effect_sizes.csv",
            o + "/fig3_heatmap.svg", o + "/fig3_heatmap.csv",
            o + "/fig4_cim.svg", o + "/fig4_cim.csv"};
  }
  throw ConfigError("unknown stage: " + name);
}

bool Pipeline::stage_cached(const std::string& name) const {
  const std::string stamp = cfg_.out_dir + "/.stamps/" + name + ".json";
  if (!fs::exists(stamp)) return false;
  try {
    const json j = json::parse(read_text_file(stamp));
    if (j.at("config_hash").get<std::string>() != hash_) return false;
  } catch (...) {
    return false;
  }
  for (const auto& out : stage_outputs(name)) {
    if (!fs::exists(out)) return false;
  }
  return true;
}

void Pipeline::write_stamp(const std::string& name) const {
  fs::create_directories(cfg_.out_dir + "/.stamps");
  json j;
  j["stage"] = name;
  j["config_hash"] = hash_;
  j["version"] = kVersion;
  write_text_file(cfg_.out_dir + "/.stamps/" + name + ".json", j.dump(2) + "\n");
}

bool Pipeline::run_stage(const std::string& name, std::ostream& log, bool force) {
  if (name == "synth" && !cfg_.synthetic) {
    return true;  // nothing to materialize
  }
  if (!force && stage_cached(name)) {
    log << "[" << name << "] cached\n";
    return true;
  }
  fs::create_directories(cfg_.out_dir);
  if (name == "synth") {
    do_synth(log);
  } else if (name == "ingest") {
    do_ingest(log);
  } else if (name == "impute") {
    do_impute(log);
  } else if (name == "extract") {
    do_extract(log);
  } else if (name == "fit") {
    do_fit(log);
  } else if (name == "audit") {
    do_audit(log);
  } else if (name == "pls") {
    do_pls(log);
  } else if (name == "report") {
    do_report(log);
  } else {
    throw ConfigError("unknown stage: " + name);
  }
  write_stamp(name);
  log << "[" << name << "] ok\n";
  return false;
}

void Pipeline::run_all(std::ostream& log, bool force) {
  for (const auto& name : stage_names()) run_stage(name, log, force);
}

void Pipeline::do_synth(std::ostream& log) {
  SynthSpec spec = cfg_.synth;
  if (cfg_.seed != 0) spec.seed = cfg_.seed;
  SynthResult r = generate_population(spec);
  write_dataset(cfg_.out_dir + "/dataset", r.tensors, r.demographics);
  write_text_file(cfg_.out_dir + "/ground_truth.json",
                  ground_truth_to_json_text(r.truth));
  log << "[synth] " << r.tensors.size() << " subjects, "
      << (r.tensors.empty() ? 0 : r.tensors[0].n_trials) << " trials each\n";
}

void Pipeline::do_ingest(std::ostream& log) {
  const LoadedDataset ds = load_dataset(manifest_path());
  json j;
  j["config_hash"] = hash_;
  j["version"] = kVersion;
  j["n_subjects"] = ds.tensors.size();
  std::size_t total_trials = 0;
  json subjects = json::array();
  for (const auto& t : ds.tensors) {
    total_trials += static_cast<std::size_t>(t.n_trials);
    subjects.push_back({{"id", t.subject_id},
                        {"n_trials", t.n_trials},
                        {"n_channels", t.n_channels},
                        {"n_samples", t.n_samples},
                        {"sampling_rate_hz", t.sampling_rate_hz}});
  }
  j["total_trials"] = total_trials;
  j["subjects"] = subjects;
  j["warnings"] = ds.warnings;
  write_text_file(cfg_.out_dir + "/ingest_summary.json", j.dump(2) + "\n");
  for (const auto& w : ds.warnings) log << "[ingest] warning: " << w << "\n";
}

void Pipeline::do_impute(std::ostream& log) {
  const DemographicTable table =
      load_demographics_csv(manifest_demographics_path(manifest_path()));
  const ExclusionResult excl = apply_exclusion(table);
  if (excl.empty_result) {
    log << "[impute] warning: exclusion removed every subject\n";
  }
  log << "[impute] excluded " << excl.n_removed << " subjects\n";

  MiceOptions opts;
  opts.n_iter = cfg_.mice_iterations;
  opts.noise = cfg_.mice_noise;
  opts.seed = Rng::derive_stream(cfg_.seed, fnv1a64("mice"));
  auto [completed, report] = mice_impute(excl.table, opts);

  write_demographics_csv(cfg_.out_dir + "/demographics_imputed.csv", completed,
                         {stamp_comment()});
  json j = json::parse(report.to_json_text());
  j["config_hash"] = hash_;
  j["version"] = kVersion;
  j["excluded_subjects"] = excl.removed_ids;
  write_text_file(cfg_.out_dir + "/imputation_report.json", j.dump(2) + "\n");
  log << "[impute] imputed " << report.cells.size() << " cells\n";
}

void Pipeline::do_extract(std::ostream& log) {
  const LoadedDataset ds = load_dataset(manifest_path());
  const FeatureMatrix fm = build_feature_matrix(ds.tensors, cfg_.window_fraction,
                                                cfg_.features, cfg_.jobs);
  save_feature_matrix(cfg_.out_dir + "/features.csv", fm, {stamp_comment()});

  json j;
  j["config_hash"] = hash_;
  j["version"] = kVersion;
  j["window_fraction"] = cfg_.window_fraction;
  j["feature_config"] = feature_config_to_json(cfg_.features);
  json cat = json::array();
  for (const auto& d : feature_catalog()) {
    cat.push_back({{"name", d.name},
                   {"domain", domain_tag(d.domain)},
                   {"params", d.params}});
  }
  j["catalog"] = cat;
  write_text_file(cfg_.out_dir + "/features.json", j.dump(2) + "\n");
  log << "[extract] " << fm.n_rows() << " rows x " << fm.feature_names.size()
      << " features\n";
}

void Pipeline::do_fit(std::ostream& log) {
  FeatureMatrix fm = load_feature_matrix(cfg_.out_dir + "/features.csv");
  const DemographicTable demo =
      load_demographics_csv(cfg_.out_dir + "/demographics_imputed.csv", false);

  // Subjects dropped by the exclusion rule are not modeled.
  const FeatureMatrix filtered = fm.filter_subjects(demo.subject_ids);
  if (filtered.n_rows() < fm.n_rows()) {
    log << "[fit] dropped " << (fm.n_rows() - filtered.n_rows())
        << " rows from excluded subjects\n";
  }

  const DesignData design = standardize_design(filtered, demo);
  const std::vector<LmmFit> fits = fit_all_features(design, cfg_.lmm, cfg_.jobs);

  CsvTable results;
  results.comments = {stamp_comment()};
  results.header = {"feature", "demographic", "beta", "se", "t", "p_raw",
                    "eta2_partial"};
  for (const auto& fit : fits) {
    for (int d = 0; d < static_cast<int>(design.fixed_names.size()); ++d) {
      results.rows.push_back({fit.feature_name, design.fixed_names[static_cast<std::size_t>(d)],
                              format_double(fit.beta[d + 1]),
                              format_double(fit.se[d + 1]),
                              format_double(fit.t[d + 1]),
                              format_double(fit.p[d + 1]),
                              format_double(fit.eta2[d])});
    }
  }
  write_csv(cfg_.out_dir + "/lmm_results.csv", results);

  CsvTable var;
  var.comments = {stamp_comment()};
  var.header = {"feature", "sigma2_subject", "sigma2_gesture", "sigma2_channel",
                "sigma2_residual", "r2_marginal", "r2_conditional",
                "loglik_reml", "converged", "n_obs"};
  int non_converged = 0;
  for (const auto& fit : fits) {
    if (!fit.converged) ++non_converged;
    var.rows.push_back({fit.feature_name,
                        format_double(fit.sigma2_random[0]),
                        format_double(fit.sigma2_random[1]),
                        format_double(fit.sigma2_random[2]),
                        format_double(fit.sigma2_residual),
                        format_double(fit.r2_marginal),
                        format_double(fit.r2_conditional),
                        format_double(fit.loglik_reml),
                        bool_str(fit.converged), std::to_string(fit.n_obs)});
  }
  write_csv(cfg_.out_dir + "/lmm_variance.csv", var);
  log << "[fit] " << fits.size() << " features";
  if (non_converged > 0) log << ", " << non_converged << " non-converged";
  log << "\n";
}

void Pipeline::do_audit(std::ostream& log) {
  const CsvTable results_csv = read_csv(cfg_.out_dir + "/lmm_results.csv");
  const int c_feature = results_csv.column("feature");
  const int c_demo = results_csv.column("demographic");
  const int c_beta = results_csv.column("beta");
  const int c_p = results_csv.column("p_raw");
  const int c_eta = results_csv.column("eta2_partial");
  if (c_feature < 0 || c_demo < 0 || c_beta < 0 || c_p < 0 || c_eta < 0) {
    throw DataError("lmm_results.csv: missing expected columns");
  }

  std::vector<SensitivityResult> results;
  results.reserve(results_csv.rows.size());
  for (const auto& row : results_csv.rows) {
    SensitivityResult r;
    r.feature_name = row[static_cast<std::size_t>(c_feature)];
    r.demographic_name = row[static_cast<std::size_t>(c_demo)];
    r.beta = std::stod(row[static_cast<std::size_t>(c_beta)]);
    r.p_raw = std::stod(row[static_cast<std::size_t>(c_p)]);
    r.eta2_partial = std::stod(row[static_cast<std::size_t>(c_eta)]);
    results.push_back(std::move(r));
  }
  apply_fdr(results, cfg_.audit.fdr_per_demographic);
  const int n_sig = apply_dual_threshold(results, cfg_.audit);

  CsvTable sens;
  sens.comments = {stamp_comment()};
  sens.header = {"feature", "demographic", "beta", "p_raw", "p_fdr",
                 "eta2_partial", "significant"};
  for (const auto& r : results) {
    sens.rows.push_back({r.feature_name, r.demographic_name,
                         format_double(r.beta), format_double(r.p_raw),
                         format_double(r.p_fdr), format_double(r.eta2_partial),
                         bool_str(r.significant)});
  }
  write_csv(cfg_.out_dir + "/sensitivity.csv", sens);

  const auto summaries = aggregate_features(results);
  CsvTable summary;
  summary.comments = {stamp_comment()};
  summary.header = {"rank", "feature", "n_significant", "eta2_sum",
                    "eta2_mean", "eta2_max", "top_demographics"};
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const auto& s = summaries[i];
    std::string tops;
    for (std::size_t k = 0; k < s.top_demographics.size(); ++k) {
      if (k) tops += ';';
      tops += s.top_demographics[k];
    }
    summary.rows.push_back({std::to_string(i + 1), s.feature_name,
                            std::to_string(s.n_significant),
                            format_double(s.eta2_sum), format_double(s.eta2_mean),
                            format_double(s.eta2_max), tops});
  }
  write_csv(cfg_.out_dir + "/feature_summary.csv", summary);

  const auto boxes = effectsize_distributions(results);
  json jb = json::array();
  for (const auto& b : boxes) {
    jb.push_back({{"demographic", b.demographic_name},
                  {"median", b.median},
                  {"q1", b.q1},
                  {"q3", b.q3},
                  {"whisker_lo", b.whisker_lo},
                  {"whisker_hi", b.whisker_hi},
                  {"outliers", b.outliers}});
  }
  json j;
  j["config_hash"] = hash_;
  j["version"] = kVersion;
  j["n_significant_pairs"] = n_sig;
  j["distributions"] = jb;
  write_text_file(cfg_.out_dir + "/effect_sizes.json", j.dump(2) + "\n");
  log << "[audit] " << n_sig << " significant pairs of " << results.size() << "\n";
}

void Pipeline::do_pls(std::ostream& log) {
  const FeatureMatrix fm = load_feature_matrix(cfg_.out_dir + "/features.csv");
  const DemographicTable demo =
      load_demographics_csv(cfg_.out_dir + "/demographics_imputed.csv", false);
  const FeatureMatrix filtered = fm.filter_subjects(demo.subject_ids);

  // Subject-level X: every feature averaged over gestures and channels.
  const auto subjects = filtered.unique_subjects();
  const int ns = static_cast<int>(subjects.size());
  const int pf = static_cast<int>(filtered.feature_names.size());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(ns, pf);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(ns);
  std::map<std::string, int> subj_index;
  for (int s = 0; s < ns; ++s) subj_index[subjects[static_cast<std::size_t>(s)]] = s;
  for (int r = 0; r < filtered.n_rows(); ++r) {
    const int s = subj_index[filtered.subjects[static_cast<std::size_t>(r)]];
    x.row(s) += filtered.values.row(r);
    counts[s] += 1.0;
  }
  for (int s = 0; s < ns; ++s) x.row(s) /= counts[s];

  Eigen::MatrixXd y(ns, kNumDemographics);
  for (int s = 0; s < ns; ++s) {
    const int row = demo.row_of(subjects[static_cast<std::size_t>(s)]);
    if (row < 0) throw DataError("pls: subject missing from imputed demographics");
    y.row(s) = demo.values.row(row);
  }

  auto standardize = [](Eigen::MatrixXd& m, const char* what) {
    for (int c = 0; c < m.cols(); ++c) {
      const double mean = m.col(c).mean();
      const double sd = std::sqrt((m.col(c).array() - mean).square().mean());
      if (sd <= 0.0) {
        throw NumericError(std::string("pls: zero-variance column in ") + what);
      }
      m.col(c) = (m.col(c).array() - mean) / sd;
    }
  };
  standardize(x, "features");
  standardize(y, "demographics");

  const int keep_x = std::min(cfg_.spls_keep_x, pf);
  const int max_comp =
      std::min({cfg_.spls_components, ns - 1, pf, kNumDemographics});
  if (max_comp < 1) throw DataError("pls: not enough subjects for one component");
  const int folds = std::min(cfg_.spls_folds, ns);

  SplsModel model = fit_spls(x, y, keep_x, max_comp);
  model.q2 = q2_crossval(x, y, max_comp, folds,
                         Rng::derive_stream(cfg_.seed, fnv1a64("spls-cv")), keep_x);

  CsvTable loadings;
  loadings.comments = {stamp_comment()};
  loadings.header = {"block", "name", "component", "loading"};
  for (int h = 0; h < model.n_components; ++h) {
    for (int i = 0; i < pf; ++i) {
      loadings.rows.push_back({"feature", filtered.feature_names[static_cast<std::size_t>(i)],
                               std::to_string(h + 1), format_double(model.u(i, h))});
    }
    for (int d = 0; d < kNumDemographics; ++d) {
      loadings.rows.push_back(
          {"demographic", demographic_columns()[static_cast<std::size_t>(d)],
           std::to_string(h + 1), format_double(model.v(d, h))});
    }
  }
  write_csv(cfg_.out_dir + "/spls_loadings.csv", loadings);

  CsvTable q2csv;
  q2csv.comments = {stamp_comment()};
  q2csv.header = {"component", "q2", "retained"};
  for (int h = 0; h < model.n_components; ++h) {
    q2csv.rows.push_back({std::to_string(h + 1), format_double(model.q2[h]),
                          bool_str(model.q2[h] > kQ2RetentionThreshold)});
  }
  write_csv(cfg_.out_dir + "/spls_q2.csv", q2csv);

  const CimLayout layout = build_cim(model);
  json j;
  j["config_hash"] = hash_;
  j["version"] = kVersion;
  j["metadata"] = {{"linkage", "complete"},
                   {"distance", "euclidean"},
                   {"component", 1},
                   {"keep_x", keep_x},
                   {"q2_threshold", kQ2RetentionThreshold}};
  j["features"] = filtered.feature_names;
  j["demographics"] = demographic_columns();
  j["row_order"] = layout.row_order;
  j["col_order"] = layout.col_order;
  auto merges_json = [](const Dendrogram& d) {
    json arr = json::array();
    for (const auto& m : d.merges) {
      arr.push_back({m.left, m.right, m.height, m.size});
    }
    return arr;
  };
  j["row_merges"] = merges_json(layout.row_dendrogram);
  j["col_merges"] = merges_json(layout.col_dendrogram);
  json cells = json::array();
  for (int r = 0; r < layout.cells.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < layout.cells.cols(); ++c) row.push_back(layout.cells(r, c));
    cells.push_back(row);
  }
  j["cells"] = cells;
  write_text_file(cfg_.out_dir + "/cim_layout.json", j.dump() + "\n");
  log << "[pls] " << model.n_components << " components, q2_1="
      << format_double(model.q2[0]) << "\n";
}

void Pipeline::do_report(std::ostream& log) {
  const CsvTable sens_csv = read_csv(cfg_.out_dir + "/sensitivity.csv");
  std::vector<SensitivityResult> results;
  for (const auto& row : sens_csv.rows) {
    SensitivityResult r;
    r.feature_name = row[0];
    r.demographic_name = row[1];
    r.beta = std::stod(row[2]);
    r.p_raw = std::stod(row[3]);
    r.p_fdr = std::stod(row[4]);
    r.eta2_partial = std::stod(row[5]);
    r.significant = row[6] == "true";
    results.push_back(std::move(r));
  }
  const auto summaries = aggregate_features(results);
  const auto boxes = effectsize_distributions(results);

  ReportContext ctx{cfg_.out_dir, stamp_comment()};
  emit_ranking_figure(ctx, summaries);
  emit_effectsize_figure(ctx, results, boxes);
  emit_heatmap_figure(ctx, results, summaries);

  const json cim = json::parse(read_text_file(cfg_.out_dir + "/cim_layout.json"));
  CimLayout layout;
  layout.row_order = cim.at("row_order").get<std::vector<int>>();
  layout.col_order = cim.at("col_order").get<std::vector<int>>();
  const auto cells = cim.at("cells");
  layout.cells = Eigen::MatrixXd(cells.size(), cells.at(0).size());
  for (int r = 0; r < layout.cells.rows(); ++r) {
    for (int c = 0; c < layout.cells.cols(); ++c) {
      layout.cells(r, c) = cells.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
    }
  }
  auto merges_from = [&cim](const char* key, Dendrogram& d) {
    for (const auto& m : cim.at(key)) {
      d.merges.push_back({m.at(0).get<int>(), m.at(1).get<int>(),
                          m.at(2).get<double>(), m.at(3).get<int>()});
    }
  };
  merges_from("row_merges", layout.row_dendrogram);
  merges_from("col_merges", layout.col_dendrogram);
  layout.row_dendrogram.leaf_order = layout.row_order;
  layout.col_dendrogram.leaf_order = layout.col_order;

  emit_cim_figure(ctx, layout, cim.at("features").get<std::vector<std::string>>(),
                  cim.at("demographics").get<std::vector<std::string>>());
  log << "[report] wrote 4 figures\n";
}

}  // namespace emgsens
