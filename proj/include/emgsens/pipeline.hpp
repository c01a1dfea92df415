#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "emgsens/audit.hpp"
#include "emgsens/features.hpp"
#include "emgsens/lmm.hpp"
#include "emgsens/synth.hpp"

namespace emgsens {

struct PipelineConfig {
  std::string dataset_path;  // manifest.json; empty when synthetic
  bool synthetic = false;
  SynthSpec synth;

  double window_fraction = 0.70;
  FeatureConfig features;

  int mice_iterations = 10;
  bool mice_noise = true;

  LmmOptions lmm;
  AuditConfig audit;

  int spls_keep_x = 50;
  int spls_components = 3;
  int spls_folds = 5;

  std::uint64_t seed = 0;
  int jobs = 0;
  std::string out_dir = "out";

  static PipelineConfig from_json_text(const std::string& text);
  std::string to_canonical_json() const;
  // Hash over the canonical form, excluding out_dir and jobs (neither
  // changes results).
  std::string config_hash() const;

  void validate() const;  // throws ConfigError
};

// Sequential stage runner with per-stage caching keyed by the config hash.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg);

  static const std::vector<std::string>& stage_names();

  // Runs one stage (of stage_names). Returns true when the cached outputs
  // were reused. force bypasses the cache.
  bool run_stage(const std::string& name, std::ostream& log, bool force = false);

  // Runs every stage in order.
  void run_all(std::ostream& log, bool force = false);

  const PipelineConfig& config() const { return cfg_; }
  std::string manifest_path() const;
  std::string stamp_comment() const;

 private:
  PipelineConfig cfg_;
  std::string hash_;

  std::vector<std::string> stage_outputs(const std::string& name) const;
  bool stage_cached(const std::string& name) const;
  void write_stamp(const std::string& name) const;

  void do_synth(std::ostream& log);
  void do_ingest(std::ostream& log);
  void do_impute(std::ostream& log);
  void do_extract(std::ostream& log);
  void do_fit(std::ostream& log);
  void do_audit(std::ostream& log);
  void do_pls(std::ostream& log);
  void do_report(std::ostream& log);
};

}  // namespace emgsens
