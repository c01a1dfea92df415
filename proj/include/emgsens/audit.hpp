#pragma once

#include <string>
#include <vector>

#include "emgsens/lmm.hpp"

namespace emgsens {

struct AuditConfig {
  double alpha = 0.05;      // FDR-adjusted p threshold
  double eta2_min = 0.06;   // partial eta^2 threshold
  bool fdr_per_demographic = false;  // default family: all pairs jointly
};

struct SensitivityResult {
  std::string feature_name;
  std::string demographic_name;
  double beta = 0.0;
  double p_raw = 1.0;
  double p_fdr = 1.0;
  double eta2_partial = 0.0;
  bool significant = false;
};

struct FeatureSensitivitySummary {
  std::string feature_name;
  int n_significant = 0;
  double eta2_sum = 0.0;
  double eta2_mean = 0.0;
  double eta2_max = 0.0;
  std::vector<std::string> top_demographics;  // significant ones, eta^2 desc
};

struct BoxStats {
  std::string demographic_name;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_lo = 0.0;  // 1.5*IQR rule
  double whisker_hi = 0.0;
  std::vector<double> outliers;
};

// Benjamini-Hochberg step-up adjusted p-values, input order preserved.
std::vector<double> bh_fdr(const std::vector<double>& p);

// Fills p_fdr, either over all rows jointly or per demographic family.
void apply_fdr(std::vector<SensitivityResult>& results, bool per_demographic);

// One row per (feature, demographic) pair from the per-feature fits, with
// FDR correction and the dual significance threshold applied.
std::vector<SensitivityResult> build_sensitivity(
    const std::vector<LmmFit>& fits, const std::vector<std::string>& demographics,
    const AuditConfig& cfg);

// Re-applies the dual threshold in place; returns the significant count.
int apply_dual_threshold(std::vector<SensitivityResult>& results,
                         const AuditConfig& cfg);

// Per-feature aggregates ranked by (n_significant desc, eta2_max desc, name).
std::vector<FeatureSensitivitySummary> aggregate_features(
    const std::vector<SensitivityResult>& results);

// Boxplot statistics of eta^2 per demographic, ordered by median descending.
std::vector<BoxStats> effectsize_distributions(
    const std::vector<SensitivityResult>& results);

}  // namespace emgsens
