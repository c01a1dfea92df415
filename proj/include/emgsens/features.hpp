#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "emgsens/feature_catalog.hpp"
#include "emgsens/types.hpp"

namespace emgsens {

// Thresholds the underlying feature definitions leave open. Defaults follow
// common sEMG practice; all are exposed through the pipeline config.
struct FeatureConfig {
  double zc_threshold = 0.0;
  double ssc_threshold = 0.0;
  double wam_threshold = 0.05;  // mV
  int hfd_kmax = 8;
  double fr_low_lo_hz = 10.0;   // FR = P[low_lo, low_hi) / P[high_lo, high_hi)
  double fr_low_hi_hz = 100.0;
  double fr_high_lo_hz = 100.0;
  double fr_high_hi_hz = 500.0;
  enum class Spectrum { Periodogram, Welch } spectrum = Spectrum::Periodogram;
  int welch_segments = 8;
  double wpt_log_floor = 1e-12;
};

// The three single-channel blocks, each in catalog order.
Eigen::VectorXd compute_td(const Eigen::ArrayXd& window,
                           const FeatureConfig& cfg);
Eigen::VectorXd compute_fd(const Eigen::ArrayXd& window, double fs,
                           const FeatureConfig& cfg);
Eigen::VectorXd compute_tf(const Eigen::ArrayXd& window,
                           const FeatureConfig& cfg);

// Per-channel mean Pearson correlation with the remaining channels,
// computed over the windowed trial (rows = channels). Constant channels
// contribute r = 0 to every pair they appear in.
Eigen::VectorXd compute_xch(const Eigen::MatrixXd& windowed_channels);

// All 147 features for one channel of one trial; xch_value is that
// channel's entry from compute_xch.
Eigen::VectorXd compute_all(const Eigen::ArrayXd& window, double fs,
                            double xch_value, const FeatureConfig& cfg);

// Long-form per-(subject, gesture, channel) feature records, averaged over
// a subject's repeated trials of the same cell.
struct FeatureMatrix {
  std::vector<std::string> subjects;  // one entry per row
  std::vector<int> gestures;
  std::vector<int> channels;
  Eigen::MatrixXd values;             // n_rows x 147
  std::vector<std::string> feature_names;

  int n_rows() const { return static_cast<int>(subjects.size()); }
  std::vector<std::string> unique_subjects() const;

  // Rows restricted to the given subjects (order preserved).
  FeatureMatrix filter_subjects(const std::vector<std::string>& keep) const;
};

FeatureMatrix build_feature_matrix(const std::vector<TrialTensor>& tensors,
                                   double window_fraction,
                                   const FeatureConfig& cfg, int jobs);

void save_feature_matrix(const std::string& path, const FeatureMatrix& fm,
                         const std::vector<std::string>& comments);
FeatureMatrix load_feature_matrix(const std::string& path);

}  // namespace emgsens
