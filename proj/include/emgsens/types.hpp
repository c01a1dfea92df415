#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace emgsens {

inline constexpr int kNumDemographics = 12;

// Column order is fixed; demographics.csv must use exactly these names.
const std::array<std::string, kNumDemographics>& demographic_columns();
int demographic_index(const std::string& name);  // -1 when unknown

// One subject's recordings: trials x channels x samples, stored as the
// on-disk little-endian float32 stream so a write/load round trip is
// bit-identical.
struct TrialTensor {
  std::string subject_id;
  int n_trials = 0;
  int n_channels = 0;
  int n_samples = 0;
  double sampling_rate_hz = 0.0;
  std::vector<float> data;    // row-major [trial][channel][sample], millivolts
  std::vector<int> labels;    // gesture id per trial

  float at(int trial, int channel, int sample) const {
    return data[(static_cast<std::size_t>(trial) * n_channels + channel) *
                    n_samples +
                sample];
  }

  // One channel of one trial as doubles, restricted to [start, end).
  Eigen::ArrayXd channel_window(int trial, int channel, int start,
                                int end) const;

  std::size_t expected_size() const {
    return static_cast<std::size_t>(n_trials) * n_channels * n_samples;
  }
};

// Per-subject demographic rows with an explicit missingness mask. Values in
// missing cells are meaningless until imputed.
struct DemographicTable {
  std::vector<std::string> subject_ids;
  Eigen::MatrixXd values;            // n_subjects x 12
  std::vector<std::uint8_t> missing; // row-major n_subjects x 12, 1 = missing

  int n_rows() const { return static_cast<int>(subject_ids.size()); }
  bool is_missing(int row, int col) const {
    return missing[static_cast<std::size_t>(row) * kNumDemographics + col] != 0;
  }
  void set_missing(int row, int col, bool m) {
    missing[static_cast<std::size_t>(row) * kNumDemographics + col] = m ? 1 : 0;
  }
  int row_of(const std::string& subject_id) const;  // -1 when absent

  // Throws DataError when a column-range invariant is violated
  // (Age > 0, Sex in {0,1}, nonnegative physical measurements).
  void validate() const;
};

// Centered analysis window over a trial of n samples.
struct AnalysisWindow {
  int start = 0;
  int end = 0;          // exclusive
  double fraction = 0.70;

  int length() const { return end - start; }

  // start = floor((1-fraction)/2 * n), end = start + ceil(fraction * n).
  // Reproduces [600, 3400) for n = 4000 at the default fraction.
  static AnalysisWindow centered(int n_samples, double fraction = 0.70);
};

}  // namespace emgsens
